use std::collections::HashMap;
use std::hash::Hash;

/// Length of the longest common subsequence.
///
/// Bit-parallel over `a` (one bit per position of `a`, 64 per word). Since
/// `u = v & match` is a subset of `v`, `v - u` is `v & !u` and only the
/// addition carries across words.
pub fn lcs_len<T: Eq + Hash>(a: &[T], b: &[T]) -> usize {
    if a.is_empty() || b.is_empty() {
        return 0;
    }
    if a.len() <= 64 {
        return lcs_len_short(a, b);
    }
    let words = a.len().div_ceil(64);
    let mut masks: HashMap<&T, Vec<u64>> = HashMap::new();
    for (i, tok) in a.iter().enumerate() {
        masks.entry(tok).or_insert_with(|| vec![0; words])[i / 64] |= 1 << (i % 64);
    }
    let mut v = vec![u64::MAX; words];
    let tail_bits = a.len() % 64;
    if tail_bits != 0 {
        v[words - 1] = (1u64 << tail_bits) - 1;
    }
    let tail_mask = v[words - 1];
    for tok in b {
        let Some(m) = masks.get(tok) else { continue };
        let mut carry = 0u64;
        for w in 0..words {
            let u = v[w] & m[w];
            let (s1, c1) = v[w].overflowing_add(u);
            let (s2, c2) = s1.overflowing_add(carry);
            carry = (c1 | c2) as u64;
            v[w] = s2 | (v[w] & !u);
        }
        v[words - 1] &= tail_mask;
    }
    a.len() - v.iter().map(|w| w.count_ones() as usize).sum::<usize>()
}

/// Single-word case with a fixed table of distinct tokens.
fn lcs_len_short<T: Eq>(a: &[T], b: &[T]) -> usize {
    let mut toks: [Option<&T>; 64] = [None; 64];
    let mut masks = [0u64; 64];
    let mut distinct = 0;
    for (i, tok) in a.iter().enumerate() {
        let slot = (0..distinct)
            .find(|&k| toks[k] == Some(tok))
            .unwrap_or_else(|| {
                toks[distinct] = Some(tok);
                distinct += 1;
                distinct - 1
            });
        masks[slot] |= 1 << i;
    }
    let full = if a.len() == 64 {
        u64::MAX
    } else {
        (1u64 << a.len()) - 1
    };
    let mut v = full;
    for tok in b {
        if let Some(k) = (0..distinct).find(|&k| toks[k] == Some(tok)) {
            let u = v & masks[k];
            v = (v.wrapping_add(u) | (v & !u)) & full;
        }
    }
    a.len() - v.count_ones() as usize
}

/// LCS-based F1 (beta = 1) of token sequences; 0 when either is empty.
pub fn rouge_l_f1<T: Eq + Hash>(candidate: &[T], reference: &[T]) -> f64 {
    let lcs = lcs_len(candidate, reference);
    if lcs == 0 {
        return 0.0;
    }
    let precision = lcs as f64 / candidate.len() as f64;
    let recall = lcs as f64 / reference.len() as f64;
    2.0 * precision * recall / (precision + recall)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dp_lcs(a: &[u8], b: &[u8]) -> usize {
        let mut t = vec![vec![0usize; b.len() + 1]; a.len() + 1];
        for i in 1..=a.len() {
            for j in 1..=b.len() {
                t[i][j] = if a[i - 1] == b[j - 1] {
                    t[i - 1][j - 1] + 1
                } else {
                    t[i - 1][j].max(t[i][j - 1])
                };
            }
        }
        t[a.len()][b.len()]
    }

    #[test]
    fn prefix_of_reference() {
        let c = ["the", "cat", "sat"];
        let r = ["the", "cat", "sat", "on", "the", "mat"];
        assert_eq!(lcs_len(&c, &r), 3);
        // P = 1, R = 0.5
        assert!((rouge_l_f1(&c, &r) - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn empty_sides() {
        let empty: [&str; 0] = [];
        assert_eq!(rouge_l_f1(&empty, &["a"]), 0.0);
        assert_eq!(rouge_l_f1(&["a"], &empty), 0.0);
    }

    #[test]
    fn multiword_matches_dp() {
        // sequences longer than one machine word
        let mut state = 12345u64;
        let mut next = || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state % 4) as u8
        };
        for (la, lb) in [(64, 64), (65, 10), (130, 129), (200, 7), (1, 300)] {
            let a: Vec<u8> = (0..la).map(|_| next()).collect();
            let b: Vec<u8> = (0..lb).map(|_| next()).collect();
            assert_eq!(lcs_len(&a, &b), dp_lcs(&a, &b), "{la}x{lb}");
            assert_eq!(lcs_len(&b, &a), dp_lcs(&a, &b));
        }
    }
}
