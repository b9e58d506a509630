use std::sync::OnceLock;

use regex::Regex;

struct Rules13a {
    rules: Vec<(Regex, &'static str)>,
}

fn rules() -> &'static Rules13a {
    static RULES: OnceLock<Rules13a> = OnceLock::new();
    RULES.get_or_init(|| {
        let compile = |re: &str| Regex::new(re).expect("static regex");
        Rules13a {
            rules: vec![
                // symbols and punctuation other than period, comma, dash and apostrophe
                (
                    compile(r"([\x7b-\x7e\x5b-\x60\x20-\x26\x28-\x2b\x3a-\x40\x2f])"),
                    " ${1} ",
                ),
                // period and comma unless preceded by a digit
                (compile(r"([^0-9])([\.,])"), "${1} ${2} "),
                // period and comma unless followed by a digit
                (compile(r"([\.,])([^0-9])"), " ${1} ${2}"),
                // dash preceded by a digit
                (compile(r"([0-9])(-)"), "${1} ${2} "),
                (compile(r"[\s\x1c-\x1f]+"), " "),
            ],
        }
    })
}

/// mteval-v13a tokenization as used by the standard BLEU scorer: unescapes a
/// few HTML entities, splits punctuation off words (keeping decimal points and
/// thousands separators inside numbers) and collapses whitespace.
pub fn tokenize_13a(line: &str) -> String {
    let mut line = line
        .replace("<skipped>", "")
        .replace("-\n", "")
        .replace('\n', " ")
        .replace("&quot;", "\"")
        .replace("&amp;", "&")
        .replace("&lt;", "<")
        .replace("&gt;", ">");
    line = format!(" {line} ");
    for (re, replacement) in &rules().rules {
        line = re.replace_all(&line, *replacement).into_owned();
    }
    line.trim().to_string()
}

/// Lowercased alphanumeric runs; the word tokenizer behind ROUGE-L and METEOR.
pub fn words(text: &str) -> Vec<String> {
    text.to_lowercase()
        .split(|c: char| !c.is_alphanumeric())
        .filter(|w| !w.is_empty())
        .map(str::to_string)
        .collect()
}
