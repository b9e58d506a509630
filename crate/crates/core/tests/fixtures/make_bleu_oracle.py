"""Regenerates bleu_oracle.json with the reference scorer.

Requires sacrebleu==1.5.0:

    python make_bleu_oracle.py > bleu_oracle.json

Each vector is a small corpus. ``references[i]`` holds the references of
segment ``i``; segments may have different reference counts (missing slots
are passed to the scorer as empty strings, which it drops).
"""
import json

import sacrebleu

assert sacrebleu.__version__ == "1.5.0", sacrebleu.__version__

VECTORS = [
    ("identical", ["The cat sat on the mat."], [["The cat sat on the mat."]]),
    ("one_extra_token", ["a b c d e"], [["a b c d"]]),
    ("brevity_penalty", ["the cat"], [["the cat sat on the mat"]]),
    ("zero_fourgram", ["the cat sat on a mat"], [["the cat is on the mat"]]),
    ("zero_tri_and_fourgram", ["the dog the cat"], [["the cat the dog ran"]]),
    ("no_overlap", ["x y z w"], [["a b c d"]]),
    (
        "closest_reference_length",
        ["A man is walking outside."],
        [["A man walks.", "A person is walking outside in the park."]],
    ),
    ("length_tie_prefers_shorter", ["a b c d e"], [["a b c d", "a b c d e f"]]),
    (
        "punctuation",
        ["Hello, world! It's 3.14 -- isn't it?"],
        [["Hello world, it is 3.14 isn't it?"]],
    ),
    ("digit_comma", ["It costs 1,000 dollars."], [["It costs 1,000 dollars ."]]),
    (
        "multi_segment_two_refs",
        [
            "Not all birds are a duck.",
            "A portrait is an image.",
            "The girl is not necessarily the man's daughter.",
        ],
        [
            ["Not all birds are ducks.", "A bird is not necessarily a duck."],
            ["Not all images are a portrait.", "An image is not always a portrait."],
            ["The girl may not be the daughter of the man.", "A girl is not a man."],
        ],
    ),
    ("case_sensitive", ["The Cat"], [["the cat"]]),
    ("empty_candidate", [""], [["a b c"]]),
    ("short_segment", ["a b"], [["a b"]]),
    ("clipping", ["the the the the the the the"], [["the cat is on the mat"]]),
    ("html_entities", ["Tom &amp; Jerry &quot;fun&quot;"], [['Tom & Jerry "fun"']]),
    ("digit_dash", ["pages 10-20 were read"], [["pages 10 - 20 were read"]]),
    (
        "mixed_lengths",
        [
            "Not all images are a portrait.",
            "A bird is not a duck.",
            "The steps are not necessarily inside the library.",
            "stress is a feeling.",
        ],
        [
            ["A person painting an image is not necessarily painting a portrait."],
            ["Not all birds are a duck. Flapping its wings does not imply swimming."],
            ["The steps could be outside the library."],
            ["applying for a job is stressful."],
        ],
    ),
    (
        "uneven_reference_counts",
        ["A man is sleeping.", "Dogs swim in a river."],
        [["A man sleeps.", "The man is sleeping."], ["Six dogs swim across the river."]],
    ),
    (
        "whitespace_and_newlines",
        ["A bird\nis flapping  its wings.   "],
        [["A bird is flapping its wings on the water."]],
    ),
]


def main():
    out = []
    for name, cands, refs in VECTORS:
        width = max(len(r) for r in refs)
        streams = [[r[k] if k < len(r) else "" for r in refs] for k in range(width)]
        score = sacrebleu.corpus_bleu(cands, streams, smooth_method="exp", tokenize="13a")
        out.append(
            {
                "name": name,
                "candidates": cands,
                "references": refs,
                "bleu": score.score,
            }
        )
    print(json.dumps(out, indent=2, ensure_ascii=False))


if __name__ == "__main__":
    main()
