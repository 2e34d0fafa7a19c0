import random

import pytest
from hypothesis import given
from hypothesis import strategies as st

import oracles
from shiftdial.metrics import (
    DetectionInstance,
    SegmentationInstance,
    StatsTally,
    bleu4,
    bleu_tokenize,
    dataset_stats,
    detect_metrics,
    seg_metrics,
)
from shiftdial.postproc import read_dialogues

# Frozen from tests/oracles.py (exact fractions) and checked by hand:
# case 1 is (6/7 * 5/6 * 4/5 * 3/4) ** 0.25 = (3/7) ** 0.25.
BLEU_CASES = [
    ("the cat sat on the mat today", ["the cat sat on the mat"], 0.8091067115702212),
    ("The cat sat on the mat.", ["the cat sat on the red mat near the door ."], 0.37764976913718123),
    ("a cat sat on the mat and the dog sat on the rug",
     ["the cat sat on the mat", "a dog sat on the rug and a cat sat on the mat"], 0.6850836912969523),
    ("the the the cat sat on the mat", ["the cat sat on the mat"], 0.6803749333171202),
    ("he said : the cat sat on the mat , then left",
     ["the cat sat on the mat", "he said the cat sat on the mat and then he left"], 0.4961683000340363),
]


def labels_from_boundaries(n, bounds):
    out, cur = [], 0
    for t in range(n):
        if t in bounds:
            cur += 1
        out.append(cur)
    return out


def random_labels(rng, n):
    labels = [0]
    for _ in range(n - 1):
        labels.append(labels[-1] + (rng.random() < 0.3))
    return labels


def random_flags(rng, n, first_false=False):
    flags = [rng.random() < 0.3 for _ in range(n)]
    if first_false:
        flags[0] = False
    return flags


# -- segmentation -------------------------------------------------------------

def test_seg_perfect():
    r = seg_metrics([SegmentationInstance([0, 0, 1, 1], [0, 0, 1, 1])])
    assert (r.precision, r.recall, r.f1, r.exact_match) == (1, 1, 1, 1)


def test_seg_extra_boundary():
    inst = SegmentationInstance(labels_from_boundaries(8, {5}), labels_from_boundaries(8, {3, 5}))
    r = seg_metrics([inst])
    assert r.precision == 0.5 and r.recall == 1.0
    assert r.f1 == 2 * 0.5 * 1.0 / 1.5
    assert r.exact_match == 0


def test_seg_no_predicted_boundaries():
    r = seg_metrics([SegmentationInstance([0, 0, 1, 1], [0, 0, 0, 0])])
    assert (r.precision, r.recall, r.f1, r.exact_match) == (0, 0, 0, 0)


def test_seg_validation():
    with pytest.raises(ValueError, match="length"):
        SegmentationInstance([0, 0], [0])
    with pytest.raises(ValueError):
        SegmentationInstance([1, 1], [1, 1])
    with pytest.raises(ValueError):
        SegmentationInstance([0, 2], [0, 1])
    with pytest.raises(ValueError):
        seg_metrics([])


def test_seg_macro_differs_from_micro():
    insts = [
        SegmentationInstance([0, 1, 2, 3], [0, 1, 2, 3]),
        SegmentationInstance([0, 1], [0, 0]),
    ]
    micro, macro = seg_metrics(insts), seg_metrics(insts, average="macro")
    assert micro.recall == 3 / 4
    assert macro.recall == 0.5
    assert macro.precision == 0.5  # second dialogue predicts nothing -> 0 by convention


def test_seg_matches_oracle_on_random_instances():
    rng = random.Random(11)
    for _ in range(100):
        pairs = []
        for _ in range(rng.randint(1, 5)):
            n = rng.randint(1, 20)
            pairs.append((random_labels(rng, n), random_labels(rng, n)))
        got = seg_metrics([SegmentationInstance(g, p) for g, p in pairs]).to_dict()
        assert got == oracles.seg_oracle(pairs)


# -- detection ----------------------------------------------------------------

def test_detect_worked_example():
    F, T = False, True
    r = detect_metrics([DetectionInstance([F, F, T, F], [F, T, T, F])])
    assert r.turn_accuracy == 0.75
    assert r.precision == 0.5 and r.recall == 1.0
    assert r.f1 == 2 * 0.5 * 1.0 / 1.5
    assert r.exact_match == 0


def test_detect_perfect():
    insts = [DetectionInstance([False, True, False], [False, True, False]),
             DetectionInstance([False, False, True], [False, False, True])]
    r = detect_metrics(insts)
    assert (r.precision, r.recall, r.f1, r.exact_match, r.turn_accuracy) == (1, 1, 1, 1, 1)


def test_detect_validation():
    with pytest.raises(ValueError):
        DetectionInstance([False], [False, True])
    with pytest.raises(ValueError):
        DetectionInstance([True, False], [True, False])


def test_detect_matches_oracle_on_random_instances():
    rng = random.Random(12)
    pairs = []
    for _ in range(100):
        n = rng.randint(1, 20)
        pairs.append((random_flags(rng, n, first_false=True), random_flags(rng, n)))
    got = detect_metrics([DetectionInstance(g, p) for g, p in pairs]).to_dict()
    assert got == oracles.detect_oracle(pairs)


@given(st.integers(1, 20).flatmap(lambda n: st.lists(
    st.tuples(st.lists(st.booleans(), min_size=n, max_size=n),
              st.lists(st.booleans(), min_size=n, max_size=n)), min_size=1, max_size=10)))
def test_detect_fractions_bounded(pairs):
    insts = [DetectionInstance([False] + g[1:], p) for g, p in pairs]
    r = detect_metrics(insts)
    for v in (r.precision, r.recall, r.f1, r.exact_match, r.turn_accuracy):
        assert 0 <= v <= 1
    # with equal-length dialogues pooled accuracy is the mean per-dialogue accuracy
    assert r.exact_match <= r.turn_accuracy


def test_pooled_turn_accuracy_can_fall_below_exact_match():
    # a short perfect dialogue and a longer wrong one
    r = detect_metrics([DetectionInstance([False], [False]),
                        DetectionInstance([False, True], [True, False])])
    assert r.exact_match == 0.5
    assert r.turn_accuracy == 1 / 3


# -- BLEU ---------------------------------------------------------------------

def test_bleu_identity():
    assert bleu4("the cat sat on the mat", ["the cat sat on the mat"]) == 1.0


def test_bleu_short_candidate_is_zero():
    assert bleu4("the cat sat", ["the cat sat"]) == 0.0


def test_bleu_empty_candidate_is_zero():
    assert bleu4("", ["a b c d"]) == 0.0


def test_bleu_spec_clipping_example():
    # unigram 2/4, bigram 1/3, trigram 0/2 -> 0 without smoothing
    assert bleu4("the the the cat", ["the cat"]) == oracles.bleu4("the the the cat", ["the cat"]) == 0.0


@pytest.mark.parametrize("cand, refs, expected", BLEU_CASES)
def test_bleu_frozen_cases(cand, refs, expected):
    assert bleu4(cand, refs) == pytest.approx(expected, abs=1e-9)
    assert bleu4(cand, list(reversed(refs))) == pytest.approx(expected, abs=1e-9)


def test_bleu_tokenizer():
    assert bleu_tokenize("Hello, World!") == ["hello", ",", "world", "!"]


words = st.sampled_from("the a cat dog sat on mat rug , .".split())


@given(st.lists(words, min_size=4, max_size=15))
def test_bleu_self_is_one(tokens):
    text = " ".join(tokens)
    assert bleu4(text, [text]) == pytest.approx(1.0, abs=1e-12)


@given(st.lists(words, min_size=1, max_size=12),
       st.lists(st.lists(words, min_size=1, max_size=12), min_size=1, max_size=3))
def test_bleu_matches_oracle(cand, refs):
    cand, refs = " ".join(cand), [" ".join(r) for r in refs]
    got = bleu4(cand, refs)
    assert got == pytest.approx(oracles.bleu4(cand, refs), abs=1e-12)
    assert got == pytest.approx(bleu4(cand, refs[::-1]), abs=1e-12)
    assert 0 <= got <= 1 + 1e-12


# -- stats --------------------------------------------------------------------

STATS_THREE = {
    "num_dialogues": 3,
    "num_turns": 8,
    "avg_topics": 2.0,
    "avg_tokens_per_turn": 6.0,
    "num_unique_tokens": 28,
}


def load_three(fixtures_dir):
    with open(fixtures_dir / "stats_three.jsonl", encoding="utf-8") as fh:
        return list(read_dialogues(fh))


def test_stats_hand_counts(fixtures_dir):
    assert dataset_stats(load_three(fixtures_dir)) == STATS_THREE


def test_stats_single_dialogue(fixtures_dir):
    d1 = load_three(fixtures_dir)[0]
    assert dataset_stats([d1]) == {"num_dialogues": 1, "num_turns": 3, "avg_topics": 2.0,
                                   "avg_tokens_per_turn": 7.0, "num_unique_tokens": 12}


def test_stats_merge_is_order_free(fixtures_dir):
    ds = load_three(fixtures_dir)
    parts = []
    for d in ds:
        t = StatsTally()
        t.add(d)
        parts.append(t)
    left = parts[0].merge(parts[1]).merge(parts[2])
    right = parts[2].merge(parts[0].merge(parts[1]))
    assert left.report() == right.report() == STATS_THREE


def test_stats_empty_is_error():
    with pytest.raises(ValueError):
        dataset_stats([])
