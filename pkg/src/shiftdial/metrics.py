"""Topic segmentation / shift detection scores, BLEU-4 and corpus statistics."""

from __future__ import annotations

import math
import re
from collections import Counter
from dataclasses import asdict, dataclass, field
from typing import Iterable, Sequence

from shiftdial.postproc import Dialogue


@dataclass(frozen=True)
class SegmentationInstance:
    gold_labels: tuple[int, ...]
    pred_labels: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "gold_labels", tuple(self.gold_labels))
        object.__setattr__(self, "pred_labels", tuple(self.pred_labels))
        if len(self.gold_labels) != len(self.pred_labels):
            raise ValueError(f"label length mismatch: gold {len(self.gold_labels)} "
                             f"vs pred {len(self.pred_labels)}")
        _check_labels(self.gold_labels, "gold")
        _check_labels(self.pred_labels, "pred")


@dataclass(frozen=True)
class DetectionInstance:
    gold: tuple[bool, ...]
    pred: tuple[bool, ...]

    def __post_init__(self):
        object.__setattr__(self, "gold", tuple(bool(x) for x in self.gold))
        object.__setattr__(self, "pred", tuple(bool(x) for x in self.pred))
        if len(self.gold) != len(self.pred):
            raise ValueError(f"length mismatch: gold {len(self.gold)} vs pred {len(self.pred)}")
        if self.gold and self.gold[0]:
            raise ValueError("the first turn cannot be a gold topic shift")


@dataclass(frozen=True)
class MetricsReport:
    precision: float
    recall: float
    f1: float
    exact_match: float
    turn_accuracy: float | None = None

    def to_dict(self) -> dict:
        d = asdict(self)
        if self.turn_accuracy is None:
            del d["turn_accuracy"]
        return d


def _check_labels(labels: Sequence[int], which: str) -> None:
    if not labels:
        return
    if labels[0] != 0:
        raise ValueError(f"{which} labels must start at 0")
    for prev, cur in zip(labels, labels[1:]):
        if not 0 <= cur - prev <= 1:
            raise ValueError(f"{which} labels must be non-decreasing with steps of at most 1")


def boundaries(labels: Sequence[int]) -> set[int]:
    """Turn indices t >= 1 where a new segment starts."""
    return {t for t in range(1, len(labels)) if labels[t] > labels[t - 1]}


def _ratio(num: int, den: int) -> float:
    return num / den if den else 0.0


def _f1(p: float, r: float) -> float:
    return 2 * p * r / (p + r) if p + r else 0.0


def _prf(tp: int, fp: int, fn: int) -> tuple[float, float, float]:
    p, r = _ratio(tp, tp + fp), _ratio(tp, tp + fn)
    return p, r, _f1(p, r)


def _average(counts: list[tuple[int, int, int]], average: str) -> tuple[float, float, float]:
    if average == "micro":
        return _prf(*(sum(c[i] for c in counts) for i in range(3)))
    if average == "macro":
        per = [_prf(*c) for c in counts]
        p = sum(x[0] for x in per) / len(per)
        r = sum(x[1] for x in per) / len(per)
        return p, r, _f1(p, r)
    raise ValueError(f"average must be 'micro' or 'macro', got {average!r}")


def seg_metrics(instances: Sequence[SegmentationInstance], average: str = "micro") -> MetricsReport:
    """Boundary precision/recall/F1 plus the share of dialogues segmented exactly.

    A denominator of zero yields 0 for that ratio. Macro averaging takes the
    mean of per-dialogue precision and recall, F1 is their harmonic mean.
    """
    if not instances:
        raise ValueError("no segmentation instances")
    counts = []
    for inst in instances:
        gold, pred = boundaries(inst.gold_labels), boundaries(inst.pred_labels)
        counts.append((len(gold & pred), len(pred - gold), len(gold - pred)))
    p, r, f1 = _average(counts, average)
    em = sum(inst.gold_labels == inst.pred_labels for inst in instances) / len(instances)
    return MetricsReport(p, r, f1, em)


def detect_metrics(instances: Sequence[DetectionInstance], average: str = "micro") -> MetricsReport:
    if not instances:
        raise ValueError("no detection instances")
    counts = []
    correct = total = exact = 0
    for inst in instances:
        pairs = list(zip(inst.gold, inst.pred))
        counts.append((
            sum(g and p for g, p in pairs),
            sum(p and not g for g, p in pairs),
            sum(g and not p for g, p in pairs),
        ))
        hits = sum(g == p for g, p in pairs)
        correct += hits
        total += len(pairs)
        exact += hits == len(pairs)
    p, r, f1 = _average(counts, average)
    return MetricsReport(p, r, f1, exact / len(instances), _ratio(correct, total))


_TOKEN = re.compile(r"\w+|[^\w\s]")


def bleu_tokenize(text: str) -> list[str]:
    """Lowercase, split on whitespace and detach punctuation marks."""
    return _TOKEN.findall(text.lower())


def _ngrams(tokens: Sequence[str], n: int) -> Counter:
    return Counter(tuple(tokens[i:i + n]) for i in range(len(tokens) - n + 1))


def bleu4(candidate: str, references: Sequence[str]) -> float:
    """Sentence-level BLEU-4, uniform weights, no smoothing.

    Any zero n-gram precision gives 0. Brevity penalty uses the reference
    length closest to the candidate (shorter wins ties).
    """
    if not references:
        raise ValueError("at least one reference is required")
    cand = bleu_tokenize(candidate)
    if not cand:
        return 0.0
    refs = [bleu_tokenize(r) for r in references]

    log_sum = 0.0
    for n in range(1, 5):
        counts = _ngrams(cand, n)
        if not counts:
            return 0.0
        max_ref: Counter = Counter()
        for ref in refs:
            max_ref |= _ngrams(ref, n)
        clipped = sum(min(c, max_ref[g]) for g, c in counts.items())
        if clipped == 0:
            return 0.0
        log_sum += math.log(clipped / sum(counts.values()))

    c = len(cand)
    r = min((len(ref) for ref in refs), key=lambda length: (abs(length - c), length))
    bp = 1.0 if c >= r else math.exp(1 - r / c)
    return bp * math.exp(log_sum / 4)


@dataclass
class StatsTally:
    """Partial corpus counts. ``merge`` is associative, so workers can tally
    disjoint shards and combine the results in any order."""

    dialogues: int = 0
    turns: int = 0
    topics: int = 0
    tokens: int = 0
    vocabulary: set = field(default_factory=set)

    def add(self, dialogue: Dialogue) -> None:
        self.dialogues += 1
        self.turns += len(dialogue.turns)
        self.topics += len(set(dialogue.segment_labels))
        for t in dialogue.turns:
            words = t.question.split() + t.answer.split()
            self.tokens += len(words)
            self.vocabulary.update(w.lower() for w in words)

    def merge(self, other: "StatsTally") -> "StatsTally":
        return StatsTally(self.dialogues + other.dialogues, self.turns + other.turns,
                          self.topics + other.topics, self.tokens + other.tokens,
                          self.vocabulary | other.vocabulary)

    def report(self) -> dict:
        return {
            "num_dialogues": self.dialogues,
            "num_turns": self.turns,
            "avg_topics": _ratio(self.topics, self.dialogues),
            "avg_tokens_per_turn": _ratio(self.tokens, self.turns),
            "num_unique_tokens": len(self.vocabulary),
        }


def dataset_stats(dialogues: Iterable[Dialogue]) -> dict:
    """Corpus summary: dialogue and turn counts, mean topics per dialogue,
    mean whitespace tokens per turn (question + answer) and the number of
    distinct lowercased tokens."""
    tally = StatsTally()
    for d in dialogues:
        tally.add(d)
    if not tally.dialogues:
        raise ValueError("no dialogues to summarize")
    return tally.report()
