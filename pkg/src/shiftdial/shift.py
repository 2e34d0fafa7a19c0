"""Detect topic shifts in a live conversation and pass the verdict on to a responder."""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Protocol, Sequence

from shiftdial.assembler import MultiPassage

SHIFT_NOTE = "Note: the topic has shifted in this turn."
RESPONDER_INSTRUCTION = (
    "Answer the last question of the dialogue using the passages below. "
    "Reply with a single answer sentence."
)

# Exactly 50 entries; tests pin the size.
STOPWORDS = frozenset("""
a an the and or but if of to in on at by for with from as about
is are was were be been it its this that these those
what which who whose when where why how
do does did can
i you he she we they his her
""".split())

_WORD = re.compile(r"[a-z0-9]+")


@dataclass(frozen=True)
class ShiftVerdict:
    is_shift: bool
    detector_name: str


class ShiftDetector(Protocol):
    name: str

    def detect(self, history: Sequence[tuple[str, str]], new_question: str) -> bool: ...


def content_tokens(text: str) -> set[str]:
    return {w for w in _WORD.findall(text.lower()) if w not in STOPWORDS}


class LexicalDetector:
    """Flags a shift when the question shares no content word with the last two QA turns."""

    name = "lexical"
    window = 2

    def detect(self, history: Sequence[tuple[str, str]], new_question: str) -> bool:
        if not history:
            return False
        recent: set[str] = set()
        for question, answer in history[-self.window:]:
            recent |= content_tokens(question) | content_tokens(answer)
        return not (content_tokens(new_question) & recent)


def detect_shift(detector: ShiftDetector, history: Sequence[tuple[str, str]],
                 new_question: str) -> ShiftVerdict:
    if not new_question or not new_question.strip():
        raise ValueError("new_question must be non-empty")
    return ShiftVerdict(bool(detector.detect(list(history), new_question)), detector.name)


def augment_responder_input(passages: MultiPassage, history: Sequence[tuple[str, str]],
                            question: str, verdict: ShiftVerdict) -> str:
    """Responder prompt: passages, dialogue so far, then the question.

    With a positive verdict the fixed :data:`SHIFT_NOTE` line goes right
    before the question; nothing else changes.
    """
    lines = [RESPONDER_INSTRUCTION, "", "PASSAGES", passages.as_text(), "", "DIALOGUE"]
    for q, a in history:
        lines += [f"A: {q}", f"B: {a}"]
    if verdict.is_shift:
        lines.append(SHIFT_NOTE)
    lines += [f"A: {question}", "B:"]
    return "\n".join(lines)


class ShiftAwareResponder:
    """Runs detection before each response and feeds the verdict into the prompt.

    ``client`` is anything with ``complete(prompt) -> str``, normally
    :class:`shiftdial.qgen.ChatClient`.
    """

    def __init__(self, detector: ShiftDetector, client):
        self.detector = detector
        self.client = client

    def respond(self, passages: MultiPassage, history: Sequence[tuple[str, str]],
                question: str) -> tuple[str, ShiftVerdict]:
        verdict = detect_shift(self.detector, history, question)
        prompt = augment_responder_input(passages, history, question, verdict)
        return self.client.complete(prompt), verdict
