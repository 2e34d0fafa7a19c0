"""Rule-based cleanup of generated questions and the final dialogue record."""

from __future__ import annotations

import hashlib
import json
import re
from dataclasses import dataclass, field, replace
from typing import Iterable, Iterator

from shiftdial.qgen import QATurn, RawDialogue, check_topic_sequence

_SPEAKER_PREFIX = re.compile(r"^\s*[AB]: *")


def strip_speaker_prefix(question: str) -> str:
    """Remove one leading ``A:``/``B:`` speaker tag, then trim."""
    return _SPEAKER_PREFIX.sub("", question, count=1).strip()


@dataclass(frozen=True)
class GeneratorMeta:
    generator: str
    model: str | None = None
    seed: int | None = None

    def to_dict(self) -> dict:
        return {"generator": self.generator, "model": self.model, "seed": self.seed}


@dataclass(frozen=True)
class Dialogue:
    id: str
    turns: tuple[QATurn, ...]
    entities: tuple[str, ...]
    segment_labels: tuple[int, ...]
    meta: GeneratorMeta = field(default_factory=lambda: GeneratorMeta("unknown"))

    def __post_init__(self):
        object.__setattr__(self, "turns", tuple(self.turns))
        object.__setattr__(self, "entities", tuple(self.entities))
        object.__setattr__(self, "segment_labels", tuple(self.segment_labels))
        if len(self.segment_labels) != len(self.turns):
            raise ValueError("one segment label per turn required")
        for t, label in zip(self.turns, self.segment_labels):
            if label != t.topic_index - 1:
                raise ValueError("segment label must equal topic_index - 1")

    @property
    def shift_flags(self) -> list[bool]:
        return [t.is_topic_shift for t in self.turns]

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "entities": list(self.entities),
            "turns": [t.to_dict() for t in self.turns],
            "segment_labels": list(self.segment_labels),
            "meta": self.meta.to_dict(),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), ensure_ascii=False)

    @classmethod
    def from_dict(cls, d: dict) -> "Dialogue":
        meta = d.get("meta") or {}
        turns = tuple(QATurn.from_dict(t) for t in d["turns"])
        check_topic_sequence(turns)
        return cls(
            id=str(d["id"]),
            turns=turns,
            entities=tuple(d.get("entities") or ()),
            segment_labels=tuple(int(x) for x in d["segment_labels"]),
            meta=GeneratorMeta(meta.get("generator", "unknown"), meta.get("model"), meta.get("seed")),
        )


def _content_id(entities, turns, meta: GeneratorMeta) -> str:
    payload = json.dumps(
        {"entities": list(entities), "turns": [t.to_dict() for t in turns], "meta": meta.to_dict()},
        ensure_ascii=False, sort_keys=True,
    )
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()[:16]


def finalize_dialogue(raw: RawDialogue, meta: GeneratorMeta) -> Dialogue:
    turns = tuple(replace(t, question=strip_speaker_prefix(t.question)) for t in raw.turns)
    labels = tuple(t.topic_index - 1 for t in turns)
    return Dialogue(_content_id(raw.entities, turns, meta), turns, raw.entities, labels, meta)


def read_dialogues(lines: Iterable[str]) -> Iterator[Dialogue]:
    for line_no, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            yield Dialogue.from_dict(json.loads(line))
        except (ValueError, KeyError, TypeError) as e:
            raise ValueError(f"dialogue line {line_no}: {e}") from e
