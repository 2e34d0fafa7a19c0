"""Interleave truncated entity passages with the walk's relation sentences."""

from __future__ import annotations

import random
from dataclasses import dataclass

from shiftdial.errors import NotFound, SkipWalk
from shiftdial.kg import Walk
from shiftdial.retrieval import Retriever, TruncatedPassage, retrieve, truncate


@dataclass(frozen=True)
class MultiPassage:
    passages: tuple[TruncatedPassage, ...]
    relation_sentences: tuple[str, ...]
    walk_id: str

    def __post_init__(self):
        object.__setattr__(self, "passages", tuple(self.passages))
        object.__setattr__(self, "relation_sentences", tuple(self.relation_sentences))
        if not self.passages:
            raise ValueError("multi-passage needs at least one passage")
        if len(self.relation_sentences) != len(self.passages) - 1:
            raise ValueError("need exactly one relation sentence between consecutive passages")

    @property
    def entities(self) -> tuple[str, ...]:
        return tuple(p.entity for p in self.passages)

    def as_text(self) -> str:
        """Render p_1, R_1, p_2, ... as plain text blocks."""
        blocks = []
        for i, p in enumerate(self.passages):
            blocks.append(f"{p.entity}: " + " ".join(p.sentences))
            if i < len(self.relation_sentences):
                blocks.append(self.relation_sentences[i])
        return "\n".join(blocks)


def build_multipassage(walk: Walk, retriever: Retriever, rng: random.Random) -> MultiPassage:
    """Retrieve and truncate one passage per walk entity, in walk order.

    Raises SkipWalk naming the first entity without a passage. Transport
    errors from a remote retriever propagate unchanged.
    """
    passages = []
    for entity in walk.entities:
        try:
            passage = retrieve(retriever, entity)
        except NotFound:
            raise SkipWalk(entity) from None
        passages.append(truncate(passage, rng))
    return MultiPassage(tuple(passages), walk.relation_sentences, walk.walk_id)
