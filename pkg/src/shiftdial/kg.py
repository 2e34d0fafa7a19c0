"""Entity knowledge graph of (subject, relation, object) triplets and walks over it."""

from __future__ import annotations

import hashlib
import json
import logging
import random
from dataclasses import dataclass, field
from pathlib import Path
from types import MappingProxyType
from typing import Iterable, Mapping

from shiftdial.errors import GraphLoadError

logger = logging.getLogger(__name__)

FIELDS = ("subject", "relation_label", "object", "relation_sentence")
DEFAULT_MAX_TOPICS = 4


@dataclass(frozen=True)
class Triplet:
    subject: str
    relation_label: str
    object: str
    relation_sentence: str

    def __post_init__(self):
        for name in FIELDS:
            value = getattr(self, name)
            if not isinstance(value, str) or not value.strip():
                raise ValueError(f"triplet field {name!r} must be non-empty text")
            object.__setattr__(self, name, value.strip())
        if self.subject == self.object:
            raise ValueError(f"self-loop triplet on {self.subject!r}")

    @property
    def key(self) -> tuple[str, str, str]:
        return (self.subject, self.relation_label, self.object)


@dataclass(frozen=True)
class KnowledgeGraph:
    """Immutable triplet store indexed by subject entity."""

    triplets: tuple[Triplet, ...]
    subject_index: Mapping[str, tuple[int, ...]]
    dropped_duplicates: int = 0
    dropped_self_loops: int = 0

    @classmethod
    def from_triplets(cls, triplets: Iterable[Triplet], *,
                      dropped_duplicates: int = 0, dropped_self_loops: int = 0) -> "KnowledgeGraph":
        kept: list[Triplet] = []
        seen: set[tuple[str, str, str]] = set()
        for t in triplets:
            if t.key in seen:
                dropped_duplicates += 1
                continue
            seen.add(t.key)
            kept.append(t)
        index: dict[str, list[int]] = {}
        for i, t in enumerate(kept):
            index.setdefault(t.subject, []).append(i)
        frozen = MappingProxyType({k: tuple(v) for k, v in index.items()})
        return cls(tuple(kept), frozen, dropped_duplicates, dropped_self_loops)

    def __len__(self) -> int:
        return len(self.triplets)

    @property
    def entities(self) -> set[str]:
        out = set(self.subject_index)
        out.update(t.object for t in self.triplets)
        return out


@dataclass(frozen=True)
class Walk:
    """Alternating path e_1, R_1, e_2, ..., e_n sampled from a graph."""

    entities: tuple[str, ...]
    relation_sentences: tuple[str, ...] = field(default=())

    def __post_init__(self):
        object.__setattr__(self, "entities", tuple(self.entities))
        object.__setattr__(self, "relation_sentences", tuple(self.relation_sentences))
        if not self.entities:
            raise ValueError("a walk needs at least one entity")
        if len(self.relation_sentences) != len(self.entities) - 1:
            raise ValueError("walk needs exactly one relation sentence between consecutive entities")
        if len(set(self.entities)) != len(self.entities):
            raise ValueError(f"walk revisits an entity: {self.entities}")

    @property
    def walk_id(self) -> str:
        payload = json.dumps([self.entities, self.relation_sentences], ensure_ascii=False)
        return hashlib.sha256(payload.encode("utf-8")).hexdigest()[:16]


def _parse_record(line: str, line_no: int) -> dict[str, str]:
    try:
        record = json.loads(line)
    except json.JSONDecodeError as e:
        raise GraphLoadError(f"invalid JSON ({e.msg})", line_no) from None
    if not isinstance(record, dict):
        raise GraphLoadError("record must be a JSON object", line_no)
    for name in FIELDS:
        value = record.get(name)
        if not isinstance(value, str) or not value.strip():
            raise GraphLoadError(f"missing or empty field {name!r}", line_no)
    return record


def load_graph(source: Iterable[str]) -> KnowledgeGraph:
    """Build a graph from JSON lines carrying the four triplet fields.

    Blank lines and lines starting with ``#`` are skipped. Self-loops and
    repeated (subject, relation_label, object) keys are dropped and counted.
    """
    triplets: list[Triplet] = []
    self_loops = 0
    for line_no, raw in enumerate(source, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        rec = _parse_record(line, line_no)
        if rec["subject"].strip() == rec["object"].strip():
            self_loops += 1
            continue
        triplets.append(Triplet(*(rec[name] for name in FIELDS)))

    graph = KnowledgeGraph.from_triplets(triplets, dropped_self_loops=self_loops)
    if graph.dropped_duplicates or graph.dropped_self_loops:
        logger.warning("dropped %d duplicate and %d self-loop triplets",
                       graph.dropped_duplicates, graph.dropped_self_loops)
    if not graph.triplets:
        raise GraphLoadError("graph is empty after loading")
    return graph


def load_graph_file(path: str | Path) -> KnowledgeGraph:
    with open(path, encoding="utf-8") as fh:
        return load_graph(fh)


def outgoing(graph: KnowledgeGraph, entity: str) -> list[Triplet]:
    return [graph.triplets[i] for i in graph.subject_index.get(entity, ())]


def sample_walk(graph: KnowledgeGraph, rng: random.Random,
                max_topics: int = DEFAULT_MAX_TOPICS) -> Walk:
    """Sample a walk by starting from a uniformly chosen triplet and extending it.

    Each step picks uniformly among the last entity's outgoing triplets whose
    object is not already on the walk. Stops at a dead end or once the walk
    holds ``max_topics`` entities.
    """
    if max_topics < 2:
        raise ValueError("max_topics must be at least 2")
    if not graph.triplets:
        raise ValueError("cannot sample from an empty graph")

    start = graph.triplets[rng.randrange(len(graph.triplets))]
    entities = [start.subject, start.object]
    sentences = [start.relation_sentence]
    visited = set(entities)
    while len(entities) < max_topics:
        options = [t for t in outgoing(graph, entities[-1]) if t.object not in visited]
        if not options:
            break
        step = options[rng.randrange(len(options))]
        entities.append(step.object)
        sentences.append(step.relation_sentence)
        visited.add(step.object)
    return Walk(tuple(entities), tuple(sentences))
