"""End-to-end generation: walk, retrieve, generate questions, finalize."""

from __future__ import annotations

import hashlib
import logging
import os
import random
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, fields
from typing import IO, Iterator

from shiftdial.assembler import build_multipassage
from shiftdial.errors import ConfigError, SkipWalk
from shiftdial.kg import DEFAULT_MAX_TOPICS, KnowledgeGraph, sample_walk
from shiftdial.postproc import Dialogue, GeneratorMeta, finalize_dialogue
from shiftdial.qgen import API_KEY_ENV, QuestionGenerator, dialogue_from_multipassage
from shiftdial.retrieval import Retriever

logger = logging.getLogger(__name__)

MAX_WALK_ATTEMPTS = 10
GENERATORS = ("stub", "llm")


def derive_seed(seed: int, ordinal: int) -> int:
    """64-bit per-dialogue seed: first 8 bytes of sha256("<seed>:<ordinal>")."""
    digest = hashlib.sha256(f"{seed}:{ordinal}".encode("ascii")).digest()
    return int.from_bytes(digest[:8], "big")


@dataclass
class RunConfig:
    graph_path: str | None = None
    corpus_path: str | None = None
    remote_base_url: str | None = None
    remote_timeout: float = 10.0
    user_agent: str = "shiftdial/0.1 (dataset generation)"
    output_path: str | None = None
    n_dialogues: int = 10
    seed: int = 0
    max_topics: int = DEFAULT_MAX_TOPICS
    generator: str = "stub"
    model_name: str | None = None
    concurrency: int = 1

    def validate(self, env: dict | None = None) -> "RunConfig":
        env = os.environ if env is None else env
        if not self.graph_path:
            raise ConfigError("a graph file is required (--graph)")
        if not self.output_path:
            raise ConfigError("an output path is required (--out)")
        if bool(self.corpus_path) == bool(self.remote_base_url):
            raise ConfigError("configure exactly one of --corpus or --remote-base-url")
        if self.n_dialogues < 1:
            raise ConfigError(f"n must be >= 1, got {self.n_dialogues}")
        if self.max_topics < 2:
            raise ConfigError(f"max_topics must be >= 2, got {self.max_topics}")
        if self.concurrency < 1:
            raise ConfigError(f"concurrency must be >= 1, got {self.concurrency}")
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed must be a 64-bit unsigned integer")
        if self.generator not in GENERATORS:
            raise ConfigError(f"generator must be one of {GENERATORS}, got {self.generator!r}")
        if self.generator == "llm":
            if not self.model_name:
                raise ConfigError("the llm generator needs a model name (--model)")
            if not env.get(API_KEY_ENV):
                raise ConfigError(f"the llm generator needs an API key in {API_KEY_ENV}")
        return self

    @classmethod
    def field_names(cls) -> list[str]:
        return [f.name for f in fields(cls)]


@dataclass
class JobResult:
    ordinal: int
    dialogue: Dialogue | None
    attempts: int
    skipped: list[str] = field(default_factory=list)


def generate_dialogue(ordinal: int, *, graph: KnowledgeGraph, retriever: Retriever,
                      generator: QuestionGenerator, seed: int,
                      max_topics: int = DEFAULT_MAX_TOPICS,
                      max_attempts: int = MAX_WALK_ATTEMPTS) -> JobResult:
    """Produce dialogue number ``ordinal``; a walk hitting a missing passage is
    replaced by a fresh one drawn from the same per-dialogue random source."""
    dialogue_seed = derive_seed(seed, ordinal)
    rng = random.Random(dialogue_seed)
    skipped: list[str] = []
    for attempt in range(1, max_attempts + 1):
        walk = sample_walk(graph, rng, max_topics)
        try:
            mp = build_multipassage(walk, retriever, rng)
        except SkipWalk as e:
            logger.info("dialogue %d: %s", ordinal, e)
            skipped.append(e.entity)
            continue
        raw = dialogue_from_multipassage(mp, generator)
        meta = GeneratorMeta(generator.kind, generator.model, dialogue_seed)
        return JobResult(ordinal, finalize_dialogue(raw, meta), attempt, skipped)
    logger.warning("dialogue %d: gave up after %d skipped walks", ordinal, max_attempts)
    return JobResult(ordinal, None, max_attempts, skipped)


def iter_dialogues(n: int, *, concurrency: int = 1, **job_kwargs) -> Iterator[JobResult]:
    """Yield job results in ordinal order whatever order workers finish in."""
    if concurrency == 1:
        for i in range(n):
            yield generate_dialogue(i, **job_kwargs)
        return
    with ThreadPoolExecutor(max_workers=concurrency) as pool:
        yield from pool.map(lambda i: generate_dialogue(i, **job_kwargs), range(n))


@dataclass
class RunSummary:
    written: int = 0
    requested: int = 0
    walk_attempts: int = 0
    walks_skipped: int = 0

    @property
    def skip_rate(self) -> float:
        return self.walks_skipped / self.walk_attempts if self.walk_attempts else 0.0

    @property
    def degraded(self) -> bool:
        return self.skip_rate > 0.5 or self.written < self.requested


def write_dialogues(out: IO[str], n: int, **kwargs) -> RunSummary:
    summary = RunSummary(requested=n)
    for result in iter_dialogues(n, **kwargs):
        summary.walk_attempts += result.attempts
        summary.walks_skipped += len(result.skipped)
        if result.dialogue is not None:
            out.write(result.dialogue.to_json() + "\n")
            summary.written += 1
        if (result.ordinal + 1) % 100 == 0:
            logger.info("%d/%d dialogues done", result.ordinal + 1, n)
    return summary
