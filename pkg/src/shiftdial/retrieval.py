"""Passage retrieval for walk entities, sentence splitting and truncation."""

from __future__ import annotations

import json
import logging
import random
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterable, Mapping, Protocol
from urllib.parse import quote, unquote

from shiftdial._http import HttpCaller, RetryPolicy
from shiftdial.errors import NotFound, TransportError

logger = logging.getLogger(__name__)

ABBREVIATIONS = frozenset({
    "Mr.", "Mrs.", "Dr.", "St.", "e.g.", "i.e.", "etc.", "vs.", "Inc.", "Jr.", "Sr.", "U.S.",
})
TRUNCATE_MIN = 3
TRUNCATE_MAX = 6

Splitter = Callable[[str], list[str]]


@dataclass(frozen=True)
class Passage:
    entity: str
    sentences: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "sentences", tuple(self.sentences))
        if not self.sentences:
            raise ValueError(f"passage for {self.entity!r} has no sentences")
        if any(not s.strip() for s in self.sentences):
            raise ValueError(f"passage for {self.entity!r} contains an empty sentence")


@dataclass(frozen=True)
class TruncatedPassage:
    entity: str
    sentences: tuple[str, ...]
    source_length: int

    def __post_init__(self):
        object.__setattr__(self, "sentences", tuple(self.sentences))
        k = len(self.sentences)
        if not 1 <= k <= TRUNCATE_MAX or k > self.source_length:
            raise ValueError(f"truncated passage length {k} out of bounds (source {self.source_length})")
        if self.source_length >= TRUNCATE_MAX and k < TRUNCATE_MIN:
            raise ValueError(f"truncated passage keeps {k} < {TRUNCATE_MIN} sentences")


def _is_boundary(text: str, end: int) -> bool:
    # ``end`` is the index just past a terminal punctuation mark.
    j = end
    while j < len(text) and text[j].isspace():
        j += 1
    if j == len(text):
        return True
    return j > end and text[j].isupper()


def segment_sentences(text: str) -> list[str]:
    """Split ``text`` after ``.``, ``!`` or ``?`` when followed by whitespace
    and an uppercase letter, or by the end of the text.

    A period closing one of :data:`ABBREVIATIONS` never ends a sentence.

    >>> segment_sentences("Dr. Smith arrived. He left.")
    ['Dr. Smith arrived.', 'He left.']
    """
    sentences: list[str] = []
    start = 0
    for i, ch in enumerate(text):
        if ch not in ".!?" or not _is_boundary(text, i + 1):
            continue
        chunk = text[start:i + 1]
        if ch == ".":
            words = chunk.split()
            if words and words[-1] in ABBREVIATIONS:
                continue
        if chunk.strip():
            sentences.append(chunk.strip())
        start = i + 1
    tail = text[start:].strip()
    if tail:
        sentences.append(tail)
    return sentences


def truncate(passage: Passage, rng: random.Random) -> TruncatedPassage:
    """Keep the first ``min(m, randint(3, 6))`` sentences of the passage."""
    draw = rng.randint(TRUNCATE_MIN, TRUNCATE_MAX)
    k = min(len(passage.sentences), draw)
    return TruncatedPassage(passage.entity, passage.sentences[:k], len(passage.sentences))


class Retriever(Protocol):
    def retrieve(self, query: str) -> Passage: ...


def retrieve(retriever: Retriever, query: str) -> Passage:
    if not query or not query.strip():
        raise ValueError("query must be non-empty")
    return retriever.retrieve(query)


def _to_passage(entity: str, text: str, splitter: Splitter) -> Passage:
    sentences = [s for s in splitter(text) if s.strip()]
    if not sentences:
        raise NotFound(entity, "empty passage")
    return Passage(entity, tuple(sentences))


class LocalRetriever:
    """Looks passages up in an in-memory corpus keyed by entity name.

    Exact key match wins; otherwise a case-insensitive match is tried. When
    several keys fold to the same lowercase form the first one loaded wins.
    """

    def __init__(self, corpus: Mapping[str, str], splitter: Splitter = segment_sentences):
        self._texts = dict(corpus)
        self._folded: dict[str, str] = {}
        for key in self._texts:
            self._folded.setdefault(key.casefold(), key)
        self.splitter = splitter

    def __len__(self) -> int:
        return len(self._texts)

    @classmethod
    def from_jsonl(cls, lines: Iterable[str], **kwargs) -> "LocalRetriever":
        corpus: dict[str, str] = {}
        for line_no, line in enumerate(lines, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            try:
                rec = json.loads(line)
                entity, text = rec["entity"], rec["text"]
            except (json.JSONDecodeError, KeyError, TypeError) as e:
                raise ValueError(f"corpus line {line_no}: expected {{'entity', 'text'}} record") from e
            corpus.setdefault(entity, text)
        return cls(corpus, **kwargs)

    @classmethod
    def from_directory(cls, path: str | Path, **kwargs) -> "LocalRetriever":
        corpus = {
            unquote(p.stem): p.read_text(encoding="utf-8")
            for p in sorted(Path(path).glob("*.txt"))
        }
        return cls(corpus, **kwargs)

    @classmethod
    def load(cls, path: str | Path, **kwargs) -> "LocalRetriever":
        path = Path(path)
        if path.is_dir():
            return cls.from_directory(path, **kwargs)
        with open(path, encoding="utf-8") as fh:
            return cls.from_jsonl(fh, **kwargs)

    def retrieve(self, query: str) -> Passage:
        key = query if query in self._texts else self._folded.get(query.casefold())
        if key is None:
            raise NotFound(query)
        return _to_passage(query, self._texts[key], self.splitter)


def entity_filename(entity: str) -> str:
    """File name a directory corpus uses for ``entity``."""
    return quote(entity, safe="") + ".txt"


class RemoteRetriever:
    """Wiki-style API client: search for the entity, take the first hit, fetch its lead extract."""

    def __init__(self, base_url: str = "https://en.wikipedia.org/w/api.php", *,
                 timeout: float = 10.0, user_agent: str = "shiftdial/0.1 (dataset generation)",
                 max_in_flight: int = 4, retry: RetryPolicy | None = None,
                 splitter: Splitter = segment_sentences, **http_kwargs):
        self.base_url = base_url
        self.splitter = splitter
        self._http = HttpCaller(timeout=timeout, user_agent=user_agent,
                                max_in_flight=max_in_flight, retry=retry, **http_kwargs)

    def _get(self, params: dict[str, str]) -> dict:
        resp = self._http.request("GET", self.base_url, params={**params, "format": "json"})
        try:
            return resp.json()
        except ValueError as e:
            raise TransportError(f"non-JSON response from {self.base_url}") from e

    def search(self, query: str) -> str | None:
        data = self._get({"action": "query", "list": "search", "srsearch": query, "srlimit": "1"})
        hits = (data.get("query") or {}).get("search") or []
        return hits[0].get("title") if hits else None

    def extract(self, title: str) -> str:
        data = self._get({
            "action": "query", "prop": "extracts", "exintro": "1", "explaintext": "1",
            "redirects": "1", "titles": title,
        })
        pages = (data.get("query") or {}).get("pages") or {}
        if isinstance(pages, dict):
            pages = list(pages.values())
        for page in pages:
            if "missing" not in page and page.get("extract"):
                return page["extract"]
        return ""

    def retrieve(self, query: str) -> Passage:
        title = self.search(query)
        if not title:
            raise NotFound(query)
        text = self.extract(title)
        if not text.strip():
            raise NotFound(query, "empty extract")
        logger.debug("retrieved %r via page %r", query, title)
        return _to_passage(query, text, self.splitter)

    def close(self) -> None:
        self._http.close()


__all__ = [
    "ABBREVIATIONS", "LocalRetriever", "Passage", "RemoteRetriever", "Retriever",
    "TruncatedPassage", "entity_filename", "retrieve", "segment_sentences", "truncate",
]
