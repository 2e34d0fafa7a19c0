"""Turn a multi-passage into QA turns by generating a question for every answer sentence."""

from __future__ import annotations

import enum
import logging
import os
import string
from dataclasses import dataclass, field
from typing import Protocol

from shiftdial._http import HttpCaller, RetryPolicy
from shiftdial.assembler import MultiPassage
from shiftdial.errors import EmptyGeneration, PipelineError, TransportError

logger = logging.getLogger(__name__)

SYSTEM_INSTRUCTION = (
    "You are an automatic assistant that generates appropriate question based on the "
    "predefined answer. Generate a single question that is most suitable for the given "
    "dialogue history and target answer."
)
FILL_INSTRUCTION = "Please fill in only [BLANK] in the next dialogue."
SHIFT_INSTRUCTION = "Note that the conversation topic has changed into {next_topic} from {current_topic}."

API_KEY_ENV = "MP2D_API_KEY"
BASE_URL_ENV = "MP2D_BASE_URL"
DEFAULT_BASE_URL = "https://api.openai.com/v1"


class SourceKind(str, enum.Enum):
    PASSAGE_SENTENCE = "PassageSentence"
    RELATION_SENTENCE = "RelationSentence"


@dataclass(frozen=True)
class QATurn:
    question: str
    answer: str
    topic_index: int
    is_topic_shift: bool
    source_kind: SourceKind

    def __post_init__(self):
        object.__setattr__(self, "source_kind", SourceKind(self.source_kind))
        if self.topic_index < 1:
            raise ValueError("topic_index starts at 1")
        if self.is_topic_shift != (self.source_kind is SourceKind.RELATION_SENTENCE):
            raise ValueError("is_topic_shift must be set exactly on relation-sentence turns")

    def to_dict(self) -> dict:
        return {
            "question": self.question,
            "answer": self.answer,
            "topic_index": self.topic_index,
            "is_topic_shift": self.is_topic_shift,
            "source_kind": self.source_kind.value,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "QATurn":
        return cls(d["question"], d["answer"], int(d["topic_index"]),
                   bool(d["is_topic_shift"]), SourceKind(d["source_kind"]))


def check_topic_sequence(turns) -> None:
    expected = 1
    for i, turn in enumerate(turns):
        if turn.source_kind is SourceKind.RELATION_SENTENCE:
            expected += 1
        if turn.topic_index != expected:
            raise ValueError(f"turn {i}: topic_index {turn.topic_index}, expected {expected}")


@dataclass(frozen=True)
class RawDialogue:
    turns: tuple[QATurn, ...]
    entities: tuple[str, ...]
    walk_id: str

    def __post_init__(self):
        object.__setattr__(self, "turns", tuple(self.turns))
        object.__setattr__(self, "entities", tuple(self.entities))
        check_topic_sequence(self.turns)


@dataclass(frozen=True)
class PromptContext:
    history: tuple[tuple[str, str], ...]
    target_answer: str
    shift: tuple[str, str] | None = field(default=None)

    def __post_init__(self):
        object.__setattr__(self, "history", tuple((q, a) for q, a in self.history))


def render_prompt(ctx: PromptContext) -> str:
    """Fill-in-the-blank question generation prompt for one target answer.

    The topic-change line only appears when ``ctx.shift`` is set, as
    ``(current_topic, next_topic)``.
    """
    if not ctx.target_answer.strip():
        raise ValueError("target answer must be non-empty")
    lines = [SYSTEM_INSTRUCTION, FILL_INSTRUCTION]
    if ctx.shift is not None:
        current, nxt = ctx.shift
        lines.append(SHIFT_INSTRUCTION.format(next_topic=nxt, current_topic=current))
    lines += ["", "START"]
    for question, answer in ctx.history:
        lines += [f"A: {question}", f"B: {answer}"]
    lines += ["A: [BLANK]", f"B: {ctx.target_answer}", "END"]
    return "\n".join(lines)


class QuestionGenerator(Protocol):
    kind: str
    model: str | None

    def generate(self, ctx: PromptContext) -> str: ...


class StubGenerator:
    """Deterministic offline generator built from the answer's first five words."""

    kind = "stub"
    model = None

    def generate(self, ctx: PromptContext) -> str:
        words = [w.strip(string.punctuation) for w in ctx.target_answer.split()[:5]]
        head = " ".join(w for w in words if w)
        return f"What can you tell me about {head}?" if head else "What can you tell me about?"


class ChatClient:
    """Minimal chat-completions client (OpenAI-compatible wire format).

    Safe to share between threads; at most ``max_in_flight`` requests are
    on the wire at once.
    """

    def __init__(self, model: str, *, api_key: str | None = None, base_url: str | None = None,
                 timeout: float = 60.0, max_in_flight: int = 4,
                 retry: RetryPolicy | None = None, temperature: float = 0.0, **http_kwargs):
        api_key = api_key if api_key is not None else os.environ.get(API_KEY_ENV)
        if not api_key:
            raise PipelineError(f"no API key; set {API_KEY_ENV}")
        self.model = model
        self.temperature = temperature
        self.base_url = (base_url or os.environ.get(BASE_URL_ENV) or DEFAULT_BASE_URL).rstrip("/")
        self._http = HttpCaller(timeout=timeout, max_in_flight=max_in_flight, retry=retry,
                                headers={"Authorization": f"Bearer {api_key}"}, **http_kwargs)

    def complete(self, prompt: str) -> str:
        if not prompt:
            raise ValueError("prompt must be non-empty")
        payload = {
            "model": self.model,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": self.temperature,
            "n": 1,
        }
        resp = self._http.request("POST", f"{self.base_url}/chat/completions", json=payload)
        try:
            choice = resp.json()["choices"][0]
        except (ValueError, KeyError, IndexError, TypeError) as e:
            raise TransportError(f"malformed chat completion response: {e!r}") from e
        message = choice.get("message") or {}
        text = (message.get("content") if isinstance(message, dict) else None) or choice.get("text") or ""
        text = text.strip()
        if not text:
            raise EmptyGeneration("chat completion returned no text")
        return text

    def close(self) -> None:
        self._http.close()


class ChatGenerator:
    kind = "llm"

    def __init__(self, client: ChatClient):
        self.client = client

    @property
    def model(self) -> str:
        return self.client.model

    def generate(self, ctx: PromptContext) -> str:
        return self.client.complete(render_prompt(ctx))


def generate_question(generator: QuestionGenerator, ctx: PromptContext) -> str:
    question = generator.generate(ctx)
    if not question or not question.strip():
        raise EmptyGeneration(f"{generator.kind} generator returned an empty question")
    return question


def dialogue_from_multipassage(mp: MultiPassage, generator: QuestionGenerator) -> RawDialogue:
    """Generate the dialogue D_1, (Q_R1, R_1), D_2, ..., D_n for ``mp``.

    Every question sees all earlier turns as history. A relation-sentence turn
    gets the topic-change instruction and already belongs to the next topic.
    Errors raised while generating carry the 0-based ``turn_index``.
    """
    turns: list[QATurn] = []

    def emit(answer: str, topic: int, shift: tuple[str, str] | None) -> None:
        ctx = PromptContext(tuple((t.question, t.answer) for t in turns), answer, shift)
        try:
            question = generate_question(generator, ctx)
        except PipelineError as e:
            e.turn_index = len(turns)
            raise
        kind = SourceKind.PASSAGE_SENTENCE if shift is None else SourceKind.RELATION_SENTENCE
        turns.append(QATurn(question, answer, topic, shift is not None, kind))

    entities = mp.entities
    for i, passage in enumerate(mp.passages):
        for sentence in passage.sentences:
            emit(sentence, i + 1, None)
        if i < len(mp.relation_sentences):
            emit(mp.relation_sentences[i], i + 2, (entities[i], entities[i + 1]))
    return RawDialogue(tuple(turns), entities, mp.walk_id)
