"""Synthesize topic-shifting conversational QA dialogues from a knowledge graph.

The pipeline walks an entity graph, retrieves one passage per entity, turns
every passage sentence into an answer with a generated question, and marks
the relation-sentence turns that bridge one topic to the next. Evaluation
helpers score segmentation, shift detection and BLEU-4.
"""

from shiftdial.assembler import MultiPassage, build_multipassage
from shiftdial.errors import (
    ConfigError,
    EmptyGeneration,
    GraphLoadError,
    NotFound,
    PipelineError,
    SkipWalk,
    TransportError,
)
from shiftdial.kg import KnowledgeGraph, Triplet, Walk, load_graph, outgoing, sample_walk
from shiftdial.postproc import Dialogue, finalize_dialogue, strip_speaker_prefix
from shiftdial.qgen import (
    ChatGenerator,
    PromptContext,
    QATurn,
    RawDialogue,
    SourceKind,
    StubGenerator,
    dialogue_from_multipassage,
    render_prompt,
)
from shiftdial.retrieval import (
    LocalRetriever,
    Passage,
    RemoteRetriever,
    TruncatedPassage,
    segment_sentences,
    truncate,
)

__version__ = "0.1.0"

__all__ = [
    "ChatGenerator",
    "ConfigError",
    "Dialogue",
    "EmptyGeneration",
    "GraphLoadError",
    "KnowledgeGraph",
    "LocalRetriever",
    "MultiPassage",
    "NotFound",
    "Passage",
    "PipelineError",
    "PromptContext",
    "QATurn",
    "RawDialogue",
    "RemoteRetriever",
    "SkipWalk",
    "SourceKind",
    "StubGenerator",
    "TransportError",
    "Triplet",
    "TruncatedPassage",
    "Walk",
    "build_multipassage",
    "dialogue_from_multipassage",
    "finalize_dialogue",
    "load_graph",
    "outgoing",
    "render_prompt",
    "sample_walk",
    "segment_sentences",
    "strip_speaker_prefix",
    "truncate",
]
