"""Template-based question answering over an RDF knowledge base."""

from ._core import (
    Config,
    ConfigError,
    Error,
    FormatError,
    KnowledgeBase,
    ParseError,
    Session,
    StageError,
    StaticHashArray,
    corpus_stats,
    decompose,
    em,
    normalize,
    run_offline,
    tokenize,
)

__all__ = [
    "Config",
    "ConfigError",
    "Error",
    "FormatError",
    "KnowledgeBase",
    "ParseError",
    "Session",
    "StageError",
    "StaticHashArray",
    "corpus_stats",
    "decompose",
    "em",
    "normalize",
    "run_offline",
    "tokenize",
]
