from .backends import (
    HttpChatBackend,
    MockBackend,
    ScriptedBackend,
    load_rulebook,
    make_backend,
)
from .chain import (
    ReasonerConfig,
    ReasonerTranscript,
    SemanticAssignment,
    TaskScores,
    run_chain,
    select_part,
)

__all__ = [
    "HttpChatBackend",
    "MockBackend",
    "ReasonerConfig",
    "ReasonerTranscript",
    "ScriptedBackend",
    "SemanticAssignment",
    "TaskScores",
    "load_rulebook",
    "make_backend",
    "run_chain",
    "select_part",
]
