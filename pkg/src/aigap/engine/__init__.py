from .analyzer import MIN_VISITS, Analyzer
from .cache import CacheCorrupt, CacheFormatError, CacheKey, EvalCache
from .client import JsonLinesEngine
from .scripted import ScriptedEngine, state_value, value_of_score
from .types import (
    Candidate,
    EngineError,
    EngineEvaluation,
    EngineParams,
    EngineTimeout,
    EngineUnavailable,
    MissingEvaluation,
    ProtocolViolation,
)

__all__ = [
    "Analyzer",
    "CacheCorrupt",
    "CacheFormatError",
    "CacheKey",
    "Candidate",
    "EngineError",
    "EngineEvaluation",
    "EngineParams",
    "EngineTimeout",
    "EngineUnavailable",
    "EvalCache",
    "JsonLinesEngine",
    "MIN_VISITS",
    "MissingEvaluation",
    "ProtocolViolation",
    "ScriptedEngine",
    "state_value",
    "value_of_score",
]
