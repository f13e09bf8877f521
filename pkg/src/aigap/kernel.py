"""Board kernel selected at import.

The compiled ``_ckernel`` extension is used when it was built; otherwise the
pure-Python ``_pykernel`` is loaded. Set ``AIGAP_PURE_PYTHON=1`` to force the
fallback. Both expose the same functions and produce identical results.
"""
import os

if os.environ.get("AIGAP_PURE_PYTHON"):
    from . import _pykernel as _impl
else:
    try:
        from . import _ckernel as _impl
    except ImportError:
        from . import _pykernel as _impl

BACKEND = "cython" if _impl.__name__.endswith("_ckernel") else "python"

neighbors = _impl.neighbors
centre_weights = _impl.centre_weights
place_stone = _impl.place_stone
is_legal = _impl.is_legal
legal_points = _impl.legal_points
dead_groups = _impl.dead_groups
state_score = _impl.state_score
successor_scores = _impl.successor_scores

__all__ = [
    "BACKEND",
    "neighbors",
    "centre_weights",
    "place_stone",
    "is_legal",
    "legal_points",
    "dead_groups",
    "state_score",
    "successor_scores",
]
