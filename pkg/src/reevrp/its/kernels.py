"""Backend selection for the search kernels.

The compiled extension is used when it imports; set ``REEVRP_PURE_PYTHON=1``
to force the pure-Python implementation.
"""
from __future__ import annotations

import os

from . import _kernels_py as python_backend

compiled_backend = None
if os.environ.get("REEVRP_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels as compiled_backend  # type: ignore[no-redef]
    except ImportError:
        compiled_backend = None

_impl = compiled_backend if compiled_backend is not None else python_backend
BACKEND = _impl.BACKEND

move_delta = _impl.move_delta
candidate_fingerprint = _impl.candidate_fingerprint
scan = _impl.scan
insertion_scores = _impl.insertion_scores
leftover_choice = _impl.leftover_choice


def use(backend: str) -> None:
    """Switch backends at runtime ("python" or "cython"); used by benchmarks."""
    global _impl, BACKEND, move_delta, candidate_fingerprint, scan, insertion_scores, leftover_choice
    if backend == "python":
        _impl = python_backend
    elif backend == "cython":
        if compiled_backend is None:
            raise RuntimeError("compiled kernels are not available")
        _impl = compiled_backend
    else:
        raise ValueError(backend)
    BACKEND = _impl.BACKEND
    move_delta = _impl.move_delta
    candidate_fingerprint = _impl.candidate_fingerprint
    scan = _impl.scan
    insertion_scores = _impl.insertion_scores
    leftover_choice = _impl.leftover_choice
