"""Replay-kernel selection: compiled extension when built, else pure Python.

Both implementations expose the same two functions (replay, pra_windows) and
are property-tested against each other; the compiled path exists purely for
speed (trace replay is the simulator's hot loop).
"""

from __future__ import annotations

from . import _kernels_py

try:
    from . import _kernels as _compiled  # type: ignore[attr-defined]

    COMPILED_AVAILABLE = True
except ImportError:
    _compiled = None
    COMPILED_AVAILABLE = False

CODE_THRESHOLD_LEAF = _kernels_py.CODE_THRESHOLD_LEAF
CODE_SCA_GROUP = _kernels_py.CODE_SCA_GROUP
CODE_PRA_NEIGHBORS = _kernels_py.CODE_PRA_NEIGHBORS
CODE_EPOCH_RESET = _kernels_py.CODE_EPOCH_RESET

CAUSE_OF_CODE = {
    CODE_THRESHOLD_LEAF: "threshold-leaf",
    CODE_SCA_GROUP: "sca-group",
    CODE_PRA_NEIGHBORS: "pra-neighbors",
    CODE_EPOCH_RESET: "epoch-reset",
}

VARIANT_CODES = {"sca": 0, "pra": 1, "cat": 2, "prcat": 3, "drcat": 4}


def implementation(compiled: bool | None = None):
    """Pick a kernel implementation; None means best available."""
    if compiled is None:
        compiled = COMPILED_AVAILABLE
    if compiled:
        if not COMPILED_AVAILABLE:
            raise RuntimeError("compiled kernel requested but not built")
        return _compiled
    return _kernels_py


def replay(*args, compiled: bool | None = None):
    return implementation(compiled).replay(*args)


def pra_windows(*args, compiled: bool | None = None):
    return implementation(compiled).pra_windows(*args)
