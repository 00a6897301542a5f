"""Selects the slot-loop kernel implementation at import time.

The compiled Cython core is preferred; the pure-Python fallback is used
when the extension is absent or when EHSIM_PURE_PYTHON=1 is set. Both
expose the same simulate_slots contract and produce bit-identical output.
"""

from __future__ import annotations

import os

from . import _kernel_py

if os.environ.get("EHSIM_PURE_PYTHON") == "1":
    _impl = _kernel_py
else:
    try:
        from . import _kernel as _impl  # type: ignore[no-redef]
    except ImportError:
        _impl = _kernel_py

USING_COMPILED: bool = bool(_impl.COMPILED)

simulate_slots = _impl.simulate_slots

# Policy/rate codes are part of the kernel contract (mirrored in both
# implementations; UNFADED_TO packs to the TO code).
POLICY_CODES = {
    "TO": 0,
    "GREEDY": 1,
    "MTO": 2,
    "UNBUFFERED": 3,
    "UNFADED_TO": 0,
    "FADING_TO_LINEAR": 5,
    "WF": 6,
    "MWF": 7,
    "CONST_POWER": 8,
    "MDP_OPTIMAL": 9,
}

RF_CODES = {
    "linear": 0,
    "loge": 1,
    "log2": 2,
    "shannon_half": 3,
}


def implementations() -> dict[str, object]:
    """All importable kernel implementations, for benchmarks and parity
    tests: always the pure-Python one, plus the compiled one if built."""
    impls: dict[str, object] = {"python": _kernel_py}
    try:
        from . import _kernel

        impls["compiled"] = _kernel
    except ImportError:
        pass
    return impls
