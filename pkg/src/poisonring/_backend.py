"""Kernel backend selection.

Prefers the compiled extension (poisonring._opkernel) and falls back to the
pure-Python kernel. Set POISONRING_KERNEL=py or POISONRING_KERNEL=c to force
one side; forcing "c" fails loudly when the extension is absent instead of
silently degrading.
"""

import os

from . import _kernel_py

_CONSTANTS = (
    "INT64_MIN", "INT64_MAX",
    "OP_ADD", "OP_SUB", "OP_MUL", "OP_MOD", "OP_EQ", "OP_NEQ", "OP_LT",
    "DEV_OFFSET", "DEV_SCALE", "DEV_STUCK_AT", "DEV_BITFLIP",
)


def _load():
    choice = os.environ.get("POISONRING_KERNEL", "").strip().lower()
    if choice == "py":
        return _kernel_py, "py"
    try:
        from . import _opkernel
    except ImportError:
        if choice == "c":
            raise ImportError(
                "POISONRING_KERNEL=c but the compiled kernel is not built"
            ) from None
        return _kernel_py, "py"
    for name in _CONSTANTS:
        if getattr(_opkernel, name) != getattr(_kernel_py, name):
            raise ImportError(f"compiled kernel disagrees on constant {name}")
    return _opkernel, "c"


kernel, KERNEL_BACKEND = _load()
