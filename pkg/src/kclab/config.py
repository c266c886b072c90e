"""Runtime limits shared by the modules."""

import os

DEFAULT_TT_CAP = 24
DEFAULT_GOODNESS_CAP = 18


def truth_table_cap() -> int:
    """Largest variable count for explicit truth tables (``KCLAB_CAP`` overrides)."""
    raw = os.environ.get("KCLAB_CAP")
    if raw is None:
        return DEFAULT_TT_CAP
    try:
        cap = int(raw)
    except ValueError:
        raise ValueError(f"KCLAB_CAP must be an integer, got {raw!r}") from None
    if cap < 0:
        raise ValueError("KCLAB_CAP must be non-negative")
    return cap


def check_cap(n: int, what: str = "truth table") -> None:
    cap = truth_table_cap()
    if n > cap:
        raise ValueError(f"{what} on {n} variables exceeds cap {cap} (set KCLAB_CAP)")
