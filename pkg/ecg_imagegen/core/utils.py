"""
Utility functions for seeding and human-readable formatting
"""
from typing import Optional

import numpy as np


def derive_seed(master_seed: int, *keys: int) -> int:
    """
    Mix a master seed with integer keys into an independent 64-bit seed

    The result depends only on the arguments, never on call order, so a
    stage seeded with (master, record_index, stage_id) is unaffected by
    which other stages run.

    Args:
        master_seed: Non-negative master seed
        *keys: Additional non-negative integers (record index, stage id, ...)

    Returns:
        Unsigned 64-bit integer seed
    """
    sequence = np.random.SeedSequence([int(master_seed), *[int(k) for k in keys]])
    return int(sequence.generate_state(1, dtype=np.uint64)[0])


def make_rng(seed: int, *keys: int) -> np.random.Generator:
    """Generator seeded from ``seed`` and optional substream keys"""
    if keys:
        return np.random.default_rng(np.random.SeedSequence([int(seed), *[int(k) for k in keys]]))
    return np.random.default_rng(int(seed))


def format_duration(seconds: Optional[float]) -> str:
    """
    Format a duration in seconds to a human-readable string

    Args:
        seconds: Duration or None

    Returns:
        e.g. "850 ms", "12.40 s", "3 min 05 s"; empty string if None
    """
    if seconds is None:
        return ""
    if seconds < 1.0:
        return f"{seconds * 1000:.0f} ms"
    if seconds < 60.0:
        return f"{seconds:.2f} s"
    minutes, rest = divmod(int(round(seconds)), 60)
    return f"{minutes} min {rest:02d} s"

