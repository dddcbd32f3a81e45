"""Counter-based random streams: one independent generator per ``(seed, trial)``."""

from __future__ import annotations

import numpy as np


def trial_rng(seed: int, trial: int) -> np.random.Generator:
    """Philox generator keyed by ``seed`` and ``trial``; trials need not run in order."""
    ss = np.random.SeedSequence([int(seed) & (2**64 - 1), int(trial)])
    return np.random.Generator(np.random.Philox(ss))


__all__ = ["trial_rng"]
