"""Reproducible per-path random streams.

Each ensemble path owns a private counter-based Philox stream keyed by
(master_seed, path_index), so results are bitwise reproducible and
independent of worker scheduling.
"""

from __future__ import annotations

import numpy as np


def path_stream(master_seed: int, path_index: int = 0) -> np.random.Generator:
    seq = np.random.SeedSequence(entropy=int(master_seed),
                                 spawn_key=(int(path_index),))
    return np.random.Generator(np.random.Philox(seq))
