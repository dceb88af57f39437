"""Keyed random streams.

Every random draw in the package comes from a generator keyed by
``(seed, *keys)``, so results do not depend on evaluation order or on how
work is split across processes.
"""

import numpy as np

# stream tags
DONOR_INDEX = 0
RESIDUALS = 1
RETRY = 2
LOOCV_PICK = 3
LOOCV_ITER = 4
SIM_REP = 5
SIM_RETRY = 6


def stream(seed, *keys):
    return np.random.default_rng(np.random.SeedSequence([int(seed), *map(int, keys)]))


def derive_seed(seed, *keys):
    """A 63-bit seed derived from ``(seed, *keys)``."""
    state = np.random.SeedSequence([int(seed), *map(int, keys)]).generate_state(2, np.uint64)
    return int(state[0] >> np.uint64(1))
