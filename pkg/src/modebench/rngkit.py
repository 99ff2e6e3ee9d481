"""Keyed random-number substreams for reproducible Monte Carlo.

Every stochastic quantity in a run (sequence phases, noise traces, readout
shots) is drawn from its own generator, derived from the root seed plus a
small integer key.  The derivation is a pure function of the key, so results
do not depend on execution order and stay bit-identical when work is
distributed across threads.
"""

from __future__ import annotations

import numpy as np

# Purpose tags keep streams for different uses disjoint even when the other
# key components coincide.
PHASES = 0
NOISE = 1
READOUT = 2
ANALYSIS = 3


def substream(seed: int, purpose: int, *key: int) -> np.random.Generator:
    """Return a generator keyed by ``(seed, purpose, *key)``.

    ``key`` is typically ``(length_index, circuit_index)``.  Identical keys
    always produce identical generators; distinct keys produce statistically
    independent streams.
    """
    ss = np.random.SeedSequence(int(seed), spawn_key=(int(purpose),) + tuple(int(k) for k in key))
    return np.random.Generator(np.random.PCG64(ss))
