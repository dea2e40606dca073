"""Deterministic per-client random streams.

A master seed is split into n+1 independent substreams (one per client plus
one for the harness) with ``numpy``'s spawnable ``SeedSequence``, so repeated
runs with the same seed replay bit-identically and client streams never
interact regardless of execution order.
"""

from __future__ import annotations

import numpy as np

GENERATOR_NAME = "PCG64 via SeedSequence.spawn"


def spawn_run_streams(seed: int, n_clients: int):
    """Return (client_rngs, harness_rng) for one run.

    client_rngs[i] is the stream owned by client i; harness_rng drives
    run-level randomness (e.g. shared communication coins).
    """
    if n_clients < 1:
        raise ValueError("n_clients must be >= 1")
    children = np.random.SeedSequence(seed).spawn(n_clients + 1)
    rngs = [np.random.default_rng(ss) for ss in children]
    return rngs[:n_clients], rngs[n_clients]
