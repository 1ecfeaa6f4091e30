"""Seed handling.

Every stochastic operation in this package takes an explicit
``numpy.random.Generator``.  Monte-Carlo fan-out derives one independent
stream per run from a master seed; the derivation below is the reproducibility
contract (documented so that alternate implementations can replay runs):

    run i of an experiment with master seed s uses
        default_rng(SeedSequence(entropy=s, spawn_key=(i,)))

Stochastic adversaries draw round t of run i from their own seed a via
        default_rng(SeedSequence(entropy=a, spawn_key=(i, t)))

so a loss sequence is a pure function of (adversary seed, run index) and is
identical no matter which algorithm consumes it.
"""
from __future__ import annotations

import numpy as np


def run_stream(master_seed: int, run_index: int = 0) -> np.random.Generator:
    """Algorithm RNG stream for one Monte-Carlo run."""
    return np.random.default_rng(
        np.random.SeedSequence(entropy=int(master_seed), spawn_key=(int(run_index),))
    )


def adversary_stream(adv_seed: int, run_index: int, t: int) -> np.random.Generator:
    """Per-round adversary stream; round t of run `run_index`."""
    return np.random.default_rng(
        np.random.SeedSequence(entropy=int(adv_seed), spawn_key=(int(run_index), int(t)))
    )
