"""Shared plumbing: deterministic RNG streams, float/complex formatting."""

from __future__ import annotations

import numpy as np


def rng_stream(master_seed: int, *path: int) -> np.random.Generator:
    """Independent generator for (master_seed, path).

    Streams are derived counter-style from the master seed, so the same
    (seed, path) pair always yields the same stream no matter how many other
    streams exist or in which order they are created.  This is what makes
    trial-level parallelism unable to change results.
    """
    ss = np.random.SeedSequence(
        entropy=int(master_seed), spawn_key=tuple(int(p) for p in path)
    )
    return np.random.default_rng(ss)


def as_rng(rng: np.random.Generator | int | None) -> np.random.Generator:
    """Accept a Generator, a seed, or None (seed 0)."""
    if isinstance(rng, np.random.Generator):
        return rng
    return rng_stream(0 if rng is None else int(rng))


def fmt(x: float) -> str:
    """Shortest round-trip decimal representation; locale-independent."""
    return repr(float(x))


def complex_pairs(vec: np.ndarray) -> list[list[float]]:
    """Complex vector as JSON-friendly [re, im] pairs."""
    return [[float(c.real), float(c.imag)] for c in np.asarray(vec)]


def pairs_complex(pairs) -> np.ndarray:
    return np.array([complex(re, im) for re, im in pairs], dtype=complex)
