"""Shared builders and independent oracles for the test suite."""

from itertools import permutations

import numpy as np
import pytest

from qeuler import PolynomialMap, rng_stream


def brute_force_apply(pmap: PolynomialMap, z) -> np.ndarray:
    """Independent evaluator: walk the coefficient dict and enumerate every
    ordering of every multi-index explicitly.  Deliberately not vectorized so
    it shares no code path with the library evaluation."""
    zfull = [1.0 + 0j] + [complex(c) for c in z]
    out = [0j] * pmap.n
    for (alpha, mono), entry in pmap.coeffs.items():
        for perm in set(permutations(mono)):
            term = entry
            for k in perm:
                term *= zfull[k]
            out[alpha - 1] += term
    return np.array(out)


def unit_vector(n, seed, real=False):
    rng = rng_stream(seed)
    v = rng.standard_normal(n) + (0 if real else 1j * rng.standard_normal(n))
    return v.astype(complex) / np.linalg.norm(v)


@pytest.fixture
def doubling_map():
    from qeuler import power_map

    return power_map(2)


@pytest.fixture
def swap_map():
    from qeuler import permutation_map

    return permutation_map([2, 1])
