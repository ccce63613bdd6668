"""Readout: Hermitian expectations, shot-budgeted sampled estimates, and
discrete Fourier sums of the solution coordinates.

Two expectation conventions coexist.  expectation() is the plain state
expectation <phi|M|phi>.  coordinate_expectation() sums over the decoded
coordinates with the index-0 padding, sum_{j,k} conj(z_j) M_jk z_k with
z_0 = 1, which is exactly twice the state expectation on fresh encodings;
both are exposed to keep factor-of-2 bugs visible.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._util import as_rng
from .qstate import AmplitudeState, decode


@dataclass(frozen=True)
class Observable:
    """Hermitian (n+1) x (n+1) matrix with a spectral norm bound attached."""

    matrix: np.ndarray
    norm_bound: float
    name: str = ""

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError("observable must be a square matrix")
        if np.abs(m - m.conj().T).max() > 1e-12:
            raise ValueError("observable is not Hermitian within 1e-12")
        m = m.copy()
        m.flags.writeable = False
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]


def observable(matrix, norm_bound: float | None = None, name: str = "") -> Observable:
    """Wrap a matrix; the norm bound defaults to the computed spectral norm."""
    m = np.asarray(matrix, dtype=complex)
    if norm_bound is None:
        norm_bound = float(np.abs(np.linalg.eigvalsh((m + m.conj().T) / 2)).max())
    return Observable(m, float(norm_bound), name)


def identity_observable(n: int) -> Observable:
    return observable(np.eye(n + 1), 1.0, "identity")


def projector(n: int, j: int) -> Observable:
    """|j><j| on the (n+1)-dimensional encoded space."""
    if not 0 <= j <= n:
        raise ValueError(f"index {j} outside 0..{n}")
    m = np.zeros((n + 1, n + 1))
    m[j, j] = 1.0
    return observable(m, 1.0, f"projector_{j}")


def fourier_mode(n: int, k: int) -> Observable:
    """Rank-one projector onto the k-th Fourier mode over indices 1..n.

    Its state expectation equals |S_k|^2 / 2 for a fresh encoding, with S_k
    as computed by fourier_spectrum on the decoded coordinates.
    """
    if not 1 <= k <= n:
        raise ValueError(f"mode {k} outside 1..{n}")
    chi = np.zeros(n + 1, dtype=complex)
    j = np.arange(1, n + 1)
    chi[1:] = np.exp(-2j * math.pi * j * k / n) / math.sqrt(n)
    return observable(np.outer(chi, chi.conj()), 1.0, f"fourier_{k}")


def expectation(state: AmplitudeState, obs: Observable) -> float:
    """<phi|M|phi>; real for Hermitian M."""
    amps = state.amps
    if obs.dim != amps.shape[0]:
        raise ValueError(f"observable dim {obs.dim} != state dim {amps.shape[0]}")
    value = complex(np.vdot(amps, obs.matrix @ amps))
    return float(value.real)


def coordinate_expectation(state: AmplitudeState, obs: Observable) -> float:
    """sum_{j,k=0..n} conj(z_j) M_jk z_k over decoded coordinates, z_0 = 1."""
    z = decode(state)
    g = np.concatenate([[1.0 + 0j], z])
    if obs.dim != g.shape[0]:
        raise ValueError(f"observable dim {obs.dim} != padded dim {g.shape[0]}")
    return float(complex(np.vdot(g, obs.matrix @ g)).real)


def hoeffding_shots(norm_bound: float, delta: float, alpha: float) -> int:
    """Shot budget ceil(||M||^2 ln(2/alpha) / (2 delta^2)) for additive error
    delta at confidence 1 - alpha."""
    if delta <= 0:
        raise ValueError("delta must be positive")
    if not 0 < alpha < 1:
        raise ValueError("alpha must lie in (0, 1)")
    return math.ceil(norm_bound ** 2 * math.log(2.0 / alpha) / (2.0 * delta ** 2))


def sample_expectation(state: AmplitudeState, obs: Observable, delta: float,
                       alpha: float, rng=None) -> tuple[float, int]:
    """Projective-measurement estimate of <phi|M|phi>.

    Measures in the eigenbasis of M (exact eigendecomposition; fine at desk
    scale), drawing the Hoeffding shot budget for (delta, alpha), and returns
    (sample mean, shots).  The budget assumes the measured spread is within
    ||M||; observables whose outcome distribution spans the full 2||M||
    range at even weight may need the conservative 4x budget.
    """
    rng = as_rng(rng)
    shots = hoeffding_shots(obs.norm_bound, delta, alpha)
    eigvals, eigvecs = np.linalg.eigh(obs.matrix)
    weights = np.abs(eigvecs.conj().T @ state.amps) ** 2
    weights = np.maximum(weights, 0.0)
    weights /= weights.sum()
    draws = rng.choice(eigvals, size=shots, p=weights)
    return float(draws.mean()), shots


def fourier_spectrum(z: np.ndarray) -> np.ndarray:
    """S_k = (1/sqrt(n)) sum_{j=1..n} z_j e^(2 pi i j k / n) for k = 1..n.

    Direct summation; S_n (the k = 0 mod n entry) is the plain normalized sum.
    The transform is unitary, so sum |S_k|^2 = sum |z_j|^2.
    """
    z = np.asarray(z, dtype=complex)
    if z.ndim != 1 or z.shape[0] < 1:
        raise ValueError("z must be a 1-D vector of length >= 1")
    n = z.shape[0]
    j = np.arange(1, n + 1)
    k = np.arange(1, n + 1)
    phases = np.exp(2j * math.pi * np.outer(j, k) / n)
    return (z @ phases) / math.sqrt(n)


def load_observable_csv(path, dim: int, norm_bound: float | None = None) -> Observable:
    """Read a Hermitian matrix from the sparse-triplet CSV format
    (row, col, re, im) shared with the operator dumps."""
    m = np.zeros((dim, dim), dtype=complex)
    with open(path) as f:
        header = f.readline().strip()
        if header != "row,col,re,im":
            raise ValueError(f"unexpected header {header!r}")
        for line in f:
            if not line.strip():
                continue
            row, col, re, im = line.strip().split(",")
            m[int(row), int(col)] = complex(float(re), float(im))
    return observable(m, norm_bound)
