"""One nonlinear amplitude-update step: operator construction, the exact
isometric step map, and ancilla post-selection.

For a degree-d map the transfer operator A sends the d-register product state
to the encoded image: A has one nonzero row per output index alpha, located at
the anchor basis state |alpha, 0, ..., 0>, with the symmetric tensor entry in
every column (k_1, ..., k_d) obtained by permuting a stored multi-index.

The coupling Hamiltonian acts on (register space) x (ancilla qubit) as

    H (w0, w1) = (i A^dag w1, -i A w0),

and the step applied here is the exact map  sqrt(I - eps^2 H^2) + i eps H,
which is unitary whenever eps ||H|| <= 1.  Since H^2 is block diagonal
(A^dag A on the ancilla-0 sector, A A^dag on the ancilla-1 sector) and both
blocks have rank <= n+1, the square roots are evaluated exactly from the
eigendecomposition of the small (n+1) x (n+1) Gram matrix B B^dag, where B is
A compressed to its nonzero rows.

Post-selecting ancilla = 1 leaves (up to normalisation) eps A w0: the image
state in register 1 with registers 2..d collapsed to |0...0>.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._util import as_rng
from .polysys import PolynomialMap, permutation_count
from .qstate import (AmplitudeState, JointState, encode, phase_aligned,
                     tensor_power)


@dataclass(frozen=True)
class AnchorOperator:
    """The A matrix stored as compressed rows.

    B has shape (n+1, D) with D = (n+1)^d; full-matrix row alpha lives at
    flat index anchor_indices[alpha] = alpha * (n+1)^(d-1).
    """

    n: int
    degree: int
    B: np.ndarray

    @property
    def register_dim(self) -> int:
        return (self.n + 1) ** self.degree

    @property
    def anchor_indices(self) -> np.ndarray:
        return np.arange(self.n + 1) * (self.n + 1) ** (self.degree - 1)

    @property
    def nnz(self) -> int:
        return int(np.count_nonzero(self.B))

    def apply(self, u: np.ndarray) -> np.ndarray:
        out = np.zeros(self.register_dim, dtype=complex)
        out[self.anchor_indices] = self.B @ u
        return out

    def apply_adjoint(self, v: np.ndarray) -> np.ndarray:
        return self.B.conj().T @ v[self.anchor_indices]

    def to_dense(self) -> np.ndarray:
        D = self.register_dim
        A = np.zeros((D, D), dtype=complex)
        A[self.anchor_indices] = self.B
        return A

    def triplets(self):
        """Nonzero entries as (row, col, value) in the full D x D indexing."""
        anchors = self.anchor_indices
        for alpha, col in zip(*np.nonzero(self.B)):
            yield int(anchors[alpha]), int(col), complex(self.B[alpha, col])


def build_A(pmap: PolynomialMap) -> AnchorOperator:
    """Assemble the transfer operator for a polynomial map.

    Every distinct ordering of each stored multi-index receives the tensor
    entry, and row 0 carries the implicit unit entry at column (0, ..., 0) so
    the constant row propagates the anchor.
    """
    n, d = pmap.n, pmap.degree
    D = (n + 1) ** d
    B = np.zeros((n + 1, D), dtype=complex)
    strides = (n + 1) ** np.arange(d - 1, -1, -1)
    B[0, 0] = 1.0
    from itertools import permutations

    for (alpha, mono), entry in pmap.coeffs.items():
        for perm in set(permutations(mono)):
            B[alpha, int(np.dot(perm, strides))] = entry
    return AnchorOperator(n, d, B)


def _operator_sparsity(op: AnchorOperator) -> tuple[int, float]:
    """Observed total sparsity s and max |entry| of the assembled operator.

    s is the least even bound such that every row has at most s/2 nonzero
    columns and every column feeds at most s/2 rows (row 0 included, since the
    norm bound must cover it).
    """
    row_counts = np.count_nonzero(op.B, axis=1)
    col_counts = np.count_nonzero(op.B, axis=0)
    s = 2 * int(max(row_counts.max(initial=0), col_counts.max(initial=0)))
    a_max = float(np.abs(op.B).max(initial=0.0))
    return s, a_max


def operator_norm(op: AnchorOperator, tol: float = 1e-12,
                  max_iters: int = 100_000) -> tuple[float, float]:
    """(spectral norm of A, row/column-count norm bound s * a_max).

    The norm is the largest singular value of A, found by power iteration on
    the (n+1) x (n+1) Gram matrix B B^dag, which carries the nonzero spectrum
    of both A^dag A and A A^dag.  Convergence is declared when the eigenvalue
    residual drops below tol; failure to converge raises.
    """
    G = op.B @ op.B.conj().T
    m = G.shape[0]
    v = np.ones(m, dtype=complex) + np.linspace(0.0, 0.5, m)
    v /= np.linalg.norm(v)
    lam = 0.0
    for _ in range(max_iters):
        w = G @ v
        nw = np.linalg.norm(w)
        if nw == 0.0:  # A = 0 never happens (row 0 is unit) but stay safe
            lam = 0.0
            break
        v = w / nw
        lam = float(np.real(np.vdot(v, G @ v)))
        if np.linalg.norm(G @ v - lam * v) <= tol * max(lam, 1.0):
            break
    else:
        raise ValueError(f"power iteration did not converge in {max_iters} iterations")
    h_norm = math.sqrt(max(lam, 0.0))
    s, a_max = _operator_sparsity(op)
    h_norm_bound = s * a_max
    if h_norm > h_norm_bound * (1 + 1e-12):
        raise ValueError(
            f"computed norm {h_norm} exceeds sparsity bound {h_norm_bound}")
    return h_norm, h_norm_bound


@dataclass(frozen=True)
class StepOperator:
    """Everything needed to apply one exact step for a fixed map and epsilon."""

    pmap: PolynomialMap
    A: AnchorOperator
    epsilon: float
    h_norm: float
    h_norm_bound: float
    # eigendecomposition of B B^dag: G = W diag(sing_sq) W^dag
    W: np.ndarray
    sing_sq: np.ndarray

    @property
    def degree(self) -> int:
        return self.A.degree


def make_step_operator(pmap: PolynomialMap, epsilon: float | None = None) -> StepOperator:
    """Build A, its norms, and fix epsilon (default 0.9 / norm bound)."""
    A = build_A(pmap)
    h_norm, h_norm_bound = operator_norm(A)
    if epsilon is None:
        epsilon = 0.9 / h_norm_bound
    epsilon = float(epsilon)
    if epsilon < 0:
        raise ValueError("epsilon must be non-negative")
    if epsilon * h_norm > 1.0 + 1e-12:
        raise ValueError(
            f"epsilon {epsilon} violates epsilon * ||H|| <= 1 (||H|| = {h_norm})")
    sing_sq, W = np.linalg.eigh(A.B @ A.B.conj().T)
    return StepOperator(pmap, A, epsilon, h_norm, h_norm_bound, W, sing_sq)


def apply_step(joint: JointState, op: StepOperator) -> JointState:
    """Apply the exact step map sqrt(I - eps^2 H^2) + i eps H.

    On sectors (w0, w1) this is

        w0' = sqrt(I - eps^2 A^dag A) w0 - eps A^dag w1
        w1' = sqrt(I - eps^2 A A^dag) w1 + eps A w0

    computed exactly through the rank-(n+1) structure of the Gram blocks.
    The map is unitary for eps ||H|| <= 1, so norms are preserved.
    """
    A, eps = op.A, op.epsilon
    if joint.n != A.n or joint.d != A.degree:
        raise ValueError("joint state dimensions do not match the operator")
    if not np.all(np.isfinite(joint.amps.view(float))):
        raise ValueError("joint state has non-finite amplitudes")
    w0 = joint.sector(0).copy()
    w1 = joint.sector(1).copy()
    anchors = A.anchor_indices
    Wm, s2 = op.W, op.sing_sq
    sqrt_fac = np.sqrt(np.maximum(1.0 - eps * eps * s2, 0.0))
    # g(x) = (sqrt(1 - eps^2 x) - 1)/x, continued to -eps^2/2 at x = 0;
    # sqrt(I - eps^2 B^dag B) = I + B^dag W diag(g) W^dag B.
    g = np.where(s2 > 1e-14, (sqrt_fac - 1.0) / np.where(s2 > 1e-14, s2, 1.0),
                 -0.5 * eps * eps)

    Bw0 = A.B @ w0
    out0 = w0 + A.B.conj().T @ (Wm @ (g * (Wm.conj().T @ Bw0)))
    out0 -= eps * A.apply_adjoint(w1)

    out1 = w1.copy()
    w1a = w1[anchors]
    out1[anchors] = Wm @ (sqrt_fac * (Wm.conj().T @ w1a))
    out1[anchors] += eps * Bw0

    return JointState(np.concatenate([out0, out1]), n=joint.n, d=joint.d)


@dataclass(frozen=True)
class StepOutcome:
    """Result of post-selecting the ancilla after a step.

    probability is the squared norm of the selected sector.  On outcome 1 the
    posterior is the renormalized register-1 state (registers 2..d verified
    collapsed to |0...0>), phase-aligned so its anchor is real positive.

    norm_factor = sqrt(2^(d-1) probability) / epsilon is the root-mean-square
    norm of the padded image vector (1, F(z)) / sqrt(2); it equals 1 exactly
    for measure-preserving maps.  image_norm converts it back to the plain
    image norm ||F(z)||, valid when the input was a fresh unit encoding.
    """

    success: bool
    probability: float
    posterior: AmplitudeState | None = None
    norm_factor: float | None = None

    def __post_init__(self):
        if not -1e-12 <= self.probability <= 1.0 + 1e-12:
            raise ValueError(f"probability {self.probability} outside [0, 1]")

    @property
    def image_norm(self) -> float | None:
        if self.norm_factor is None:
            return None
        return math.sqrt(max(2.0 * self.norm_factor ** 2 - 1.0, 0.0))


def postselect(joint: JointState, outcome: int, epsilon: float | None = None,
               collapse_tol: float = 1e-10) -> StepOutcome:
    """Measure the ancilla and condition on the given outcome.

    Outcome 1 is the success branch: the posterior register-1 state is
    returned after asserting that registers 2..d carry less than collapse_tol
    of the sector mass outside |0...0> (exact steps leave exactly zero there;
    perturbed steps may need a looser tolerance).  Outcome 0 is the discarded
    branch: only its probability is reported.
    """
    if outcome not in (0, 1):
        raise ValueError("outcome must be 0 or 1")
    sector = joint.sector(outcome)
    probability = float(np.linalg.norm(sector) ** 2)
    if probability <= 1e-300:
        raise ValueError(f"ancilla outcome {outcome} has zero probability")
    if outcome == 0:
        return StepOutcome(success=False, probability=probability)

    n1 = joint.n + 1
    block = sector.reshape(n1, n1 ** (joint.d - 1))
    reg1 = block[:, 0]
    residual = 1.0 - float(np.linalg.norm(reg1) ** 2) / probability
    if residual > collapse_tol:
        raise ValueError(
            f"registers 2..d failed to collapse to |0...0>: residual mass {residual}")
    posterior = AmplitudeState(phase_aligned(reg1 / np.linalg.norm(reg1)))
    norm_factor = None
    if epsilon is not None:
        norm_factor = math.sqrt(2.0 ** (joint.d - 1) * probability) / epsilon
    return StepOutcome(True, probability, posterior, norm_factor)


def step_encoded(state: AmplitudeState, op: StepOperator,
                 collapse_tol: float = 1e-10) -> StepOutcome:
    """tensor -> step -> postselect(1) for an already-encoded state."""
    joint = tensor_power(state, op.degree)
    return postselect(apply_step(joint, op), 1, epsilon=op.epsilon,
                      collapse_tol=collapse_tol)


def quantum_step(z: np.ndarray, pmap: PolynomialMap, epsilon: float | None = None,
                 mode: str = "exact", rng=None) -> StepOutcome:
    """Full step from a coordinate vector: encode, pair up, step, post-select.

    In exact mode the success branch is always taken and its probability
    reported.  In sampled mode the ancilla outcome is drawn Bernoulli
    (probability); on failure the pair is discarded and no posterior exists.
    """
    if mode not in ("exact", "sampled"):
        raise ValueError(f"unknown mode {mode!r}")
    op = pmap if isinstance(pmap, StepOperator) else make_step_operator(pmap, epsilon)
    outcome = step_encoded(encode(z), op)
    if mode == "sampled":
        if as_rng(rng).uniform() >= outcome.probability:
            return StepOutcome(False, outcome.probability)
    return outcome


def dump_operator_csv(op: AnchorOperator, path) -> None:
    """Sparse triplet dump (row, col, re, im) of the full A matrix."""
    with open(path, "w", newline="") as f:
        f.write("row,col,re,im\n")
        for row, col, v in sorted(op.triplets()):
            f.write(f"{row},{col},{v.real!r},{v.imag!r}\n")


def step_unitary(op: StepOperator) -> np.ndarray:
    """Dense matrix of the step map on the full joint space.

    Intended for perturbation studies at small dimensions; the matrix has
    shape (2 D, 2 D) with D = (n+1)^d.
    """
    D = op.A.register_dim
    U = np.empty((2 * D, 2 * D), dtype=complex)
    for col in range(2 * D):
        e = np.zeros(2 * D, dtype=complex)
        e[col] = 1.0
        joint = JointState(e, n=op.A.n, d=op.A.degree)
        U[:, col] = apply_step(joint, op).amps
    return U
