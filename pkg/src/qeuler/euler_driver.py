"""Drivers for iterated steps: deterministic orbits, the copy-consuming
Monte-Carlo branching process, the Euler integrator, and perturbation studies
with the closed-form accumulated-error bound.

The branching process is simulated on copy counts, not on stored copies: all
surviving copies in a round are identical states, failures are discarded, and
per-pair successes are i.i.d., so one binomial draw per round reproduces the
count dynamics exactly while memory stays O(state).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from ._util import as_rng, rng_stream
from .polysys import OdeSystem, PolynomialMap, check_ode_measure_preserving, euler_map
from .nonlin_step import (StepOperator, _operator_sparsity, make_step_operator,
                          postselect, step_encoded, step_unitary)
from .qstate import JointState, decode, distance, encode, tensor_power

# numpy's binomial sampler needs the trial count in int64 range.
MAX_SIMULABLE_COPIES = 2 ** 62


@dataclass(frozen=True)
class ResourcePlan:
    """Initial copy count and thresholds for the branching process.

    n0 = ceil((base / p)^m) with p = epsilon^2 / 2 the per-pair success
    probability; computed in exact rational arithmetic, so the big integer is
    always available (float_exact flags when it also fits a float exactly).
    Alternative counts from the other stated forms are reported alongside:
    n0_proof = ceil((8/p)^m) and n0_algorithm = ceil((gamma/p)^m) with
    gamma = 2 sqrt(2) / epsilon.
    """

    m: int
    epsilon: float
    p: float
    lam: float
    base: float
    n0: int
    log10_n0: float
    n0_proof: int
    n0_algorithm: int
    gamma: float

    def __post_init__(self):
        if not 0 < self.lam < self.p < 1:
            raise ValueError(f"need 0 < lambda ({self.lam}) < p ({self.p}) < 1")
        if self.n0 < 2 ** self.m:
            raise ValueError(f"n0 = {self.n0} below 2^m = {2 ** self.m}")

    @property
    def float_exact(self) -> bool:
        return self.n0 <= 2 ** 53


def plan_resources(m: int, epsilon: float, base: float = 16.0,
                   lam: float | None = None) -> ResourcePlan:
    if m < 1:
        raise ValueError("m must be >= 1")
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    p = epsilon * epsilon / 2.0
    if not p < 1:
        raise ValueError(f"p = epsilon^2/2 = {p} must be < 1")
    if lam is None:
        lam = p / 2.0
    p_exact = Fraction(epsilon) ** 2 / 2
    gamma = 2.0 * math.sqrt(2.0) / epsilon

    def count(numerator) -> int:
        return math.ceil((Fraction(numerator) / p_exact) ** m)

    return ResourcePlan(
        m=m, epsilon=float(epsilon), p=p, lam=float(lam), base=float(base),
        n0=count(base), log10_n0=m * math.log10(base / p),
        n0_proof=count(8), n0_algorithm=count(gamma), gamma=gamma,
    )


@dataclass
class RunReport:
    """Trajectory, per-step statistics and mode-specific diagnostics.

    iterates[j] is the decoded coordinate vector after j steps (iterates[0]
    is the initial condition); because decoding divides by the anchor
    amplitude, these are the exact unnormalized coordinates of the orbit.
    """

    mode: str
    success: bool
    m: int
    epsilon: float
    gamma: float
    iterates: list[np.ndarray]
    probabilities: list[float]
    norm_factors: list[float]
    image_norms: list[float]
    times: list[float] | None = None
    copy_counts: list[int] | None = None
    successes: list[int] | None = None
    flagged_rounds: list[int] | None = None
    failure_round: int | None = None
    eta: float | None = None
    delta_steps: list[list[float]] | None = None
    delta_final: list[float] | None = None
    delta_bound: float | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.copy_counts is not None:
            for a, b in zip(self.copy_counts, self.copy_counts[1:]):
                if b > a // 2:
                    raise ValueError("copy counts must at least halve per round")
        if self.delta_final is not None and self.delta_bound is not None:
            if any(d > self.delta_bound * (1 + 1e-9) + 1e-15 for d in self.delta_final):
                raise ValueError("observed error exceeds the accumulated-error bound")


def _as_operator(pmap, epsilon) -> StepOperator:
    if isinstance(pmap, StepOperator):
        return pmap
    return make_step_operator(pmap, epsilon)


def run_deterministic(pmap: PolynomialMap | StepOperator, z0: np.ndarray, m: int,
                      epsilon: float | None = None) -> RunReport:
    """Iterate m exact steps, always taking the success branch.

    The decoded iterates reproduce the classical orbit of the map exactly
    (up to roundoff), normalized or not, because decoding is projective.
    """
    if m < 1:
        raise ValueError("m must be >= 1")
    op = _as_operator(pmap, epsilon)
    state = encode(z0)
    iterates = [np.asarray(z0, dtype=complex)]
    probs, nfs, inorms = [], [], []
    for j in range(m):
        outcome = step_encoded(state, op)
        if outcome.probability < 1e-15:
            raise ValueError(f"success probability vanished at step {j + 1}")
        state = outcome.posterior
        iterates.append(decode(state))
        probs.append(outcome.probability)
        nfs.append(outcome.norm_factor)
        inorms.append(outcome.image_norm)
    return RunReport(
        mode="deterministic", success=True, m=m, epsilon=op.epsilon,
        gamma=2.0 * math.sqrt(2.0) / op.epsilon, iterates=iterates,
        probabilities=probs, norm_factors=nfs, image_norms=inorms,
        meta=_operator_meta(op),
    )


def _operator_meta(op: StepOperator) -> dict:
    s, a_max = _operator_sparsity(op.A)
    return {"h_norm": op.h_norm, "h_norm_bound": op.h_norm_bound,
            "sparsity": s, "a_max": a_max, "degree": op.degree}


def run_montecarlo(pmap: PolynomialMap | StepOperator, z0: np.ndarray,
                   plan: ResourcePlan, rng=None,
                   p_override: float | None = None) -> RunReport:
    """Simulate the branching process on copy counts.

    Round j (with countdown index i = m - j + 1): the N/2 available pairs each
    succeed independently with the exact per-pair probability from the step,
    S ~ Binomial(N // 2, p); then N := 2 floor(S / 2).  The run fails when
    S < 2^(i-1) (not enough survivors for the remaining rounds); rounds with
    S below lambda times the pair count are additionally flagged, matching
    the large-deviation failure event with the binomial trial count as the
    reference.  Success requires every round to pass, which leaves at least
    one copy of the final state.

    p_override replaces the computed per-pair probability (hypothetical-p
    studies); states still evolve along the success branch.
    """
    op = _as_operator(pmap, plan.epsilon)
    rng = as_rng(rng)
    if plan.n0 > MAX_SIMULABLE_COPIES:
        raise ValueError(
            f"n0 = 10^{plan.log10_n0:.2f} exceeds the simulable copy range")
    state = encode(z0)
    n = plan.n0
    iterates = [np.asarray(z0, dtype=complex)]
    copy_counts = [n]
    probs, nfs, inorms, successes, flagged = [], [], [], [], []
    failure_round = None
    for j in range(1, plan.m + 1):
        pairs = n // 2
        outcome = step_encoded(state, op)
        p = outcome.probability if p_override is None else float(p_override)
        s = int(rng.binomial(pairs, p)) if pairs > 0 else 0
        if s < plan.lam * pairs:
            flagged.append(j)
        n = 2 * (s // 2)
        successes.append(s)
        copy_counts.append(n)
        probs.append(p)
        nfs.append(outcome.norm_factor)
        inorms.append(outcome.image_norm)
        if s >= 1:  # at least one copy of the next state was produced
            state = outcome.posterior
            iterates.append(decode(state))
        if s < 2 ** (plan.m - j):
            failure_round = j
            break
    return RunReport(
        mode="montecarlo", success=failure_round is None, m=plan.m,
        epsilon=op.epsilon, gamma=plan.gamma, iterates=iterates,
        probabilities=probs, norm_factors=nfs, image_norms=inorms,
        copy_counts=copy_counts, successes=successes, flagged_rounds=flagged,
        failure_round=failure_round,
        meta=_operator_meta(op) | {"n0": plan.n0, "lambda": plan.lam,
                                   "plan_base": plan.base},
    )


def integrate(sys: OdeSystem, z0: np.ndarray, t: float, m: int,
              epsilon: float | None = None, mode: str = "deterministic",
              rng=None, plan_base: float = 16.0, lam: float | None = None,
              measure_check_samples: int = 50) -> RunReport:
    """Integrate dz/dt = f(z) to time t with m quantum Euler steps.

    Builds the update map z -> z + (t/m) f(z) and drives it in the requested
    mode.  A non-measure-preserving system is allowed but warned about, since
    the success probability then drifts away from epsilon^2 / 2.
    """
    if m < 1:
        raise ValueError("m must be >= 1")
    if t <= 0:
        raise ValueError("integration time must be positive")
    h = t / m
    preserving, residual = check_ode_measure_preserving(
        sys, samples=measure_check_samples)
    if not preserving:
        warnings.warn(
            f"system is not measure preserving (residual {residual:.3g}); "
            "success probabilities will deviate from epsilon^2/2",
            stacklevel=2)
    op = make_step_operator(euler_map(sys, h), epsilon)
    if mode == "deterministic":
        report = run_deterministic(op, z0, m)
    elif mode == "montecarlo":
        plan = plan_resources(m, op.epsilon, base=plan_base, lam=lam)
        report = run_montecarlo(op, z0, plan, rng=rng)
    else:
        raise ValueError(f"unknown mode {mode!r}")
    report.times = [j * h for j in range(len(report.iterates))]
    report.meta |= {"t": t, "h": h, "measure_preserving": preserving,
                    "measure_residual": residual}
    return report


def error_bound(eta: float, gamma: float, m: int) -> float:
    """Closed-form bound on the error accumulated over m iterations when each
    step's unitary is simulated to spectral-norm accuracy eta:

        (eta / 3) (((3 gamma)^(m+1) - 1) / (3 gamma - 1) - 1),

    the solution of the per-step recurrence delta_j <= gamma (3 delta_{j-1}
    + eta) from delta_0 = 0.  At 3 gamma = 1 the limit gamma eta m is used.
    """
    if eta < 0:
        raise ValueError("eta must be non-negative")
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    if m < 1:
        raise ValueError("m must be >= 1")
    x = 3.0 * gamma
    if abs(x - 1.0) < 1e-12:
        return gamma * eta * m
    return (eta / 3.0) * ((x ** (m + 1) - 1.0) / (x - 1.0) - 1.0)


@dataclass(frozen=True)
class NoiseModel:
    """Spectral-norm budget for the per-step unitary perturbation.

    The applied operator is V = U exp(i eta G) with G a random Hermitian
    matrix of unit spectral norm, which keeps V unitary and guarantees
    ||U - V|| <= eta.
    """

    eta: float
    stream: int = 0

    def __post_init__(self):
        if self.eta < 0:
            raise ValueError("eta must be non-negative")


def _trial_rngs(rng, trials: int, stream: int):
    if isinstance(rng, np.random.Generator):
        return rng.spawn(trials)
    seed = 0 if rng is None else int(rng)
    return [rng_stream(seed, stream, k) for k in range(trials)]


def _random_unit_hermitian(dim: int, rng) -> np.ndarray:
    r = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    g = (r + r.conj().T) / 2.0
    return g / np.abs(np.linalg.eigvalsh(g)).max()


def noise_study(pmap: PolynomialMap | StepOperator, z0: np.ndarray, m: int,
                epsilon: float | None, noise: NoiseModel, trials: int,
                rng=None) -> RunReport:
    """Run ideal and perturbed iterations side by side and check the error
    recurrence and its closed-form solution on every trial.

    Each trial draws one perturbed step unitary V = U exp(i eta G) and applies
    it for all m steps (the simulation error is a property of the compiled
    step, not re-drawn per application).  After post-selection, registers
    2..d are verified collapsed up to the O((eta/epsilon)^2) leakage the
    perturbation induces, then the register-1 states are compared:
    delta_j = distance(ideal_j, noisy_j).  Violation of either
    delta_j <= gamma (3 delta_{j-1} + eta) or the closed-form bound raises.

    Meaningful for measure-preserving maps, where the ideal per-step
    success probability is exactly epsilon^2 / 2^(d-1) and gamma = 2 sqrt(2)
    / epsilon matches the normalization amplification of the success branch.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    op = _as_operator(pmap, epsilon)
    eps = op.epsilon
    gamma = 2.0 * math.sqrt(2.0) / eps
    if noise.eta * (3.0 * gamma) ** m >= 1.0:
        warnings.warn(
            "eta (3 gamma)^m >= 1: the accumulated-error bound is vacuous at "
            "this noise level", stacklevel=2)
    bound_final = error_bound(noise.eta, gamma, m)
    step_bounds = [error_bound(noise.eta, gamma, j) for j in range(1, m + 1)]
    collapse_tol = max(1e-10, 100.0 * (noise.eta / eps) ** 2)

    # Ideal backbone, shared by all trials.
    ideal = [encode(z0)]
    probs, nfs, inorms = [], [], []
    for _ in range(m):
        outcome = step_encoded(ideal[-1], op)
        ideal.append(outcome.posterior)
        probs.append(outcome.probability)
        nfs.append(outcome.norm_factor)
        inorms.append(outcome.image_norm)

    U = step_unitary(op)
    delta_steps: list[list[float]] = []
    delta_final: list[float] = []
    for trial_rng in _trial_rngs(rng, trials, noise.stream):
        if noise.eta == 0.0:
            V = U
        else:
            G = _random_unit_hermitian(U.shape[0], trial_rng)
            w, Q = np.linalg.eigh(G)
            V = U @ (Q * np.exp(1j * noise.eta * w)) @ Q.conj().T
        state = encode(z0)
        deltas = []
        prev = 0.0
        for j in range(m):
            joint = tensor_power(state, op.degree)
            psi = V @ joint.amps
            psi /= np.linalg.norm(psi)  # V unitary; renormalize roundoff only
            noisy = postselect(JointState(psi, n=joint.n, d=joint.d), 1,
                               epsilon=eps, collapse_tol=collapse_tol)
            state = noisy.posterior
            d_j = distance(ideal[j + 1], state)
            allowed = gamma * (3.0 * prev + noise.eta)
            if d_j > allowed * (1 + 1e-9) + 1e-12:
                raise ValueError(
                    f"per-step error recurrence violated at step {j + 1}: "
                    f"{d_j} > gamma(3 delta + eta) = {allowed}")
            deltas.append(d_j)
            prev = d_j
        if deltas[-1] > bound_final * (1 + 1e-9) + 1e-15:
            raise ValueError(
                f"accumulated error {deltas[-1]} exceeds bound {bound_final}")
        delta_steps.append(deltas)
        delta_final.append(deltas[-1])

    return RunReport(
        mode="noise_study", success=True, m=m, epsilon=eps, gamma=gamma,
        iterates=[decode(s) for s in ideal], probabilities=probs,
        norm_factors=nfs, image_norms=inorms, eta=noise.eta,
        delta_steps=delta_steps, delta_final=delta_final,
        delta_bound=bound_final,
        meta=_operator_meta(op) | {"trials": trials,
                                   "step_bounds": step_bounds},
    )


# ---------------------------------------------------------------------------
# Serialization: JSON summary dict and the wide per-step trajectory CSV.

def report_to_doc(report: RunReport) -> dict:
    from ._util import complex_pairs

    doc = {
        "mode": report.mode, "success": report.success, "m": report.m,
        "epsilon": report.epsilon, "gamma": report.gamma,
        "iterates": [complex_pairs(z) for z in report.iterates],
        "probabilities": report.probabilities,
        "norm_factors": report.norm_factors,
        "image_norms": report.image_norms,
        "meta": report.meta,
    }
    for name in ("times", "copy_counts", "successes", "flagged_rounds",
                 "failure_round", "eta", "delta_steps", "delta_final",
                 "delta_bound"):
        value = getattr(report, name)
        if value is not None:
            doc[name] = value
    return doc


def write_trajectory_csv(report: RunReport, path, n: int | None = None) -> None:
    """Per-step rows: step, t, coordinates, probability, norm_factor, then
    n_copies for Monte-Carlo runs and delta columns for noise studies (the
    per-step maximum over trials against the closed-form bound).
    """
    if n is None:
        n = len(report.iterates[0])
    header = ["step", "t"]
    for j in range(1, n + 1):
        header += [f"re_z{j}", f"im_z{j}"]
    header += ["probability", "norm_factor"]
    with_copies = report.copy_counts is not None
    with_delta = report.delta_steps is not None
    if with_copies:
        header.append("n_copies")
    if with_delta:
        header += ["delta_observed", "delta_bound"]
    times = report.times or list(range(len(report.iterates)))
    delta_max = ([max(col) for col in zip(*report.delta_steps)]
                 if with_delta and report.delta_steps else [])
    step_bounds = report.meta.get("step_bounds", [])
    lines = [",".join(header)]
    for j, z in enumerate(report.iterates):
        row = [str(j), repr(float(times[j]))]
        for c in z:
            row += [repr(float(c.real)), repr(float(c.imag))]
        if j == 0:
            row += ["", ""]
        else:
            row += [repr(float(report.probabilities[j - 1])),
                    repr(float(report.norm_factors[j - 1]))]
        if with_copies:
            row.append(str(report.copy_counts[j]))
        if with_delta:
            if j == 0:
                row += ["", ""]
            else:
                row += [repr(float(delta_max[j - 1])),
                        repr(float(step_bounds[j - 1]))]
        lines.append(",".join(row))
    with open(path, "w", newline="") as f:
        f.write("\n".join(lines) + "\n")
