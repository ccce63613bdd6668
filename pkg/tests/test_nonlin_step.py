import cmath
import math

import numpy as np
import pytest

from qeuler import (JointState, apply_map, apply_step, build_A, decode,
                    dump_operator_csv, encode, identity_map, lorenz, euler_map,
                    make_step_operator, operator_norm, permutation_map,
                    postselect, power_map, quantum_step, random_unitary_map,
                    rng_stream, step_encoded, step_unitary, tensor_power,
                    unitary_map)
from qeuler.nonlin_step import _operator_sparsity
from conftest import unit_vector


# --- operator construction ----------------------------------------------------

def test_identity_operator_reencodes():
    m = identity_map(3)
    A = build_A(m)
    z = unit_vector(3, 1)
    st = encode(z)
    image = A.to_dense() @ tensor_power(st, 2).sector(0)
    # A |phi phi> = (1/sqrt 2) |phi> (x) |0_reg>
    block = image.reshape(4, 4)
    assert np.abs(block[:, 1:]).max() == 0.0
    assert np.abs(block[:, 0] - st.amps / math.sqrt(2)).max() < 1e-14


def test_doubling_operator_hand_expansion():
    theta = 0.9
    A = build_A(power_map(2))
    joint = tensor_power(encode(np.array([cmath.exp(1j * theta)])), 2)
    image = A.to_dense() @ joint.sector(0)
    # amplitude 1/2 at |00> and e^(2 i theta)/2 at |10>, zero elsewhere
    expected = np.zeros(4, complex)
    expected[0] = 0.5
    expected[2] = 0.5 * cmath.exp(2j * theta)
    assert np.abs(image - expected).max() < 1e-15


def test_operator_nnz_bound():
    for seed in range(5):
        m = random_unitary_map(5, rng=rng_stream(seed))
        A = build_A(m)
        s, _ = _operator_sparsity(A)
        assert A.nnz <= (m.n + 1) * s / 2


def test_operator_norm_against_dense_svd():
    cases = [identity_map(3), power_map(2), power_map(3),
             permutation_map([3, 1, 2]),
             random_unitary_map(4, rng=rng_stream(11)),
             euler_map(lorenz(), 0.02)]
    for m in cases:
        A = build_A(m)
        h_norm, bound = operator_norm(A)
        svd_norm = np.linalg.svd(A.to_dense(), compute_uv=False)[0]
        assert h_norm == pytest.approx(svd_norm, abs=1e-10)
        assert h_norm <= bound + 1e-12


def test_zero_map_norm():
    # only the constant row: a single unit entry
    m = identity_map(1)
    A = build_A(m)
    A.B[1, :] = 0.0  # strip the linear row, leaving f_0 only
    h_norm, bound = operator_norm(A)
    assert h_norm == pytest.approx(1.0, abs=1e-12)
    assert bound >= 1.0


def test_doubling_norm_bracket():
    h_norm, bound = operator_norm(build_A(power_map(2)))
    assert 0.5 <= h_norm <= bound


def test_hamiltonian_is_hermitian_and_matches_block_action():
    op = make_step_operator(random_unitary_map(2, rng=rng_stream(3)), 0.2)
    A = op.A.to_dense()
    D = A.shape[0]
    H = np.zeros((2 * D, 2 * D), complex)
    H[D:, :D] = -1j * A
    H[:D, D:] = 1j * A.conj().T
    assert np.abs(H - H.conj().T).max() < 1e-14
    assert np.abs(np.linalg.eigvalsh(H)).max() == pytest.approx(op.h_norm, abs=1e-10)


# --- the step map ---------------------------------------------------------------

def test_epsilon_zero_is_identity():
    op = make_step_operator(identity_map(2), epsilon=0.0)
    joint = tensor_power(encode(unit_vector(2, 4)), 2)
    out = apply_step(joint, op)
    assert np.abs(out.amps - joint.amps).max() < 1e-14


def test_ancilla_mass_is_half_eps_squared():
    op = make_step_operator(random_unitary_map(3, rng=rng_stream(5)), 0.1)
    joint = tensor_power(encode(unit_vector(3, 6)), 2)
    out = apply_step(joint, op)
    mass = np.linalg.norm(out.sector(1)) ** 2
    assert mass == pytest.approx(0.005, abs=1e-12)


def test_step_is_isometric_on_general_joint_states():
    op = make_step_operator(random_unitary_map(2, rng=rng_stream(7)), 0.4)
    rng = rng_stream(8)
    for _ in range(5):
        v = rng.standard_normal(18) + 1j * rng.standard_normal(18)
        v /= np.linalg.norm(v)
        out = apply_step(JointState(v, n=2, d=2), op)
        assert abs(np.linalg.norm(out.amps) - 1.0) < 1e-10


def test_step_first_order_consistency():
    # || out - (in + i eps H in) || <= (eps ||H||)^2 / 2
    m = random_unitary_map(2, rng=rng_stream(9))
    op = make_step_operator(m, 0.3)
    joint = tensor_power(encode(unit_vector(2, 10)), 2)
    out = apply_step(joint, op)
    D = op.A.register_dim
    w0 = joint.sector(0)
    linear = joint.amps.copy()
    linear[D:] += op.epsilon * op.A.apply(w0)
    remainder = np.linalg.norm(out.amps - linear)
    assert remainder <= (op.epsilon * op.h_norm) ** 2 / 2 + 1e-12


def test_epsilon_range_enforced():
    with pytest.raises(ValueError, match="epsilon"):
        make_step_operator(identity_map(2), epsilon=5.0)
    with pytest.raises(ValueError, match="non-negative"):
        make_step_operator(identity_map(2), epsilon=-0.1)


def test_step_unitary_matrix_is_unitary():
    op = make_step_operator(power_map(2), 0.5)
    U = step_unitary(op)
    assert np.abs(U.conj().T @ U - np.eye(U.shape[0])).max() < 1e-12


# --- post-selection --------------------------------------------------------------

def test_postselect_probabilities_sum_to_one():
    op = make_step_operator(random_unitary_map(2, rng=rng_stream(12)), 0.25)
    out = apply_step(tensor_power(encode(unit_vector(2, 13)), 2), op)
    p1 = postselect(out, 1, epsilon=op.epsilon).probability
    p0 = postselect(out, 0).probability
    assert p0 + p1 == pytest.approx(1.0, abs=1e-12)
    assert postselect(out, 0).posterior is None


def test_postselect_zero_probability_sector():
    joint = tensor_power(encode(unit_vector(2, 14)), 2)  # nothing in sector 1
    with pytest.raises(ValueError, match="zero probability"):
        postselect(joint, 1)


def test_posterior_decodes_to_map_image():
    m = random_unitary_map(3, rng=rng_stream(15))
    z = unit_vector(3, 16)
    out = quantum_step(z, m, epsilon=0.2)
    assert np.abs(decode(out.posterior) - apply_map(m, z)).max() < 1e-12


def test_scaled_map_probability_and_norm_factor():
    # ||F(z)|| = c exactly; success probability eps^2 (1 + c^2)/4, i.e.
    # eps^2 rho^2/2 with rho the padded-image rms norm_factor; with
    # rho = 0.9 this is the eps^2 0.81/2 case.
    rng = rng_stream(17)
    u, _ = np.linalg.qr(rng.standard_normal((3, 3))
                        + 1j * rng.standard_normal((3, 3)))
    c = math.sqrt(0.62)  # makes rho^2 = (1 + c^2)/2 = 0.81
    m = unitary_map(u, scale=c)
    z = unit_vector(3, 18)
    eps = 0.3
    out = quantum_step(z, m, epsilon=eps)
    assert out.probability == pytest.approx(eps**2 * 0.81 / 2, abs=1e-12)
    assert out.norm_factor == pytest.approx(0.9, abs=1e-12)
    assert out.image_norm == pytest.approx(c, abs=1e-10)
    assert np.abs(decode(out.posterior) - apply_map(m, z)).max() < 1e-12


def test_lorenz_euler_step_exact_probability():
    # non-measure-preserving: probability = eps^2 (1 + ||E(z)||^2) / 4 exactly
    m = euler_map(lorenz(), 0.05)
    z = np.array([1.0, 1.0, 1.0], complex) / math.sqrt(3.0)
    eps = 0.05
    out = quantum_step(z, m, epsilon=eps)
    image = apply_map(m, z)
    expected = eps**2 * (1 + np.linalg.norm(image) ** 2) / 4
    assert out.probability == pytest.approx(expected, abs=1e-12)


def test_quantum_step_oracle_equivalence_property():
    for seed in range(10):
        rng = rng_stream(1000 + seed)
        n = int(rng.integers(1, 6))
        m = random_unitary_map(n, rng=rng) if n > 1 else power_map(2)
        z = unit_vector(n, 2000 + seed)
        out = quantum_step(z, m)
        image = apply_map(m, z)
        got = decode(out.posterior)
        assert np.abs(got / np.linalg.norm(got)
                      - image / np.linalg.norm(image)).max() < 1e-10
        assert out.probability == pytest.approx(
            out.norm_factor**2 * make_step_operator(m).epsilon ** 2 / 2, rel=1e-12)
        assert out.image_norm == pytest.approx(np.linalg.norm(image), abs=1e-10)


def test_euler_map_step_matches_classical_update():
    from qeuler import orszag_mclaughlin

    sys = orszag_mclaughlin(5)
    h = 0.01
    m = euler_map(sys, h)
    z = unit_vector(5, 19, real=True)
    out = quantum_step(z, m)
    expected = z + h * sys.rhs(z)
    assert np.abs(decode(out.posterior) - expected).max() < 1e-12
    assert out.norm_factor == pytest.approx(1.0, abs=1e-3)  # 1 + O(h^2)
    assert abs(out.norm_factor - 1.0) > 0  # but not exactly 1
    assert out.image_norm == pytest.approx(np.linalg.norm(expected), abs=1e-10)


def test_sampled_mode_reproducible():
    m = power_map(2)
    z = np.array([cmath.exp(0.3j)])
    outs = [quantum_step(z, m, epsilon=0.9, mode="sampled", rng=s)
            for s in (5, 5, 6)]
    assert outs[0].success == outs[1].success
    # probability reported regardless of branch
    assert outs[0].probability == pytest.approx(0.9**2 / 2, abs=1e-12)
    fails = [quantum_step(z, m, epsilon=0.9, mode="sampled", rng=s).success
             for s in range(40)]
    assert any(fails) and not all(fails)  # p = 0.405: both branches appear


def test_second_register_collapse_enforced():
    op = make_step_operator(power_map(2), 0.5)
    joint = tensor_power(encode(np.array([cmath.exp(0.2j)])), 2)
    stepped = apply_step(joint, op)
    # corrupt the success sector with off-anchor-column mass
    amps = stepped.amps.copy()
    amps[4 + 3] += 0.1
    amps /= np.linalg.norm(amps)
    with pytest.raises(ValueError, match="collapse"):
        postselect(JointState(amps, n=1, d=2), 1)


def test_operator_csv_dump(tmp_path):
    A = build_A(power_map(2))
    path = tmp_path / "op.csv"
    dump_operator_csv(A, path)
    lines = path.read_text().splitlines()
    assert lines[0] == "row,col,re,im"
    assert len(lines) == 1 + A.nnz


def test_degree_three_step():
    m = power_map(3)
    theta = 2 * math.pi / 7
    z = np.array([cmath.exp(1j * theta)])
    eps = 0.4
    out = quantum_step(z, m, epsilon=eps)
    # d = 3 copies: success probability eps^2 / 2^(d-1) for measure preservation
    assert out.probability == pytest.approx(eps**2 / 4, abs=1e-12)
    assert out.norm_factor == pytest.approx(1.0, abs=1e-12)
    dec = decode(out.posterior)
    assert abs(dec[0] - cmath.exp(3j * theta)) < 1e-12
