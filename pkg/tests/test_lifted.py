"""Convolution dynamics, mixing certificates, and diagnostic functionals."""

from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from groupsym.groups import cyclic_group, symmetric_group, transposition_index
from groupsym.lifted import (
    ConvexWeights,
    GroupMismatchError,
    MixingCertificate,
    TransitionMatrix,
    check_mixing,
    convolve,
    envelope_bounds,
    find_mixing_certificate,
    laplacian,
    lyapunov_norm,
    rate_bound,
    read_trajectory_csv,
    relative_entropy,
    run_lifted,
    transition_matrix,
    window_weights,
    write_trajectory_csv,
)

Z2 = cyclic_group(2)
Z4 = cyclic_group(4)
Z6 = cyclic_group(6)
S3 = symmetric_group(3)


def permutation_matrices(group):
    """Oracle: left-translation matrices Pi_h with Pi_h e_k = e_{h*k}."""
    mats = []
    for h in range(group.order):
        m = np.zeros((group.order, group.order))
        for k in range(group.order):
            m[group.mul(h, k), k] = 1.0
        mats.append(m)
    return mats


def s3_pair_cycle(alpha=0.5):
    """Cyclic two-point signal over the three transpositions of S3."""
    swaps = [
        transposition_index(S3, 0, 1),
        transposition_index(S3, 1, 2),
        transposition_index(S3, 0, 2),
    ]
    signal = []
    for g in swaps:
        w = np.zeros(S3.order)
        w[S3.identity] = 1.0 - alpha
        w[g] = alpha
        signal.append(ConvexWeights(w, S3))
    return signal


def cycle_signal(base, steps):
    return [base[t % len(base)] for t in range(steps)]


def random_weights(group, rng):
    return ConvexWeights(rng.dirichlet(np.ones(group.order)), group)


# -- ConvexWeights -----------------------------------------------------------


def test_weights_validation():
    w = ConvexWeights([0.25, 0.75], Z2)
    assert w.weights[1] == 0.75
    with pytest.raises(ValueError, match="below"):
        ConvexWeights([1.1, -0.1], Z2)
    with pytest.raises(ValueError, match="sum"):
        ConvexWeights([0.6, 0.6], Z2)
    with pytest.raises(ValueError, match="shape|expected"):
        ConvexWeights([1.0], Z2)


def test_weights_clamp_and_renormalize():
    # tiny negative round-off is clamped
    w = ConvexWeights([1.0 + 1e-13, -1e-13], Z2)
    assert w.weights[1] == 0.0
    # sums drifting beyond 1e-13 are renormalized back to 1
    drifted = np.array([0.5, 0.5]) * (1.0 + 5e-13)
    w = ConvexWeights(drifted, Z2)
    assert abs(w.weights.sum() - 1.0) < 1e-15


def test_point_mass_and_uniform():
    d = ConvexWeights.point_mass(S3)
    assert d.weights[S3.identity] == 1.0
    assert d.support().tolist() == [S3.identity]
    u = ConvexWeights.uniform(S3)
    assert np.all(u.weights == pytest.approx(1 / 6))


# -- convolution -------------------------------------------------------------


def test_identity_point_mass_is_neutral():
    rng = np.random.default_rng(0)
    p = random_weights(S3, rng)
    e = ConvexWeights.point_mass(S3)
    assert np.allclose(convolve(e, p).weights, p.weights, atol=1e-15)
    s = random_weights(S3, rng)
    assert np.allclose(convolve(s, e).weights, s.weights, atol=1e-15)


def test_convolution_z2_by_hand():
    # one step of s = (0.55, 0.45) applied to p = (1, 0):
    # matrix [[0.55, 0.45], [0.45, 0.55]] times (1, 0) = (0.55, 0.45)
    s = ConvexWeights([0.55, 0.45], Z2)
    p = ConvexWeights.point_mass(Z2)
    out = convolve(s, p)
    assert out.weights == pytest.approx([0.55, 0.45], abs=1e-15)


def test_uniform_is_fixed_point():
    rng = np.random.default_rng(1)
    u = ConvexWeights.uniform(S3)
    for _ in range(20):
        s = random_weights(S3, rng)
        assert np.abs(convolve(s, u).weights - u.weights).max() < 1e-12


def test_convolution_group_mismatch():
    with pytest.raises(GroupMismatchError):
        convolve(ConvexWeights.uniform(Z2), ConvexWeights.uniform(S3))


@pytest.mark.parametrize("group", [Z4, Z6, S3, symmetric_group(4)], ids=str)
def test_matrix_and_convolution_paths_agree(group):
    rng = np.random.default_rng(group.order)
    for _ in range(10):
        s = random_weights(group, rng)
        p = random_weights(group, rng)
        via_matrix = transition_matrix(s).matrix @ p.weights
        via_convolution = convolve(s, p).weights
        assert np.abs(via_matrix - via_convolution).max() < 1e-12


@settings(max_examples=50, deadline=None)
@given(
    s_raw=st.lists(st.floats(0.01, 1.0), min_size=6, max_size=6),
    p_raw=st.lists(st.floats(0.01, 1.0), min_size=6, max_size=6),
)
def test_convolution_stays_in_simplex(s_raw, p_raw):
    s = ConvexWeights(np.array(s_raw) / np.sum(s_raw), S3)
    p = ConvexWeights(np.array(p_raw) / np.sum(p_raw), S3)
    out = convolve(s, p)
    assert out.weights.min() >= 0.0
    assert abs(out.weights.sum() - 1.0) <= 1e-12
    # Lyapunov distance to uniform never increases
    assert lyapunov_norm(out) <= lyapunov_norm(p) + 1e-12


# -- transition matrices -----------------------------------------------------


def test_transition_matrix_of_point_mass_is_identity():
    m = transition_matrix(ConvexWeights.point_mass(S3)).matrix
    assert np.array_equal(m, np.eye(6))


def test_transition_matrix_z2():
    alpha = 0.3
    m = transition_matrix(ConvexWeights([1 - alpha, alpha], Z2)).matrix
    assert np.allclose(m, [[0.7, 0.3], [0.3, 0.7]], atol=1e-15)


def test_transition_matrix_equals_weighted_translations():
    rng = np.random.default_rng(2)
    mats = permutation_matrices(S3)
    for _ in range(5):
        s = random_weights(S3, rng)
        oracle = sum(s.weights[h] * mats[h] for h in range(6))
        assert np.allclose(transition_matrix(s).matrix, oracle, atol=1e-15)


def test_transition_matrix_doubly_stochastic():
    rng = np.random.default_rng(3)
    for group in (Z6, S3, symmetric_group(4)):
        m = transition_matrix(random_weights(group, rng)).matrix
        assert np.abs(m.sum(axis=0) - 1).max() < 1e-12
        assert np.abs(m.sum(axis=1) - 1).max() < 1e-12


def test_transition_matrix_validation():
    with pytest.raises(ValueError, match="column|row"):
        TransitionMatrix(np.eye(2) * 1.5, Z2)


# -- window weights ----------------------------------------------------------


def test_window_of_length_one_is_the_signal():
    signal = s3_pair_cycle()
    q = window_weights(signal, 1, 1)
    assert np.array_equal(q.weights, signal[1].weights)


def test_window_weights_z2_uniformizes():
    s = ConvexWeights([0.5, 0.5], Z2)
    q = window_weights([s, s], 0, 2)
    assert q.weights == pytest.approx([0.5, 0.5], abs=1e-15)


def test_window_matches_ordered_matrix_product():
    signal = cycle_signal(s3_pair_cycle(), 6)
    mats = permutation_matrices(S3)
    for t in (0, 1, 2):
        T = 3
        q = window_weights(signal, t, T)
        product = np.eye(6)
        for i in range(T):
            product = transition_matrix(signal[t + i]).matrix @ product
        recomposed = sum(q.weights[g] * mats[g] for g in range(6))
        assert np.allclose(recomposed, product, atol=1e-14)
        # identity column of the product is q itself
        assert np.allclose(product[:, S3.identity], q.weights, atol=1e-14)


def test_window_weights_bounds():
    signal = s3_pair_cycle()
    with pytest.raises(ValueError, match=">= 1"):
        window_weights(signal, 0, 0)
    with pytest.raises(ValueError, match="exceeds"):
        window_weights(signal, 2, 3)


# -- mixing certificates -----------------------------------------------------


def test_identity_signal_never_mixes():
    e = ConvexWeights.point_mass(S3)
    cert = check_mixing([e] * 10, 0, 10, 3, 1e-9)
    assert not cert.satisfied
    t, g = cert.witness
    assert g != S3.identity


def test_s3_cycle_mixes_at_window_three():
    signal = cycle_signal(s3_pair_cycle(), 30)
    assert check_mixing(signal, 0, 30, 3, 0.1).satisfied
    cert = check_mixing(signal, 0, 30, 3, 0.13)
    assert not cert.satisfied  # achieved minimum is exactly 1/8


def test_find_certificate_s3_cycle():
    signal = cycle_signal(s3_pair_cycle(), 30)
    cert = find_mixing_certificate(signal, max_T=12)
    assert cert.satisfied
    assert cert.T == 3
    assert cert.delta == pytest.approx(0.125, abs=1e-15)
    assert cert.delta <= 1.0 / S3.order


def test_find_certificate_constant_generator_signal():
    # s = (1/2 identity, 1/2 generator) on Z4 first covers the group at T = 3
    s = ConvexWeights([0.5, 0.5, 0.0, 0.0], Z4)
    cert = find_mixing_certificate([s] * 20, max_T=10)
    assert cert.satisfied
    assert cert.T == 3
    assert cert.delta == pytest.approx(1 / 8, abs=1e-15)


def test_subgroup_support_never_certifies():
    # support {0, 2} stays inside the even-residue subgroup of Z6
    s = ConvexWeights([0.5, 0.0, 0.5, 0.0, 0.0, 0.0], Z6)
    signal = [s] * 40
    cert = find_mixing_certificate(signal, max_T=24)
    assert not cert.satisfied
    t, g = cert.witness
    assert g % 2 == 1
    for T in (1, 4, 9, 24):
        assert not check_mixing(signal, 0, 40, T, 0.0).satisfied


def test_check_mixing_range_errors():
    signal = cycle_signal(s3_pair_cycle(), 10)
    with pytest.raises(ValueError, match="horizon"):
        check_mixing(signal, 0, 2, 3, 0.1)
    with pytest.raises(ValueError, match="exceeds"):
        check_mixing(signal, 5, 10, 3, 0.1)


# -- lifted runs -------------------------------------------------------------


def test_run_lifted_zero_steps():
    p0 = ConvexWeights.point_mass(S3)
    traj = run_lifted(p0, [], 0)
    assert len(traj) == 1 and traj[0] is p0


def test_run_lifted_signal_exhausted():
    p0 = ConvexWeights.point_mass(S3)
    with pytest.raises(ValueError, match="exhausted"):
        run_lifted(p0, s3_pair_cycle(), 5)


def test_run_lifted_uniformizes_z2_in_one_step():
    s = ConvexWeights([0.5, 0.5], Z2)
    traj = run_lifted(ConvexWeights.point_mass(Z2), [s], 1)
    assert traj[-1].weights == pytest.approx([0.5, 0.5], abs=0)


def test_run_lifted_trajectory_length():
    signal = cycle_signal(s3_pair_cycle(), 25)
    traj = run_lifted(ConvexWeights.point_mass(S3), signal, 25)
    assert len(traj) == 26


# -- contraction envelopes ---------------------------------------------------


def test_envelope_closed_form():
    x, y = envelope_bounds(2, 0.1, 3)
    assert x - y == pytest.approx(0.8**3, abs=1e-15)
    assert x == pytest.approx(0.5 + 0.5 * 0.8**3, abs=1e-15)
    assert y == pytest.approx(0.5 - 0.5 * 0.8**3, abs=1e-15)


def test_envelope_collapses_at_maximal_delta():
    x, y = envelope_bounds(4, 0.25, 1)
    assert x == pytest.approx(0.25) and y == pytest.approx(0.25)


def test_envelope_validation():
    with pytest.raises(ValueError):
        envelope_bounds(4, 0.0, 1)
    with pytest.raises(ValueError):
        envelope_bounds(4, 0.3, 1)
    with pytest.raises(ValueError):
        envelope_bounds(4, 0.1, -1)


def test_rate_bound_window_floor():
    assert rate_bound(Z2, 5, 0.1, 14) == pytest.approx(0.8**2, abs=1e-15)
    assert rate_bound(Z2, 5, 0.1, 15) == pytest.approx(0.8**3, abs=1e-15)
    ts = np.arange(0, 60)
    vals = [rate_bound(Z2, 5, 0.1, int(t)) for t in ts]
    assert all(b <= a + 1e-15 for a, b in zip(vals, vals[1:]))


def test_envelopes_contain_certified_trajectory():
    steps = 60
    signal = cycle_signal(s3_pair_cycle(), steps)
    cert = find_mixing_certificate(signal, max_T=6)
    traj = run_lifted(ConvexWeights.point_mass(S3), signal, steps)
    for k in range(steps // cert.T + 1):
        p = traj[k * cert.T].weights
        x, y = envelope_bounds(S3.order, cert.delta, k)
        assert p.min() >= y - 1e-12
        assert p.max() <= x + 1e-12


# -- diagnostics -------------------------------------------------------------


def test_lyapunov_norm_values():
    assert lyapunov_norm(ConvexWeights.uniform(S3)) == 0.0
    assert lyapunov_norm(ConvexWeights.point_mass(Z2)) == pytest.approx(0.5)


def test_lyapunov_monotone_along_runs():
    rng = np.random.default_rng(4)
    p = random_weights(S3, rng)
    for _ in range(200):
        s = random_weights(S3, rng)
        nxt = convolve(s, p)
        assert lyapunov_norm(nxt) <= lyapunov_norm(p) + 1e-12
        p = nxt


def test_relative_entropy_values():
    u = ConvexWeights.uniform(S3)
    assert relative_entropy(u, u) == pytest.approx(0.0, abs=1e-15)
    d = ConvexWeights.point_mass(S3)
    assert relative_entropy(d, u) == pytest.approx(math.log(6), abs=1e-12)


def test_relative_entropy_domain_error():
    p = ConvexWeights([0.5, 0.5], Z2)
    q = ConvexWeights.point_mass(Z2)
    with pytest.raises(ValueError, match="undefined"):
        relative_entropy(p, q)


def test_relative_entropy_strictly_decreases_on_certified_windows():
    steps = 30
    signal = cycle_signal(s3_pair_cycle(), steps)
    cert = find_mixing_certificate(signal, max_T=6)
    traj = run_lifted(ConvexWeights.point_mass(S3), signal, steps)
    u = ConvexWeights.uniform(S3)
    for t in range(steps - cert.T):
        p = traj[t]
        if np.abs(p.weights - 1 / 6).max() <= 1e-7:
            continue
        drop = relative_entropy(p, u) - relative_entropy(traj[t + cert.T], u)
        assert drop > 0.0


def test_laplacian():
    m = transition_matrix(ConvexWeights.point_mass(S3))
    assert np.array_equal(laplacian(m), np.zeros((6, 6)))
    alpha = 0.45
    mz = transition_matrix(ConvexWeights([1 - alpha, alpha], Z2))
    assert np.allclose(laplacian(mz), [[alpha, -alpha], [-alpha, alpha]], atol=1e-15)
    rng = np.random.default_rng(5)
    lap = laplacian(transition_matrix(random_weights(S3, rng)))
    assert np.abs(lap.sum(axis=0)).max() < 1e-12
    assert np.abs(lap.sum(axis=1)).max() < 1e-12


def test_subgroup_support_confines_trajectory():
    s = ConvexWeights([0.5, 0.0, 0.5, 0.0, 0.0, 0.0], Z6)
    traj = run_lifted(ConvexWeights.point_mass(Z6), [s] * 30, 30)
    for p in traj:
        assert p.weights[1::2].max() == 0.0


# -- CSV round trip ----------------------------------------------------------


def test_trajectory_csv_roundtrip(tmp_path):
    steps = 12
    signal = cycle_signal(s3_pair_cycle(), steps)
    traj = run_lifted(ConvexWeights.point_mass(S3), signal, steps)
    weights = np.array([p.weights for p in traj])
    u = ConvexWeights.uniform(S3)
    lyap = [lyapunov_norm(p) for p in traj]
    kl = [relative_entropy(p, u) for p in traj]
    path = tmp_path / "trajectory.csv"
    write_trajectory_csv(path, weights, lyap, kl)
    header = path.read_text().splitlines()[0]
    assert header == "step,g0,g1,g2,g3,g4,g5,lyapunov,kl"
    w2, l2, k2 = read_trajectory_csv(path)
    assert np.array_equal(w2, weights)
    assert np.array_equal(l2, np.array(lyap))
    assert np.array_equal(k2, np.array(kl))


def test_trajectory_csv_detects_bad_rows(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("step,g0,g1,lyapunov,kl\n0,0.5,0.5,0.0,0.0\n7,0.5,0.5,0.0,0.0\n")
    with pytest.raises(ValueError, match="labeled"):
        read_trajectory_csv(path)
