import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from spinstar import analytic, collision
from spinstar.core import DomainError, ReducedParams

PAIR = collision.TargetIsingModel((1.0, 1.5), 0.25)


def test_transition_frequencies_coupled_pair():
    lines = [(t.qubit, t.omega) for t in collision.transition_frequencies(PAIR)]
    assert lines == [(0, 1.5), (0, 2.5), (1, 2.5), (1, 3.5)]


def test_transition_frequencies_uncoupled_are_degenerate():
    lines = collision.transition_frequencies(collision.TargetIsingModel((1.0, 1.5), 0.0))
    assert [(t.qubit, t.omega, t.degeneracy) for t in lines] == [(0, 2.0, 2), (1, 3.0, 2)]


def test_zero_frequency_flagged():
    lines = collision.transition_frequencies(collision.TargetIsingModel((1.0, 1.5), 1.0))
    assert [t.is_zero_frequency for t in lines] == [True, False, False, False]
    with pytest.raises(DomainError):
        collision.jump_operators(collision.TargetIsingModel((1.0, 1.5), 1.0), 0, 0.0)


def test_model_validation():
    with pytest.raises(DomainError):
        collision.TargetIsingModel((1.0, -1.0), 0.1)
    with pytest.raises(DomainError):
        collision.TargetIsingModel((1.0, 1.0), 0.1, pairs=((0, 2),))


def test_jump_operator_uncoupled_is_bare_lowering():
    m = collision.TargetIsingModel((1.0, 1.5), 0.0)
    A, Ad = collision.jump_operators(m, 0, 2.0)
    lower = np.array([[0, 0], [1, 0]], dtype=float)  # |down><up|
    assert np.array_equal(A, np.kron(lower, np.eye(2)))
    assert np.array_equal(Ad, A.T)


def test_jump_operator_coupled_is_rank_one_and_lowers_energy():
    A, _ = collision.jump_operators(PAIR, 0, 1.5)
    assert np.linalg.matrix_rank(A) == 1
    E = PAIR.energies()
    (lo,), (hi,) = np.nonzero(A)
    assert E[hi] - E[lo] == pytest.approx(1.5)
    AdA = A.T @ A
    assert np.array_equal(AdA, np.diag(np.diag(AdA)))


def test_jump_operator_rejects_unknown_frequency():
    with pytest.raises(DomainError):
        collision.jump_operators(PAIR, 0, 2.0)


def test_bath_validation():
    with pytest.raises(DomainError):
        collision.BathSpec(1.0, 0, 0.7, 0.4)
    with pytest.raises(DomainError):
        collision.BathSpec(1.0, 0, 0.5, 0.5, rate=-1.0)
    b = collision.BathSpec.thermal(0, 2.0, 0.8)
    assert b.p_e / b.p_g == pytest.approx(math.exp(-1.6))
    assert b.beta == pytest.approx(0.8)


def test_bath_must_hit_a_transition():
    with pytest.raises(DomainError):
        collision.build_liouvillian(PAIR, [collision.BathSpec.thermal(0, 2.0, 1.0)])
    with pytest.raises(DomainError):
        collision.build_liouvillian(PAIR, [collision.BathSpec.thermal(3, 1.5, 1.0)])


def test_no_baths_means_no_evolution():
    L = collision.build_liouvillian(PAIR, [])
    assert not np.any(L.matrix)
    rho0 = collision.gibbs_state(PAIR, 0.3)
    traj = collision.evolve(rho0, L, 1.0, 0.1)
    assert np.allclose(traj.states, rho0)
    with pytest.raises(collision.NonUniqueSteadyStateError):
        collision.steady_state(L)


def test_zero_duration_returns_initial_state():
    L = collision.build_liouvillian(PAIR, collision.environment_baths(PAIR, 0.5))
    rho0 = collision.gibbs_state(PAIR, 0.1)
    traj = collision.evolve(rho0, L, 0.0, 0.1)
    assert len(traj.states) == 1 and np.array_equal(traj.final, rho0)


def test_liouvillian_preserves_trace_and_hermiticity():
    L = collision.build_liouvillian(PAIR, collision.environment_baths(PAIR, 0.5), unitary=True)
    rng = np.random.default_rng(0)
    X = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    rho = X @ X.conj().T
    d = L(rho / np.trace(rho))
    assert abs(np.trace(d)) < 1e-14
    assert np.allclose(d, d.conj().T, atol=1e-14)


@settings(max_examples=25, deadline=None)
@given(st.floats(0.05, 3.0), st.floats(0.2, 2.0))
def test_isolated_qubit_relaxes_to_gibbs(beta, h):
    m = collision.TargetIsingModel((h,))
    L = collision.build_liouvillian(m, [collision.BathSpec.thermal(0, 2 * h, beta)])
    ss = collision.steady_state(L)
    assert collision.trace_distance(ss, collision.gibbs_state(m, beta)) < 1e-12
    assert collision.effective_beta(m, ss) == pytest.approx(beta, rel=1e-9)


def test_missing_lines_give_non_unique_steady_state():
    baths = [collision.BathSpec.thermal(0, 1.5, 1.0), collision.BathSpec.thermal(0, 2.5, 1.0)]
    with pytest.raises(collision.NonUniqueSteadyStateError, match="connect"):
        collision.steady_state(collision.build_liouvillian(PAIR, baths))


@settings(max_examples=20, deadline=None)
@given(st.floats(0.1, 3.0))
def test_kms_fixed_point_any_temperature(beta):
    baths = [collision.BathSpec.thermal(t.qubit, t.omega, beta) for t in collision.transition_frequencies(PAIR)]
    ss = collision.steady_state(collision.build_liouvillian(PAIR, baths))
    assert 1 - collision.fidelity(ss, collision.gibbs_state(PAIR, beta)) < 1e-10


def test_degenerate_lines_stay_separate():
    # 2|h1 - J| = 2|h2 + J| = 1.0: same frequency on different qubits
    m = collision.TargetIsingModel((0.75, 0.25), 0.25)
    lines = collision.transition_frequencies(m)
    assert sum(1 for t in lines if t.omega == pytest.approx(1.0)) == 2
    assert len({(t.qubit, t.omega) for t in lines}) == 4


def test_trajectory_invariants_and_monotone_approach():
    refs = collision.refrigerant_baths(PAIR, 0.4, 1.0, 6)
    L = collision.build_liouvillian(PAIR, [r.bath for r in refs])
    ss = collision.steady_state(L)
    traj = collision.evolve(collision.gibbs_state(PAIR, 0.4), L, 20.0, 0.01, sample_every=20)
    assert traj.max_trace_drift <= 1e-9
    assert traj.min_eigenvalue >= -1e-10
    assert traj.halving_error < 1e-8
    assert all(np.allclose(s, s.conj().T, atol=1e-10) for s in traj.states)
    dist = [collision.trace_distance(s, ss) for s in traj.states]
    assert all(b <= a + 1e-12 for a, b in zip(dist, dist[1:]))


def test_coarse_step_is_rejected():
    refs = collision.refrigerant_baths(PAIR, 0.4, 1.0, 6, rate=10.0)
    L = collision.build_liouvillian(PAIR, [r.bath for r in refs])
    with pytest.raises(collision.IntegrationError):
        collision.evolve(collision.gibbs_state(PAIR, 0.4), L, 5.0, 0.2)


def test_evolve_input_validation():
    L = collision.build_liouvillian(PAIR, [])
    with pytest.raises(DomainError):
        collision.evolve(np.eye(2) / 2, L, 1.0, 0.1)
    with pytest.raises(DomainError):
        collision.evolve(np.eye(4), L, 1.0, 0.1)


def test_refrigerants_share_one_temperature():
    refs = collision.refrigerant_baths(PAIR, 0.4, 1.0, 6)
    assert [r.bath.beta for r in refs] == pytest.approx([1.0] * 4, rel=1e-12)
    for r in refs:
        p = ReducedParams(0.4 * r.h, r.g / r.h, 6)
        assert analytic.beta_eff(p) == pytest.approx(1.0 * r.h, rel=1e-12)


def test_refrigerant_bound_is_named():
    with pytest.raises(DomainError, match=r"\(N\+1\)"):
        collision.refrigerant_baths(PAIR, 0.4, 2.8, 6)


def test_refrigerant_populations_modes():
    p = ReducedParams(1.0, -1.0, 6)
    pg, pe = collision.refrigerant_populations(p)
    assert pg / pe == pytest.approx(math.exp(2 * (1 + 3 * math.log(math.cosh(2.0)))), rel=1e-12)
    wg, we = collision.refrigerant_populations(p, "whole")
    assert wg + we == pytest.approx(1.0)
    assert we > pe
    ng, ne = collision.refrigerant_populations(p, "n_ancillas", 3)
    assert pe < ne < we
    gg, ge = collision.refrigerant_populations(ReducedParams(0.8, 0.0, 3))
    assert ge / gg == pytest.approx(math.exp(-1.6))
    with pytest.raises(DomainError):
        collision.refrigerant_populations(p, "n_ancillas")
    with pytest.raises(DomainError):
        collision.refrigerant_populations(p, "bogus")


@pytest.mark.parametrize("ratio", [0.1, 1.0, 10.0])
def test_additivity_between_gibbs_states(ratio):
    cold = [collision.BathSpec.thermal(t.qubit, t.omega, 2.0) for t in collision.transition_frequencies(PAIR)]
    warm = collision.environment_baths(PAIR, 0.5, rate=ratio)
    ss = collision.steady_state(collision.build_liouvillian(PAIR, cold + warm))
    assert 0.5 < collision.effective_beta(PAIR, ss) < 2.0


def test_effective_beta_limits():
    E = PAIR.energies()
    ground = np.diag((E == E.min()).astype(float))
    assert collision.effective_beta(PAIR, ground) == math.inf
    assert collision.effective_beta(PAIR, np.eye(4) / 4) == pytest.approx(0.0, abs=1e-12)


def test_fidelity_and_trace_distance():
    a, b = collision.gibbs_state(PAIR, 0.3), collision.gibbs_state(PAIR, 1.0)
    assert collision.fidelity(a, a) == pytest.approx(1.0, abs=1e-14)
    assert collision.trace_distance(a, a) == pytest.approx(0.0, abs=1e-15)
    # commuting states: fidelity is the squared Bhattacharyya coefficient
    pa, pb = np.diag(a), np.diag(b)
    assert collision.fidelity(a, b) == pytest.approx(np.sum(np.sqrt(pa * pb)) ** 2, rel=1e-12)


def test_trajectory_csv(tmp_path):
    L = collision.build_liouvillian(PAIR, collision.environment_baths(PAIR, 0.5))
    traj = collision.evolve(collision.gibbs_state(PAIR, 0.1), L, 1.0, 0.01, sample_every=25)
    out = tmp_path / "traj.csv"
    collision.write_trajectory_csv(out, traj, PAIR, collision.gibbs_state(PAIR, 0.5))
    lines = out.read_text().splitlines()
    assert lines[0] == ("time_ns,p_uu,p_ud,p_du,p_dd,effective_temperature_estimate,"
                        "trace_distance_to_target_gibbs")
    assert len(lines) == 1 + len(traj.times)
    first = [float(v) for v in lines[1].split(",")]
    assert first[0] == 0.0 and sum(first[1:5]) == pytest.approx(1.0)
    assert first[5] == pytest.approx(1 / 0.1, rel=1e-9)
