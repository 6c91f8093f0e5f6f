import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from spinstar import analytic, cycle, oracle
from spinstar.core import DomainError, ReducedParams, ResourceLimitError, SpinStarParams, expand
from spinstar.selftest import compare_with_oracle


def test_enumeration_table_small():
    t = oracle.enumerate_ising(ReducedParams(1.0, -1.0, 1))
    assert len(t.configs) == 4
    assert float(np.sum(t.weights)) == pytest.approx(1.0, abs=1e-18)
    assert math.exp(t.log_z) == pytest.approx(3 * math.exp(-1) + math.exp(3), rel=1e-15)
    assert float(t.probability(t.z0 == -1)) == pytest.approx(0.96528, abs=5e-6)


def test_enumeration_ceiling():
    with pytest.raises(ResourceLimitError):
        oracle.enumerate_ising(ReducedParams(1.0, -1.0, oracle.MAX_ENUMERATION_N + 1))


@settings(max_examples=40, deadline=None)
@given(st.floats(0.05, 6.0), st.just(0.0) | st.floats(-3.0, 3.0).filter(lambda r: abs(r) >= 1e-6),
       st.integers(1, 10))
def test_closed_forms_match_enumeration(x, r, N):
    bad = compare_with_oracle(ReducedParams(x, r, N), tol=1e-11)
    # enumeration forms near-zero results as sums of O(1) terms, so its own error
    # is absolute on the natural scale ((N+1)x for betas, N+1 for energies) rather
    # than relative to the result; test_precision judges those cases instead
    def within_scale(key, a, b):
        scale = (N + 1) * x if key.startswith("beta_eff") else N + 1
        return abs(a - b) <= 1e-11 * scale
    assert [b for b in bad if not within_scale(*b[:3])] == []


def test_closed_form_at_canonical_point():
    ov = oracle.oracle_values(ReducedParams(1.0, -1.0, 6))
    assert ov.beta_eff == pytest.approx(1 + 3 * math.log(math.cosh(2.0)), rel=1e-15)
    assert ov.beta_eff_n[0] == ov.beta_eff
    assert ov.beta_eff_n[-1] == ov.beta_eff_whole


def _small_params(kind_n=3, g=-0.7):
    return SpinStarParams(h=1.0, g=g, N=kind_n, beta=0.9)


def test_dense_operator_validation():
    with pytest.raises(DomainError):
        oracle.DenseOperator(np.zeros((3, 3)))
    with pytest.raises(DomainError):
        oracle.DenseOperator(np.array([[0, 1], [0, 0]], dtype=float))


def test_ising_hamiltonian_is_diagonal():
    H = oracle.build_hamiltonian("ising", _small_params())
    assert H.n_qubits == 4
    assert not np.any(H.matrix - np.diag(np.diag(H.matrix)))


def test_heisenberg_two_qubit_spectrum():
    H = oracle.build_hamiltonian("heisenberg", _small_params(kind_n=1))
    h, g = 1.0, -0.7
    assert np.allclose(np.linalg.eigvalsh(H.matrix), sorted([2 * h + g, -2 * h + g, g, -3 * g]), atol=1e-14)


def test_heisenberg_conserves_total_magnetization():
    H = oracle.build_hamiltonian("heisenberg", _small_params(kind_n=3)).matrix
    Sz = np.diag(oracle._z_values(4).sum(axis=1).astype(float))
    assert np.allclose(H @ Sz, Sz @ H, atol=1e-13)


def test_dense_ceiling_and_kind():
    with pytest.raises(ResourceLimitError):
        oracle.build_hamiltonian("heisenberg", _small_params(kind_n=oracle.MAX_DENSE_N + 1))
    with pytest.raises(DomainError):
        oracle.build_hamiltonian("xy", _small_params())


@pytest.mark.parametrize("x,r,N", [(1.0, -1.0, 6), (0.3, 0.4, 2), (2.0, -2.0, 5)])
def test_dense_ising_cycle_matches_closed_form(x, r, N):
    p = ReducedParams(x, r, N)
    dense = oracle.dense_cycle("ising", expand(p, 1.3))
    closed = cycle.stroke_energies(p)
    for key in ("E0", "E1", "E2", "E3", "W_cycle", "beta_eff", "central_cooling"):
        assert getattr(dense, key) == pytest.approx(getattr(closed, key), rel=1e-12, abs=1e-15)


def test_gibbs_state_properties():
    H = oracle.build_hamiltonian("heisenberg", _small_params(kind_n=3))
    rho = oracle.gibbs_state(H, 0.9)
    assert np.trace(rho) == pytest.approx(1.0, abs=1e-14)
    assert oracle.is_hermitian(rho)
    assert np.linalg.eigvalsh(rho).min() > -1e-15


def test_marginals():
    params = SpinStarParams(h=1.0, g=-1.0, N=4, beta=1.0)
    rho = oracle.gibbs_state(oracle.build_hamiltonian("ising", params), params.beta)
    st_ = oracle.central_marginal(rho)
    closed = analytic.central_populations(ReducedParams(1.0, -1.0, 4))
    assert st_.p_up == pytest.approx(closed.p_up, rel=1e-12)
    assert not st_.has_coherence
    anc = oracle.qubit_marginal(rho, 2)
    assert np.real(anc[0, 0]) == pytest.approx(analytic.ancilla_populations(ReducedParams(1.0, -1.0, 4)).excited,
                                               rel=1e-12)


def test_heisenberg_cools_less_at_canonical_point():
    params = SpinStarParams(h=1.0, g=-1.0, N=6, beta=1.0)
    heis = oracle.heisenberg_cycle(params)
    ising = cycle.stroke_energies(ReducedParams(1.0, -1.0, 6))
    assert 1.0 < heis.beta_eff < ising.beta_eff
    assert heis.W_cycle + heis.Q2 + heis.Q4 == pytest.approx(0.0, abs=1e-12)


def test_heisenberg_reduced_state_is_diagonal():
    params = SpinStarParams(h=1.0, g=-1.0, N=4, beta=1.0)
    rho = oracle.gibbs_state(oracle.build_hamiltonian("heisenberg", params), 1.0)
    assert oracle.central_marginal(rho).coherence < 1e-12


def test_spectrum_reuse_gives_identical_cycle():
    params = SpinStarParams(h=1.0, g=-0.5, N=3, beta=0.7)
    spec = oracle.ThermalSpectrum(oracle.build_hamiltonian("heisenberg", params))
    assert oracle.heisenberg_cycle(params, spec) == oracle.heisenberg_cycle(params)
