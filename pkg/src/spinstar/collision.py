"""Collision-model cooling of a longitudinal Ising target.

The target Hamiltonian is diagonal in the computational basis,
H = sum_i h_i sigma_z,i + J sum_(i,j) sigma_z,i sigma_z,j, so its spectral
projectors are basis projectors. Each colliding bath qubit is resonant with
one transition frequency of one target qubit and contributes

    rate * ( p_g D[A] + p_e D[A^dagger] ),   D[A]rho = A rho A^+ - {A^+ A, rho}/2,

where A = sum_E Pi(E) sigma_x,i Pi(E + omega) lowers the energy by omega.
Dissipators of different baths add. Times are in ns, frequencies in GHz
(1/ns), inverse temperatures in 1/GHz.
"""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg, optimize

from . import analytic
from .core import DomainError, ReducedParams, SpinStarError

log = logging.getLogger(__name__)

FREQ_TOL = 1e-9


class NonUniqueSteadyStateError(SpinStarError):
    """The generator has more than one stationary state."""


class IntegrationError(SpinStarError):
    """The fixed-step integrator produced an unphysical or unconverged state."""


@dataclass(frozen=True)
class TargetIsingModel:
    """Longitudinal Ising target: qubit gaps ``gaps`` (GHz) and coupling ``J``.

    ``pairs`` lists coupled qubit pairs (0-based); ``None`` means a chain.
    Qubit 0 is the most significant bit and bit value 0 is spin up.
    """

    gaps: tuple
    J: float = 0.0
    pairs: tuple | None = None

    def __post_init__(self):
        gaps = tuple(float(h) for h in self.gaps)
        if not gaps:
            raise DomainError("target needs at least one qubit")
        if any(not (h > 0 and math.isfinite(h)) for h in gaps):
            raise DomainError(f"qubit gaps must be positive, got {gaps}")
        object.__setattr__(self, "gaps", gaps)
        n = len(gaps)
        pairs = self.pairs
        if pairs is None:
            pairs = tuple((i, i + 1) for i in range(n - 1))
        pairs = tuple((int(i), int(j)) for i, j in pairs)
        for i, j in pairs:
            if not (0 <= i < n and 0 <= j < n and i != j):
                raise DomainError(f"bad coupled pair {(i, j)} for {n} qubits")
        object.__setattr__(self, "pairs", pairs)

    @property
    def n_qubits(self) -> int:
        return len(self.gaps)

    @property
    def dim(self) -> int:
        return 2 ** self.n_qubits

    def spins(self) -> np.ndarray:
        """z values, shape (dim, n_qubits)."""
        n = self.n_qubits
        idx = np.arange(self.dim)
        return 1 - 2 * ((idx[:, None] >> (n - 1 - np.arange(n))[None, :]) & 1)

    def energies(self) -> np.ndarray:
        z = self.spins()
        E = z @ np.asarray(self.gaps)
        for i, j in self.pairs:
            E = E + self.J * z[:, i] * z[:, j]
        return E.astype(float)

    def hamiltonian(self) -> np.ndarray:
        return np.diag(self.energies())

    def basis_labels(self) -> list:
        return ["".join("u" if s > 0 else "d" for s in row) for row in self.spins()]


@dataclass(frozen=True)
class Transition:
    """A resonant transition of one target qubit.

    ``pairs`` holds (upper, lower) basis-state indices flipped by the qubit
    and separated by ``omega``; more than one pair means a degenerate line.
    """

    qubit: int
    omega: float
    pairs: tuple

    @property
    def is_zero_frequency(self) -> bool:
        return self.omega <= FREQ_TOL

    @property
    def degeneracy(self) -> int:
        return len(self.pairs)


def transition_frequencies(m: TargetIsingModel) -> list:
    """All (qubit, omega) lines of the target, sorted by qubit then omega.

    Lines of different qubits are never merged even if their frequencies
    coincide. Zero-frequency lines are returned with ``is_zero_frequency``
    set; no dissipator can be built for them.
    """
    E = m.energies()
    n = m.n_qubits
    out = []
    for q in range(n):
        mask = 1 << (n - 1 - q)
        lines: dict = {}
        for s in range(m.dim):
            if s & mask:
                continue  # visit each flip once, from the up state
            t = s | mask
            dE = E[s] - E[t]
            upper, lower = (s, t) if dE >= 0 else (t, s)
            omega = abs(dE)
            key = next((k for k in lines if abs(k - omega) <= FREQ_TOL * max(1.0, omega)), omega)
            lines.setdefault(key, []).append((upper, lower))
        for omega in sorted(lines):
            tr = Transition(qubit=q, omega=float(omega), pairs=tuple(lines[omega]))
            if tr.is_zero_frequency:
                log.warning("qubit %d has a zero-frequency transition; secular approximation fails", q)
            out.append(tr)
    return out


def jump_operators(m: TargetIsingModel, qubit: int, omega: float):
    """Lowering operator A(omega) of ``qubit`` and its adjoint."""
    E = m.energies()
    n = m.n_qubits
    if not 0 <= qubit < n:
        raise DomainError(f"qubit index {qubit} out of range")
    mask = 1 << (n - 1 - qubit)
    A = np.zeros((m.dim, m.dim))
    for s in range(m.dim):
        t = s ^ mask
        # sigma_x maps s -> t; keep it when it lowers the energy by omega
        if abs((E[s] - E[t]) - omega) <= FREQ_TOL * max(1.0, abs(omega)):
            A[t, s] = 1.0
    if not A.any() or omega <= FREQ_TOL:
        raise DomainError(f"no transition of qubit {qubit} at omega = {omega!r}")
    return A, A.T.copy()


@dataclass(frozen=True)
class BathSpec:
    """One colliding qubit: resonance ``omega``, populations, and rate (1/ns)."""

    omega: float
    qubit_index: int
    p_g: float
    p_e: float
    rate: float = 1.0
    label: str = ""

    def __post_init__(self):
        if not (0 <= self.p_g <= 1 and 0 <= self.p_e <= 1):
            raise DomainError(f"bath populations must lie in [0, 1], got {self.p_g}, {self.p_e}")
        if abs(self.p_g + self.p_e - 1) > 1e-12:
            raise DomainError(f"bath populations must sum to 1, got {self.p_g + self.p_e!r}")
        if not self.rate >= 0:
            raise DomainError(f"rate must be non-negative, got {self.rate!r}")

    @classmethod
    def thermal(cls, qubit_index: int, omega: float, beta: float, rate: float = 1.0, label: str = ""):
        """A bath qubit in the Gibbs state at ``beta``: p_e/p_g = exp(-beta omega)."""
        p_e = 1.0 / (1.0 + math.exp(beta * omega))
        p_g = 1.0 / (1.0 + math.exp(-beta * omega))
        return cls(omega=omega, qubit_index=qubit_index, p_g=p_g, p_e=p_e, rate=rate, label=label)

    @property
    def beta(self) -> float:
        """Inverse temperature implied by the populations at this frequency."""
        return math.log(self.p_g / self.p_e) / self.omega


def _dissipator(A: np.ndarray) -> np.ndarray:
    # column-stacking: vec(X rho Y) = (Y^T kron X) vec(rho)
    d = A.shape[0]
    eye = np.eye(d)
    AdA = A.conj().T @ A
    return np.kron(A.conj(), A) - 0.5 * np.kron(eye, AdA) - 0.5 * np.kron(AdA.T, eye)


@dataclass
class Liouvillian:
    """Superoperator of d rho/dt acting on column-stacked density matrices."""

    matrix: np.ndarray
    dim: int
    baths: tuple = ()

    def __call__(self, rho: np.ndarray) -> np.ndarray:
        v = self.matrix @ rho.reshape(-1, order="F")
        return v.reshape(self.dim, self.dim, order="F")

    def __add__(self, other: "Liouvillian") -> "Liouvillian":
        if other.dim != self.dim:
            raise DomainError("cannot add generators of different dimension")
        return Liouvillian(self.matrix + other.matrix, self.dim, self.baths + other.baths)


def build_liouvillian(m: TargetIsingModel, baths, unitary: bool = False) -> Liouvillian:
    """Sum of collision dissipators for ``baths`` on target ``m``.

    With ``unitary=True`` the -i[H, rho] term is included (Schroedinger
    picture); it leaves populations and the steady state unchanged because
    H is diagonal.
    """
    d = m.dim
    L = np.zeros((d * d, d * d), dtype=complex)
    baths = tuple(baths)
    for bath in baths:
        if not isinstance(bath, BathSpec):
            raise DomainError(f"expected BathSpec, got {type(bath).__name__}")
        if not 0 <= bath.qubit_index < m.n_qubits:
            raise DomainError(f"bath targets qubit {bath.qubit_index} of a {m.n_qubits}-qubit system")
        A, Ad = jump_operators(m, bath.qubit_index, bath.omega)
        if bath.rate == 0:
            continue
        L += bath.rate * (bath.p_g * _dissipator(A) + bath.p_e * _dissipator(Ad))
    if unitary:
        H = m.hamiltonian()
        eye = np.eye(d)
        L += -1j * (np.kron(eye, H) - np.kron(H.T, eye))
    return Liouvillian(L, d, baths)


@dataclass
class Trajectory:
    times: np.ndarray
    states: np.ndarray
    dt: float
    max_trace_drift: float = 0.0
    max_hermiticity_defect: float = 0.0
    min_eigenvalue: float = 0.0
    halving_error: float | None = None

    @property
    def final(self) -> np.ndarray:
        return self.states[-1]


def _rk4_propagator(L: Liouvillian, dt: float) -> np.ndarray:
    # one classical RK4 step of a linear ODE is the 4th-order Taylor polynomial
    M = dt * L.matrix
    eye = np.eye(M.shape[0], dtype=complex)
    M2 = M @ M
    return eye + M + M2 / 2 + (M2 @ M) / 6 + (M2 @ M2) / 24


def _integrate(rho0, L, t_final, dt, sample_every):
    steps = max(1, math.ceil(t_final / dt - 1e-9)) if t_final > 0 else 0
    h = t_final / steps if steps else dt
    P = _rk4_propagator(L, h) if steps else None
    d = L.dim
    rho = np.array(rho0, dtype=complex)
    tr0 = np.trace(rho).real
    times, states = [0.0], [rho.copy()]
    drift = herm = 0.0
    min_eig = float(np.linalg.eigvalsh(rho).min())
    for k in range(1, steps + 1):
        v = P @ rho.reshape(-1, order="F")
        rho = v.reshape(d, d, order="F")
        herm = max(herm, float(np.max(np.abs(rho - rho.conj().T))))
        rho = 0.5 * (rho + rho.conj().T)
        if k % sample_every == 0 or k == steps:
            drift = max(drift, abs(np.trace(rho).real - tr0))
            lam = float(np.linalg.eigvalsh(rho).min())
            min_eig = min(min_eig, lam)
            if lam < -1e-8:
                raise IntegrationError(
                    f"density matrix lost positivity (eigenvalue {lam:.3e}) at t = {k * h:g} ns; "
                    "use a smaller dt"
                )
            times.append(k * h)
            states.append(rho.copy())
    if herm > 1e-12:
        log.debug("re-symmetrized a Hermiticity defect of %.3e", herm)
    return Trajectory(np.array(times), np.array(states), h, drift, herm, min_eig)


def evolve(rho0: np.ndarray, L: Liouvillian, t_final: float, dt: float,
           sample_every: int = 1, check_halving: bool = True) -> Trajectory:
    """Integrate d rho/dt = L(rho) with fixed-step RK4 up to ``t_final`` ns.

    ``dt`` is shrunk slightly if needed so an integer number of steps lands on
    ``t_final``; states are kept every ``sample_every`` steps plus the last.
    With ``check_halving`` the run is repeated at dt/2 and an
    :class:`IntegrationError` is raised if the endpoints differ by more than
    1e-8 in trace distance.
    """
    rho0 = np.asarray(rho0)
    if rho0.shape != (L.dim, L.dim):
        raise DomainError(f"state of shape {rho0.shape} does not match generator dim {L.dim}")
    if abs(np.trace(rho0).real - 1) > 1e-9:
        raise DomainError("initial state must have unit trace")
    if t_final < 0 or dt <= 0:
        raise DomainError("need t_final >= 0 and dt > 0")
    traj = _integrate(rho0, L, t_final, dt, sample_every)
    if check_halving and t_final > 0:
        fine = _integrate(rho0, L, t_final, traj.dt / 2, 2 * sample_every)
        traj.halving_error = trace_distance(traj.final, fine.final)
        if traj.halving_error > 1e-8:
            raise IntegrationError(
                f"halving dt changed the endpoint by {traj.halving_error:.2e} (> 1e-8); use a smaller dt"
            )
    return traj


def steady_state(L: Liouvillian, tol: float = 1e-10) -> np.ndarray:
    """Unique stationary state from the null space of the generator."""
    if not np.any(L.matrix):
        raise NonUniqueSteadyStateError("generator is zero: every state is stationary")
    _, s, vh = linalg.svd(L.matrix)
    null = s <= tol * s[0]
    k = int(np.count_nonzero(null))
    if k != 1:
        raise NonUniqueSteadyStateError(
            f"generator kernel has dimension {k}; the bath transitions do not connect all states"
        )
    v = vh[-1].conj()
    rho = v.reshape(L.dim, L.dim, order="F")
    rho = rho / np.trace(rho)
    return 0.5 * (rho + rho.conj().T)


def gibbs_state(m: TargetIsingModel, beta: float) -> np.ndarray:
    E = m.energies()
    w = np.exp(-beta * (E - E.min()))
    return np.diag(w / w.sum())


def effective_beta(m: TargetIsingModel, rho: np.ndarray) -> float:
    """Inverse temperature of the Gibbs state with the same mean energy as ``rho``."""
    E = m.energies()
    target = float(np.real(np.sum(np.diag(rho) * E)))
    if target <= E.min() + 1e-15 * max(1.0, abs(E.min())):
        return math.inf

    def f(b):
        return float(np.sum(np.diag(gibbs_state(m, b)) * E)) - target

    lo, hi = -1.0, 1.0
    while f(hi) > 0:
        hi *= 2.0
        if hi > 1e6:
            return math.inf
    while f(lo) < 0:
        lo *= 2.0
        if lo < -1e6:
            return -math.inf
    return optimize.brentq(f, lo, hi, xtol=1e-15, rtol=1e-14, maxiter=500)


def trace_distance(rho: np.ndarray, sigma: np.ndarray) -> float:
    return 0.5 * float(np.sum(np.abs(np.linalg.eigvalsh(rho - sigma))))


def fidelity(rho: np.ndarray, sigma: np.ndarray) -> float:
    """Uhlmann fidelity (tr |sqrt(rho) sqrt(sigma)|)^2."""

    def sqrtm_psd(a):
        w, v = np.linalg.eigh(0.5 * (a + a.conj().T))
        return (v * np.sqrt(np.clip(w, 0, None))) @ v.conj().T

    sv = np.linalg.svd(sqrtm_psd(rho) @ sqrtm_psd(sigma), compute_uv=False)
    return float(np.sum(sv) ** 2)


# -- refrigerant populations ------------------------------------------------


REFRIGERANT_MODES = ("central_only", "whole", "n_ancillas")


def refrigerant_populations(p: ReducedParams, mode: str = "central_only", n: int | None = None):
    """(p_g, p_e) of the colliding refrigerant after the coupling is switched off.

    ``central_only`` uses the central qubit; ``whole`` pools all N+1 qubits;
    ``n_ancillas`` pools the center with ``n`` ancillas. Pooled populations
    are normalized per qubit.
    """
    if mode == "central_only":
        st = analytic.central_populations(p)
        return st.p_down, st.p_up
    if mode == "whole":
        n = p.N
    elif mode == "n_ancillas":
        if n is None:
            raise DomainError("mode 'n_ancillas' needs n")
    else:
        raise DomainError(f"unknown refrigerant mode {mode!r}; choose from {REFRIGERANT_MODES}")
    pop = analytic.pooled_populations(p, n)
    total = pop.excited + pop.ground
    return pop.ground / total, pop.excited / total


@dataclass(frozen=True)
class Refrigerant:
    """A spin-star tuned so its central qubit reaches a common beta_eff."""

    transition: Transition
    h: float
    g: float
    N: int
    beta: float
    bath: BathSpec = field(repr=False)


def refrigerant_baths(m: TargetIsingModel, beta_env: float, beta_eff: float, N: int,
                      rate: float = 1.0) -> list:
    """One spin-star refrigerant per transition, all cooled to ``beta_eff``.

    The refrigerant for line omega has gap h = omega/2; its coupling g is
    found by bisection on the monotone beta_eff(g). Raises
    :class:`DomainError` if beta_eff is not below the (N+1) beta bound.
    """
    if not beta_eff < (N + 1) * beta_env:
        raise DomainError(
            f"beta_eff = {beta_eff!r} is at or beyond the (N+1)*beta = {(N + 1) * beta_env!r} "
            f"bound for N = {N}: the requested temperature is unreachable"
        )
    out = []
    for tr in transition_frequencies(m):
        if tr.is_zero_frequency:
            raise DomainError(f"qubit {tr.qubit} has a zero-frequency transition")
        h = tr.omega / 2
        x = beta_env * h
        r = analytic.solve_coupling(x, N, beta_eff * h)
        p_g, p_e = refrigerant_populations(ReducedParams(x, r, N))
        bath = BathSpec(omega=tr.omega, qubit_index=tr.qubit, p_g=p_g, p_e=p_e, rate=rate,
                        label=f"refrigerant q{tr.qubit} w={tr.omega:g}")
        out.append(Refrigerant(tr, h, r * h, N, beta_env, bath))
    return out


def environment_baths(m: TargetIsingModel, beta_env: float, rate: float = 1.0) -> list:
    """Thermal contacts with the environment on every transition of the target."""
    return [
        BathSpec.thermal(tr.qubit, tr.omega, beta_env, rate, label=f"environment q{tr.qubit} w={tr.omega:g}")
        for tr in transition_frequencies(m)
        if not tr.is_zero_frequency
    ]


def write_trajectory_csv(path, traj: Trajectory, m: TargetIsingModel, reference: np.ndarray,
                         to_temperature=None) -> None:
    """Write one row per sampled time.

    Columns: time_ns, p_<basis label>..., effective_temperature_estimate,
    trace_distance_to_target_gibbs. ``to_temperature`` maps an inverse
    temperature to the reported unit (defaults to 1/beta).
    """
    labels = m.basis_labels()
    conv = to_temperature or (lambda b: 1.0 / b)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["time_ns", *[f"p_{s}" for s in labels],
                    "effective_temperature_estimate", "trace_distance_to_target_gibbs"])
        for t, rho in zip(traj.times, traj.states):
            b = effective_beta(m, rho)
            temp = conv(b) if 0 < b < math.inf else (0.0 if b == math.inf else math.inf)
            pops = np.real(np.diag(rho))
            w.writerow([repr(float(t)), *[repr(float(p)) for p in pops], repr(float(temp)),
                        repr(trace_distance(rho, reference))])
