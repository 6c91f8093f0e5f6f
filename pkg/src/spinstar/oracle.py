"""Ground-truth engines for the spin-star.

Two independent routes that share nothing with :mod:`spinstar.analytic`:

* brute-force enumeration of all 2^(N+1) classical configurations of the
  Ising star, with exactly rounded sums;
* dense Hamiltonians (Ising or Heisenberg coupling) and their Gibbs states,
  diagonalized with LAPACK.

Basis convention: qubit 0 (the center) is the most significant bit and bit
value 0 is spin up (sigma_z = +1). The enumeration index of a configuration is
therefore its computational-basis index.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .analytic import CentralQubitState
from .core import DomainError, ReducedParams, ResourceLimitError, SpinStarParams, half_log_ratio
from .cycle import CycleReport

MAX_ENUMERATION_N = 24
MAX_DENSE_N = 12


LD = np.longdouble


def _fsum_dot(w: np.ndarray, f: np.ndarray) -> float:
    return math.fsum((w * f).tolist())


@dataclass(frozen=True)
class ConfigurationTable:
    """Every configuration of the Ising star with its energy and weight.

    ``energies`` are in units of h: z0 + sum(z_n) + r z0 sum(z_n).
    ``weights`` are normalized Boltzmann weights exp(-x E)/Z. Both are kept
    in extended precision so that differences of thermal averages (the
    cycle work) survive to ~1e-15 relative.
    """

    params: ReducedParams
    configs: np.ndarray
    z0: np.ndarray
    s_ancilla: np.ndarray
    energies: np.ndarray
    weights: np.ndarray
    log_z: float

    @property
    def n_qubits(self) -> int:
        return self.params.N + 1

    def spin(self, k: int) -> np.ndarray:
        """z_k = +/-1 for every configuration."""
        bit = (self.configs >> (self.n_qubits - 1 - k)) & 1
        return (1 - 2 * bit).astype(np.int8)

    def expect(self, values) -> np.longdouble:
        return np.sum(self.weights * np.asarray(values, dtype=LD))

    def probability(self, mask) -> np.longdouble:
        return np.sum(self.weights[np.asarray(mask)])


def enumerate_ising(p: ReducedParams) -> ConfigurationTable:
    """Tabulate all 2^(N+1) configurations (N <= 24)."""
    if p.N > MAX_ENUMERATION_N:
        raise ResourceLimitError(
            f"enumeration of N={p.N} ancillas exceeds the ceiling N={MAX_ENUMERATION_N}"
        )
    n = p.N + 1
    configs = np.arange(2 ** n, dtype=np.int64)
    ups = np.zeros(configs.shape, dtype=np.int64)
    for k in range(1, n):
        ups += 1 - ((configs >> (n - 1 - k)) & 1)
    z0 = (1 - 2 * ((configs >> (n - 1)) & 1)).astype(np.int8)
    s_anc = (2 * ups - p.N).astype(np.int64)
    energies = z0 + s_anc + LD(p.r) * (z0 * s_anc)
    log_w = -LD(p.x) * energies
    shift = log_w.max()
    w = np.exp(log_w - shift)
    total = np.sum(w)
    return ConfigurationTable(
        params=p,
        configs=configs,
        z0=z0,
        s_ancilla=s_anc,
        energies=energies,
        weights=w / total,
        log_z=float(shift + np.log(total)),
    )


@dataclass(frozen=True)
class OracleValues:
    """Everything the closed forms predict, recomputed by enumeration."""

    log_z: float
    p_up: float
    p_down: float
    beta_eff: float
    s_total: float
    s_ancilla: float
    E0: float
    E1: float
    E2: float
    E3: float
    h_int: float
    W_cycle: float
    beta_eff_whole: float
    beta_eff_ancilla: float
    beta_eff_n: tuple

    def as_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


def _pooled_beta(table: ConfigurationTable, qubits) -> float:
    qubits = list(qubits)
    excited = sum(table.probability(table.spin(k) == 1) for k in qubits)
    ground = sum(table.probability(table.spin(k) == -1) for k in qubits)
    # ground - excited as one weighted sum of integers, so dominant
    # configurations with zero net spin cancel exactly
    diff = table.expect(-sum(table.spin(k) for k in qubits))
    return half_log_ratio(ground, excited, diff)


def oracle_values(p: ReducedParams) -> OracleValues:
    """Enumerate the correlated and the product thermal state and average."""
    table = enumerate_ising(p)
    product = enumerate_ising(p.with_r(0.0))
    N = p.N

    p_up = table.probability(table.z0 == 1)
    p_down = table.probability(table.z0 == -1)
    r = LD(p.r)
    bare = table.z0 + table.s_ancilla

    E0 = product.expect(product.z0 + product.s_ancilla)
    E2 = table.expect(table.energies)
    h_int = table.expect(r * (table.z0 * table.s_ancilla))
    E3 = table.expect(bare)
    # the coupling switches on with the product state frozen
    E1 = product.expect(product.z0 + product.s_ancilla + r * (product.z0 * product.s_ancilla))

    beta_n = tuple(_pooled_beta(table, range(0, n + 1)) for n in range(N + 1))
    return OracleValues(
        log_z=table.log_z,
        p_up=float(p_up),
        p_down=float(p_down),
        beta_eff=beta_n[0],
        s_total=float(E3),
        s_ancilla=float(table.expect(table.s_ancilla)),
        E0=float(E0),
        E1=float(E1),
        E2=float(E2),
        E3=float(E3),
        h_int=float(h_int),
        W_cycle=float((E1 - E0) + (E3 - E2)),
        beta_eff_whole=beta_n[N],
        beta_eff_ancilla=_pooled_beta(table, [1]),
        beta_eff_n=beta_n,
    )


# -- dense operators ---------------------------------------------------------


@dataclass(frozen=True)
class DenseOperator:
    """A dense matrix on n qubits (dim = 2**n)."""

    matrix: np.ndarray
    hermitian: bool = True

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def n_qubits(self) -> int:
        return self.dim.bit_length() - 1

    def __post_init__(self):
        m = self.matrix
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise DomainError("operator must be a square matrix")
        d = m.shape[0]
        if d < 1 or d & (d - 1):
            raise DomainError(f"dimension {d} is not a power of two")
        if self.hermitian and not is_hermitian(m):
            raise DomainError("matrix flagged Hermitian is not Hermitian to 1e-13")


def is_hermitian(m: np.ndarray, atol: float = 1e-13) -> bool:
    return bool(np.max(np.abs(m - m.conj().T), initial=0.0) <= atol)


def _z_values(n: int) -> np.ndarray:
    """z_k for every basis state, shape (2**n, n)."""
    idx = np.arange(2 ** n)
    bits = (idx[:, None] >> (n - 1 - np.arange(n))[None, :]) & 1
    return 1 - 2 * bits


def build_hamiltonian(kind: str, params: SpinStarParams, interaction: bool = True) -> DenseOperator:
    """Dense spin-star Hamiltonian, in GHz.

    ``kind='ising'``: h sum sigma_z + g sigma_z0 sum sigma_zn (diagonal).
    ``kind='heisenberg'``: the coupling runs over x, y and z components.
    With ``interaction=False`` only the field term is built.
    """
    if kind not in ("ising", "heisenberg"):
        raise DomainError(f"unknown Hamiltonian kind {kind!r}")
    N = params.N
    if N > MAX_DENSE_N:
        raise ResourceLimitError(f"dense Hamiltonian for N={N} exceeds the ceiling N={MAX_DENSE_N}")
    n = N + 1
    dim = 2 ** n
    z = _z_values(n)
    diag = params.h * z.sum(axis=1).astype(float)
    if interaction:
        diag = diag + params.g * z[:, 0] * z[:, 1:].sum(axis=1)
    H = np.diag(diag)
    if kind == "heisenberg" and interaction:
        # (XX + YY) on (0, j) = 2 (s+ s- + s- s+): flips an anti-aligned pair
        idx = np.arange(dim)
        for j in range(1, n):
            anti = z[:, 0] != z[:, j]
            src = idx[anti]
            dst = src ^ ((1 << (n - 1)) | (1 << (n - 1 - j)))
            H[dst, src] += 2.0 * params.g
    return DenseOperator(H)


class ThermalSpectrum:
    """Eigendecomposition of a Hamiltonian, reused for Gibbs states at many beta."""

    def __init__(self, H: DenseOperator | np.ndarray):
        m = H.matrix if isinstance(H, DenseOperator) else np.asarray(H)
        if not is_hermitian(m, atol=1e-13 * max(1.0, float(np.max(np.abs(m), initial=0.0)))):
            raise DomainError("Gibbs state requires a Hermitian Hamiltonian")
        self.dim = m.shape[0]
        offdiag = m - np.diag(np.diag(m))
        self.diagonal = not np.any(offdiag)
        if self.diagonal:
            self.energies = np.real(np.diag(m)).astype(float)
            self.vectors = None
        else:
            self.energies, self.vectors = np.linalg.eigh(m)

    def weights(self, beta: float) -> np.ndarray:
        """Normalized Boltzmann weights of the eigenstates (extended precision)."""
        lw = -LD(beta) * (self.energies.astype(LD) - LD(self.energies.min()))
        w = np.exp(lw)
        return w / np.sum(w)

    def state(self, beta: float) -> np.ndarray:
        w = self.weights(beta).astype(float)
        if self.diagonal:
            return np.diag(w)
        V = self.vectors
        rho = (V * w) @ V.conj().T
        return 0.5 * (rho + rho.conj().T)

    def populations(self, beta: float) -> np.ndarray:
        """Diagonal of the Gibbs state in the computational basis."""
        w = self.weights(beta)
        if self.diagonal:
            return w
        return (np.abs(self.vectors) ** 2).astype(LD) @ w

    def mean_energy(self, beta: float) -> np.longdouble:
        return np.sum(self.weights(beta) * self.energies.astype(LD))


def gibbs_state(H: DenseOperator | np.ndarray, beta: float) -> np.ndarray:
    """exp(-beta H)/Z by eigendecomposition."""
    return ThermalSpectrum(H).state(beta)


def qubit_marginal(rho: np.ndarray, k: int) -> np.ndarray:
    """2x2 reduced state of qubit ``k`` (qubit 0 is the most significant bit)."""
    dim = rho.shape[0]
    n = dim.bit_length() - 1
    if 2 ** n != dim:
        raise DomainError(f"dimension {dim} is not a power of two")
    t = rho.reshape((2 ** k, 2, 2 ** (n - k - 1)) * 2)
    return np.einsum("aibajb->ij", t)


def central_marginal(rho: np.ndarray) -> CentralQubitState:
    """Reduced state of the central qubit; populations define beta_eff."""
    red = qubit_marginal(rho, 0)
    p_up = float(np.real(red[0, 0]))
    p_down = float(np.real(red[1, 1]))
    return CentralQubitState(
        p_up=p_up,
        p_down=p_down,
        beta_eff=0.5 * math.log(p_down / p_up),
        coherence=float(abs(red[0, 1])),
    )


def dense_cycle(kind: str, params: SpinStarParams, spectrum: ThermalSpectrum | None = None) -> CycleReport:
    """Four-stroke bookkeeping with Gibbs states from dense diagonalization.

    Energies are in units of h and ``beta_eff`` is beta_eff*h, matching the
    closed-form :func:`spinstar.cycle.stroke_energies`. A precomputed
    ``spectrum`` of the coupled Hamiltonian can be passed when sweeping
    temperature at fixed (h, g, N).
    """
    h = LD(params.h)
    x = LD(params.beta) * h
    H0 = build_hamiltonian(kind, params, interaction=False)
    H = build_hamiltonian(kind, params)
    field = np.real(np.diag(H0.matrix)).astype(LD)

    p0 = ThermalSpectrum(H0).weights(params.beta)
    E0 = np.sum(p0 * field) / h
    # the product state is diagonal, so only the diagonal of H contributes
    E1 = np.sum(p0 * np.real(np.diag(H.matrix)).astype(LD)) / h

    spec = spectrum if spectrum is not None else ThermalSpectrum(H)
    pops = spec.populations(params.beta)
    E2 = spec.mean_energy(params.beta) / h
    E3 = np.sum(pops * field) / h

    z0 = _z_values(params.N + 1)[:, 0]
    p_up = np.sum(pops[z0 == 1])
    p_down = np.sum(pops[z0 == -1])
    return CycleReport.from_energies(
        x, E0, E1, E2, E3,
        beta_eff=np.log(p_down / p_up) / 2,
        central_cooling=(p_down - p_up) - np.tanh(x),
    )


def heisenberg_cycle(params: SpinStarParams, spectrum: ThermalSpectrum | None = None) -> CycleReport:
    return dense_cycle("heisenberg", params, spectrum)
