"""Truncated Fock space: states, operators, frame changes, grid projection.

Composite states are stored spin-major: index ``s * dim + n`` for spin level
``s`` and phonon number ``n``.  Spin orderings are

* ``spin_dim == 2``: ``(|+>, |->)`` with ``|±> = (|+1> ± |-1>)/sqrt(2)``
* ``spin_dim == 3``: ``(|+1>, |0>, |-1>)``
"""
from __future__ import annotations

import functools
import math
import warnings
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from . import _kernels
from .errors import BasisMismatchError, TruncationError
from .grid import GridSpec, GridWavefunction
from .units import HBAR


class TruncationWarning(RuntimeWarning):
    pass


@dataclass(frozen=True)
class FockBasis:
    dim: int
    omega: float
    mass: float

    def __post_init__(self):
        if self.dim < 2:
            raise ValueError("Fock basis needs dim >= 2")
        if not (self.omega > 0 and self.mass > 0):
            raise ValueError("omega and mass must be positive")

    @property
    def a(self) -> float:
        """Zero-point width sqrt(hbar / 2 m omega)."""
        return math.sqrt(HBAR / (2 * self.mass * self.omega))

    @property
    def x0(self) -> float:
        """Oscillator length sqrt(hbar / m omega), the Hermite-function scale."""
        return math.sqrt(2.0) * self.a

    def resized(self, dim: int) -> "FockBasis":
        return FockBasis(dim, self.omega, self.mass)

    def with_omega(self, omega: float) -> "FockBasis":
        return FockBasis(self.dim, omega, self.mass)


@dataclass(frozen=True, eq=False)
class QuantumState:
    amplitudes: np.ndarray
    basis: FockBasis
    spin_dim: int = 1

    def __post_init__(self):
        amp = np.asarray(self.amplitudes, dtype=np.complex128).ravel()
        if self.spin_dim not in (1, 2, 3):
            raise ValueError("spin_dim must be 1, 2 or 3")
        if amp.size != self.spin_dim * self.basis.dim:
            raise BasisMismatchError(f"{amp.size} amplitudes for spin_dim={self.spin_dim}, dim={self.basis.dim}")
        amp.setflags(write=False)
        object.__setattr__(self, "amplitudes", amp)
        norm = np.linalg.norm(amp)
        if abs(norm - 1.0) > 1e-9:
            raise ValueError(f"state norm {norm!r} differs from 1 by more than 1e-9")

    @classmethod
    def normalized(cls, amplitudes, basis: FockBasis, spin_dim: int = 1) -> "QuantumState":
        amp = np.asarray(amplitudes, dtype=np.complex128).ravel()
        norm = np.linalg.norm(amp)
        if norm == 0:
            raise ValueError("cannot normalize the zero vector")
        return cls(amp / norm, basis, spin_dim)

    @property
    def components(self) -> np.ndarray:
        """Amplitudes reshaped to ``(spin_dim, dim)``."""
        return self.amplitudes.reshape(self.spin_dim, self.basis.dim)

    def same_space(self, other) -> bool:
        return self.basis == other.basis and self.spin_dim == other.spin_dim

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def spin_populations(self) -> np.ndarray:
        return np.sum(np.abs(self.components) ** 2, axis=1)

    def phonon_populations(self) -> np.ndarray:
        return np.sum(np.abs(self.components) ** 2, axis=0)

    def reduced_phonon(self) -> np.ndarray:
        """Oscillator density matrix with the spin traced out."""
        c = self.components
        return c.T @ c.conj()

    def phonon_fidelity(self, target) -> float:
        """<target| rho_phonon |target> for a normalized oscillator vector."""
        target = np.asarray(target, dtype=np.complex128)
        return float(np.sum(np.abs(self.components @ target.conj()) ** 2))

    def pad(self, dim: int) -> "QuantumState":
        """Embed in a larger truncation (zero amplitudes on the new levels)."""
        c = np.zeros((self.spin_dim, dim), dtype=np.complex128)
        c[:, : self.basis.dim] = self.components
        return QuantumState(c.ravel(), self.basis.resized(dim), self.spin_dim)

    def position_moments(self) -> tuple[float, float]:
        """Mean and standard deviation of position, spin traced out."""
        a, ad = _ladder(self.basis.dim)
        x = self.basis.a * (a + ad)
        rho = self.reduced_phonon()
        mean = float(np.real(np.trace(rho @ x)))
        var = float(np.real(np.trace(rho @ x @ x))) - mean**2
        return mean, math.sqrt(max(var, 0.0))


@dataclass(frozen=True, eq=False)
class OperatorMatrix:
    """Dense operator on ``spin_dim * basis.dim`` levels.

    The ``hermitian`` and ``unitary`` flags are checked at construction.
    Hamiltonians are stored as H/hbar (rad/s).
    """

    entries: np.ndarray
    basis: FockBasis
    spin_dim: int = 1
    hermitian: bool = False
    unitary: bool = False

    def __post_init__(self):
        m = np.asarray(self.entries, dtype=np.complex128)
        n = self.spin_dim * self.basis.dim
        if m.shape != (n, n):
            raise BasisMismatchError(f"operator shape {m.shape} does not match {n} levels")
        m.setflags(write=False)
        object.__setattr__(self, "entries", m)
        if self.hermitian:
            dev = np.max(np.abs(m - m.conj().T))
            if dev > 1e-10 * max(1.0, np.max(np.abs(m))):
                raise ValueError(f"operator flagged hermitian but |A - A^dag| = {dev:.3g}")
        if self.unitary:
            dev = np.max(np.abs(m.conj().T @ m - np.eye(n)))
            if dev > 1e-10:
                raise ValueError(f"operator flagged unitary but |A^dag A - 1| = {dev:.3g}")

    @property
    def shape(self):
        return self.entries.shape

    def __matmul__(self, other):
        if isinstance(other, QuantumState):
            self._check(other)
            return QuantumState.normalized(self.entries @ other.amplitudes, self.basis, self.spin_dim)
        if isinstance(other, OperatorMatrix):
            if other.basis != self.basis or other.spin_dim != self.spin_dim:
                raise BasisMismatchError("operators act on different spaces")
            prod = self.entries @ other.entries
            return OperatorMatrix(prod, self.basis, self.spin_dim, unitary=self.unitary and other.unitary)
        return NotImplemented

    def apply(self, state: QuantumState) -> np.ndarray:
        """Raw (unnormalized) product with a state vector."""
        self._check(state)
        return self.entries @ state.amplitudes

    def expect(self, state: QuantumState) -> complex:
        return complex(np.vdot(state.amplitudes, self.apply(state)))

    def _check(self, state):
        if state.basis != self.basis or state.spin_dim != self.spin_dim:
            raise BasisMismatchError("state and operator live in different spaces")

    @cached_property
    def eig(self) -> tuple[np.ndarray, np.ndarray]:
        """Eigen-decomposition of a Hermitian operator, block-aware.

        When the operator does not couple different spin levels each
        ``dim x dim`` block is diagonalized on its own.
        """
        if not self.hermitian:
            raise ValueError("eig is only defined for operators flagged hermitian")
        m = self.entries
        d, s = self.basis.dim, self.spin_dim
        blocks = m.reshape(s, d, s, d)
        off = blocks.copy()
        for i in range(s):
            off[i, :, i, :] = 0
        if s > 1 and not np.any(off):
            evals = np.empty(s * d)
            evecs = np.zeros((s * d, s * d), dtype=np.complex128)
            for i in range(s):
                w, v = np.linalg.eigh(blocks[i, :, i, :])
                evals[i * d : (i + 1) * d] = w
                evecs[i * d : (i + 1) * d, i * d : (i + 1) * d] = v
            return evals, evecs
        return np.linalg.eigh(m)

    def propagator(self, t: float) -> "OperatorMatrix":
        """exp(-i H t) for a Hermitian generator."""
        w, v = self.eig
        u = (v * np.exp(-1j * w * t)) @ v.conj().T
        return OperatorMatrix(u, self.basis, self.spin_dim, unitary=True)


# ---------------------------------------------------------------------------
# Elementary operators


@functools.lru_cache(maxsize=32)
def _ladder(dim: int):
    a = np.diag(np.sqrt(np.arange(1, dim, dtype=np.float64)), 1)
    a.setflags(write=False)
    ad = a.T.copy()
    ad.setflags(write=False)
    return a, ad


def ladder_ops(basis: FockBasis) -> tuple[OperatorMatrix, OperatorMatrix]:
    """Annihilation and creation operators, truncated at ``basis.dim``."""
    a, ad = _ladder(basis.dim)
    return OperatorMatrix(a, basis), OperatorMatrix(ad, basis)


def number_op(basis: FockBasis) -> OperatorMatrix:
    return OperatorMatrix(np.diag(np.arange(basis.dim, dtype=float)), basis, hermitian=True)


def parity(basis: FockBasis) -> OperatorMatrix:
    """(-1)^(a^dag a)."""
    signs = np.where(np.arange(basis.dim) % 2 == 0, 1.0, -1.0)
    return OperatorMatrix(np.diag(signs), basis, hermitian=True, unitary=True)


def position_op(basis: FockBasis) -> OperatorMatrix:
    a, ad = _ladder(basis.dim)
    return OperatorMatrix(basis.a * (a + ad), basis, hermitian=True)


def displacement(basis: FockBasis, alpha: complex) -> OperatorMatrix:
    """exp(alpha a^dag - alpha* a) via diagonalization of i times the generator.

    Warns with ``TruncationWarning`` when D(alpha)|0> puts more than 1e-6
    probability in the top 10% of the levels.
    """
    a, ad = _ladder(basis.dim)
    if alpha == 0:
        return OperatorMatrix(np.eye(basis.dim), basis, hermitian=True, unitary=True)
    herm = 1j * (alpha * ad - np.conj(alpha) * a)
    w, v = np.linalg.eigh(herm)
    d = (v * np.exp(-1j * w)) @ v.conj().T
    top = basis.dim - max(1, basis.dim // 10)
    leak = float(np.sum(np.abs(d[top:, 0]) ** 2))
    if leak > 1e-6:
        warnings.warn(
            f"displacement |alpha|={abs(alpha):.3g} leaks {leak:.2e} into the top levels of a dim={basis.dim} basis",
            TruncationWarning,
            stacklevel=2,
        )
    return OperatorMatrix(d, basis, unitary=True)


SIGMA_Z = np.diag([1.0, -1.0]).astype(complex)
SIGMA_PLUS = np.array([[0, 1], [0, 0]], dtype=complex)  # |+><-|
SIGMA_MINUS = SIGMA_PLUS.T.copy()
S_Z = np.diag([1.0, 0.0, -1.0]).astype(complex)  # on (|+1>, |0>, |-1>)


def spin_vector(label: str) -> np.ndarray:
    """Spin kets by name: '+', '-' (spin_dim 2) and '+1', '0', '-1' (spin_dim 3)."""
    table = {
        "+": np.array([1, 0], dtype=complex),
        "-": np.array([0, 1], dtype=complex),
        "+1": np.array([1, 0, 0], dtype=complex),
        "0": np.array([0, 1, 0], dtype=complex),
        "-1": np.array([0, 0, 1], dtype=complex),
    }
    return table[label].copy()


def fock_vector(dim: int, n: int) -> np.ndarray:
    if not 0 <= n < dim:
        raise TruncationError(f"Fock level {n} outside a dim={dim} basis")
    v = np.zeros(dim, dtype=complex)
    v[n] = 1
    return v


def fock_state(basis: FockBasis, n: int) -> QuantumState:
    return QuantumState(fock_vector(basis.dim, n), basis)


def product_state(spin, osc, basis: FockBasis) -> QuantumState:
    """Normalized ``spin ⊗ osc`` from raw vectors."""
    spin = np.asarray(spin, dtype=complex)
    osc = osc.amplitudes if isinstance(osc, QuantumState) else np.asarray(osc, dtype=complex)
    return QuantumState.normalized(np.kron(spin, osc), basis, spin.size)


def on_oscillator(op: np.ndarray, spin_dim: int) -> np.ndarray:
    return np.kron(np.eye(spin_dim), op)


def on_spin(op: np.ndarray, dim: int) -> np.ndarray:
    return np.kron(op, np.eye(dim))


# ---------------------------------------------------------------------------
# Fidelity


def fidelity(a: QuantumState, b: QuantumState) -> float:
    """|<a|b>|^2."""
    if not a.same_space(b):
        raise BasisMismatchError("fidelity needs states in the same space")
    return float(min(1.0, abs(np.vdot(a.amplitudes, b.amplitudes)) ** 2))


# ---------------------------------------------------------------------------
# Frame change between Fock ladders of different trap frequency


@functools.lru_cache(maxsize=16)
def _overlap_matrix(dim_new, omega_new, dim_old, omega_old, mass):
    """M[m, n] = <m_new | n_old> by quadrature on a dense symmetric grid."""
    x0n = math.sqrt(HBAR / (mass * omega_new))
    x0o = math.sqrt(HBAR / (mass * omega_old))
    turn = max(math.sqrt(2 * dim_new + 1) * x0n, math.sqrt(2 * dim_old + 1) * x0o)
    half = turn + 12 * max(x0n, x0o)
    kmax = math.sqrt(2 * dim_new + 1) / x0n + math.sqrt(2 * dim_old + 1) / x0o
    dz = 0.5 * math.pi / kmax
    k = int(math.ceil(half / dz))
    z = np.linspace(-k * dz, k * dz, 2 * k + 1)
    tn = _kernels.hermite_table(z / x0n, dim_new - 1) / math.sqrt(x0n)
    to = _kernels.hermite_table(z / x0o, dim_old - 1) / math.sqrt(x0o)
    m = (tn * dz) @ to.T
    # Hermite functions have definite parity; cross-parity elements vanish identically
    mask = (np.arange(dim_new)[:, None] + np.arange(dim_old)[None, :]) % 2 == 1
    m[mask] = 0.0
    m.setflags(write=False)
    return m


def frame_change(state: QuantumState, new_omega: float, new_dim: int | None = None) -> QuantumState:
    """Re-express the same wavefunction in the Fock ladder of ``new_omega``.

    This is the sudden approximation for a trap-frequency jump.  Raises
    ``TruncationError`` if more than 1e-6 of the norm falls outside the new
    truncation; smaller losses are renormalized away.
    """
    if not new_omega > 0:
        raise ValueError("new_omega must be positive")
    old = state.basis
    new = FockBasis(new_dim or old.dim, new_omega, old.mass)
    if new_omega == old.omega and new.dim == old.dim:
        return state
    m = _overlap_matrix(new.dim, new.omega, old.dim, old.omega, old.mass)
    comps = state.components @ m.T
    norm = float(np.linalg.norm(comps))
    if norm < 1 - 1e-6:
        raise TruncationError(f"frame change keeps only {norm**2:.9f} of the norm; increase the Fock dimension")
    return QuantumState(comps.ravel() / norm, new, state.spin_dim)


# ---------------------------------------------------------------------------
# Projection onto a position grid


def to_grid(state: QuantumState, grid: GridSpec) -> GridWavefunction:
    """Sample sum_n c_n phi_n(z) on the grid, one row per spin level.

    Refuses grids whose half-extent is smaller than |<z>| + 6 sigma_z, and
    grids too coarse to carry the momentum content (more than 1e-10 of the
    spectral weight in the top 10% of the k range).
    """
    mean, sigma = state.position_moments()
    need = abs(mean) + 6 * sigma
    if need > grid.extent / 2:
        raise TruncationError(f"grid half-extent {grid.extent / 2:.3e} m < |<z>| + 6 sigma = {need:.3e} m")
    x0 = state.basis.x0
    x = grid.z / x0
    rows = np.zeros((state.spin_dim, grid.n_points), dtype=np.complex128)
    for s, c in enumerate(state.components):
        if np.any(c):
            rows[s] = _kernels.hermite_sum(x, c) / math.sqrt(x0)
    psi = GridWavefunction(rows, grid, state.basis.mass)
    tail = psi.spectral_tail(0.1)
    if tail > 1e-10:
        raise TruncationError(f"grid spacing too coarse: {tail:.2e} of spectral weight near Nyquist")
    return psi
