"""Physical constants, unit conversions and closed-form derived parameters.

All frequencies are angular (rad/s).  Helpers ``khz`` / ``mhz`` convert an
ordinary frequency to rad/s, i.e. ``khz(20) == 2*pi*20e3``.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, fields, replace

import scipy.constants as const

from .errors import DomainError, SingularityError

TORR = 133.322  # Pa


@dataclass(frozen=True)
class PhysicalConstants:
    hbar: float = const.hbar
    k_B: float = const.k
    mu_B: float = const.physical_constants["Bohr magneton"][0]
    g_s: float = 2.0
    c: float = const.c

    def __post_init__(self):
        for f in fields(self):
            if not getattr(self, f.name) > 0:
                raise DomainError(f"constant {f.name} must be positive")


CONSTANTS = PhysicalConstants()
HBAR = CONSTANTS.hbar


def khz(f: float) -> float:
    return 2.0 * math.pi * f * 1e3


def mhz(f: float) -> float:
    return 2.0 * math.pi * f * 1e6


def to_hz(omega: float) -> float:
    """Angular frequency (rad/s) -> ordinary frequency (Hz)."""
    return omega / (2.0 * math.pi)


def torr_to_pa(p: float) -> float:
    return p * TORR


def _positive(name, value, allow_zero=False):
    if not math.isfinite(value) or value < 0 or (value == 0 and not allow_zero):
        kind = "non-negative" if allow_zero else "positive"
        raise DomainError(f"{name} must be {kind}, got {value!r}")


# ---------------------------------------------------------------------------
# Closed-form parameters


def mass_from_diameter(d: float, rho: float) -> float:
    """Mass of a solid sphere of diameter ``d`` and density ``rho``."""
    _positive("d", d, allow_zero=True)
    _positive("rho", rho)
    return rho * math.pi * d**3 / 6.0


def zero_point_width(m: float, omega: float, *, hbar: float = HBAR) -> float:
    """Ground-state position spread sqrt(hbar / (2 m omega))."""
    _positive("m", m)
    _positive("omega", omega)
    return math.sqrt(hbar / (2.0 * m * omega))


def coupling_lambda(G: float, m: float, omega: float, *, constants: PhysicalConstants = CONSTANTS) -> float:
    """Spin-phonon coupling g_s mu_B G a0 / hbar in rad/s."""
    _positive("G", G, allow_zero=True)
    a0 = zero_point_width(m, omega, hbar=constants.hbar)
    return constants.g_s * constants.mu_B * G * a0 / constants.hbar


def max_separation(G: float, m: float, omega2: float, *, constants: PhysicalConstants = CONSTANTS) -> float:
    """Largest distance between the two spin-conditioned wave packets.

    Reached half a trap period after the spin is put in (|+1> + |-1>)/sqrt(2).
    Equal to ``8 lambda a2 / omega2``.
    """
    _positive("G", G, allow_zero=True)
    _positive("m", m)
    _positive("omega2", omega2)
    return 4.0 * constants.g_s * constants.mu_B * G / (m * omega2**2)


def qnd_chi(Omega: float, lam: float, omega_m: float) -> float:
    """Dispersive spin-phonon shift 4 Omega lambda^2 / (4 Omega^2 - omega_m^2).

    Only meaningful when ||Omega| - omega_m/2| >> lambda; a warning is emitted
    when the detuning is below ``3 lambda``.
    """
    den = 4.0 * Omega**2 - omega_m**2
    if den == 0.0:
        raise SingularityError("qnd_chi is singular at 2|Omega| = omega_m")
    if lam != 0 and abs(abs(Omega) - omega_m / 2) < 3 * abs(lam):
        warnings.warn("dispersive regime not satisfied: ||Omega| - omega_m/2| < 3 lambda", RuntimeWarning, stacklevel=2)
    return 4.0 * Omega * lam**2 / den


def effective_rabi(Omega_NV: float, Delta: float) -> float:
    """Effective two-photon Rabi frequency |Omega_NV|^2 / (4 Delta)."""
    if Delta == 0:
        raise SingularityError("detuning Delta must be nonzero")
    if abs(Delta) < 10 * abs(Omega_NV):
        warnings.warn("adiabatic elimination needs |Delta| >> |Omega_NV|", RuntimeWarning, stacklevel=2)
    return abs(Omega_NV) ** 2 / (4.0 * Delta)


def spin_splitting(G: float, D_m: float, *, constants: PhysicalConstants = CONSTANTS) -> float:
    """Zeeman energy difference (rad/s) between branches displaced by D_m."""
    _positive("G", G, allow_zero=True)
    _positive("D_m", D_m, allow_zero=True)
    return constants.g_s * constants.mu_B * G * D_m / constants.hbar


def fringe_period(t: float, m: float, D_m: float, *, hbar: float = HBAR) -> float:
    """Far-field fringe spacing 2 pi hbar t / (m D_m) after free flight ``t``."""
    _positive("t", t)
    _positive("m", m)
    _positive("D_m", D_m)
    return 2.0 * math.pi * hbar * t / (m * D_m)


def fringe_period_exact(t_dimless: float, b_dimless: float) -> float:
    """Finite-time fringe period in oscillator units, 2 pi (1 + 4 t^2) / (4 b t)."""
    _positive("t", t_dimless)
    _positive("b", b_dimless)
    return 2.0 * math.pi * (1.0 + 4.0 * t_dimless**2) / (4.0 * b_dimless * t_dimless)


# ---------------------------------------------------------------------------
# Scenario parameters


@dataclass(frozen=True)
class ExperimentParams:
    """One physical scenario.  SI units, angular frequencies."""

    d: float = 30e-9
    rho: float = 3500.0
    omega_m0: float = field(default_factory=lambda: khz(20))
    omega_m1: float = field(default_factory=lambda: khz(20))
    omega_m2: float = field(default_factory=lambda: khz(20))
    G: float = 3e4
    P: float = 1e-11 * TORR
    T_b: float = 4.5
    T_i: float = 300.0
    m_a: float = 4.83e-26
    flight_time: float = 10e-3
    # None -> use the cat separation D_m as the interference width
    z_width: float | None = None
    Im_eps: float | None = None
    # QND drive offset ||Omega| - omega_m/2| in units of lambda
    qnd_detuning: float = 5.0
    T2: float = 1.8e-3

    def __post_init__(self):
        for name in ("d", "rho", "omega_m0", "omega_m1", "omega_m2", "m_a", "flight_time", "T2"):
            _positive(name, getattr(self, name))
        for name in ("G", "P", "T_b", "T_i", "qnd_detuning"):
            _positive(name, getattr(self, name), allow_zero=True)
        if self.z_width is not None:
            _positive("z_width", self.z_width, allow_zero=True)
        if self.Im_eps is not None:
            _positive("Im_eps", self.Im_eps, allow_zero=True)

    def check_cat_ordering(self):
        if not (self.omega_m2 <= self.omega_m1 <= self.omega_m0):
            raise DomainError("cat protocol needs omega_m2 <= omega_m1 <= omega_m0")

    def with_(self, **kw) -> "ExperimentParams":
        return replace(self, **kw)

    @property
    def mass(self) -> float:
        return mass_from_diameter(self.d, self.rho)


@dataclass(frozen=True)
class DerivedParams:
    mass: float
    a0: float
    a2: float
    lam: float
    Omega: float
    chi: float
    D_m: float
    splitting: float
    fringe_period: float
    beta: float
    b: float


def derive(p: ExperimentParams, constants: PhysicalConstants = CONSTANTS) -> DerivedParams:
    """Every derived symbol for a scenario.

    ``a0`` refers to the initial trap ``omega_m0``; the coupling ``lam`` and
    everything downstream of it refer to the working trap ``omega_m2``.
    """
    m = p.mass
    a0 = zero_point_width(m, p.omega_m0, hbar=constants.hbar)
    a2 = zero_point_width(m, p.omega_m2, hbar=constants.hbar)
    lam = coupling_lambda(p.G, m, p.omega_m2, constants=constants)
    Omega = p.omega_m2 / 2 + p.qnd_detuning * lam
    if p.qnd_detuning == 0:
        chi = math.nan
    else:
        chi = qnd_chi(Omega, lam, p.omega_m2) if lam > 0 else 0.0
    D_m = max_separation(p.G, m, p.omega_m2, constants=constants)
    split = spin_splitting(p.G, D_m, constants=constants)
    dz = fringe_period(p.flight_time, m, D_m, hbar=constants.hbar) if D_m > 0 else math.inf
    return DerivedParams(
        mass=m,
        a0=a0,
        a2=a2,
        lam=lam,
        Omega=Omega,
        chi=chi,
        D_m=D_m,
        splitting=split,
        fringe_period=dz,
        beta=1.0 / (math.sqrt(2.0) * a2),
        b=D_m / 2,
    )


# Named scenarios used throughout the package and tests.

def scenario_fock() -> ExperimentParams:
    """0.5 MHz trap, G = 1e5 T/m: the Fock-state and QND estimates."""
    w = mhz(0.5)
    return ExperimentParams(omega_m0=w, omega_m1=w, omega_m2=w, G=1e5)


def scenario_fig3() -> ExperimentParams:
    """100 kHz -> 20 kHz sudden trap change at G = 4e4 T/m."""
    return ExperimentParams(omega_m0=khz(100), omega_m1=khz(100), omega_m2=khz(20), G=4e4)


def scenario_fig5() -> ExperimentParams:
    """20 kHz trap, G = 3e4 T/m, 10 ms flight: the interference estimates."""
    return ExperimentParams()
