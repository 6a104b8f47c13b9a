"""Decoherence rates and the coherence budget of a scenario.

The blackbody emission rate needs Im[(eps-1)/(eps+2)] for diamond at THz
frequencies and an interference width z, neither of which is fixed by the
model.  ``CALIBRATED_IM_EPS`` is the value that gives 3 Hz for the fig5
scenario at room temperature with z equal to the cat separation D_m.  It is a
calibration constant, not a material property (a realistic dielectric
value would be far below 1).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

from . import units
from .units import CONSTANTS, ExperimentParams, _positive

BLACKBODY_TARGET_HZ = 3.0
CALIBRATED_IM_EPS = 2.7894327834684467

GRAVITY_NOTES = {
    "fock_superposition_hz": 1e-62,
    "spatial_superposition_30nm_hz": 1e-7,
    "note": "quoted magnitudes for a 30 nm particle in a 0.5 MHz trap; not computed",
}


def mean_velocity(T: float, m_a: float) -> float:
    """Mean Maxwell-Boltzmann speed sqrt(8 k_B T / (pi m_a))."""
    _positive("T", T, allow_zero=True)
    _positive("m_a", m_a)
    return math.sqrt(8 * CONSTANTS.k_B * T / (math.pi * m_a))


def gas_collision_rate(P: float, d: float, T: float, m_a: float) -> float:
    """Localization rate from background-gas scattering, Hz.

    ``4 pi sqrt(2 pi) P d^2 / (sqrt(3) vbar m_a)`` with P in Pa.
    """
    _positive("P", P, allow_zero=True)
    _positive("d", d, allow_zero=True)
    _positive("T", T)
    v = mean_velocity(T, m_a)
    return 4 * math.pi * math.sqrt(2 * math.pi) * P * d**2 / (math.sqrt(3) * v * m_a)


def blackbody_rate(d: float, T_i: float, Im_eps: float, z: float) -> float:
    """Decoherence from thermal photon emission, Hz; scales as d^3 T_i^6 z^2."""
    for name, v in (("d", d), ("T_i", T_i), ("Im_eps", Im_eps), ("z", z)):
        _positive(name, v, allow_zero=True)
    c = CONSTANTS
    thermal_k = c.k_B * T_i / (c.hbar * c.c)
    return (2 * math.pi**5 / 189) * c.c * d**3 * thermal_k**6 * Im_eps * z**2


def calibrate_im_eps(params: ExperimentParams, target_hz: float = BLACKBODY_TARGET_HZ) -> float:
    """Im_eps for which ``blackbody_rate`` hits ``target_hz`` with z = D_m."""
    z = params.z_width if params.z_width is not None else units.derive(params).D_m
    unit_rate = blackbody_rate(params.d, params.T_i, 1.0, z)
    if unit_rate == 0:
        raise units.DomainError("cannot calibrate with zero interference width or temperature")
    return target_hz / unit_rate


def threshold_gradient(m: float, omega: float, min_lambda: float) -> float:
    """Gradient at which the coupling reaches ``min_lambda`` (rad/s)."""
    per_tesla = units.coupling_lambda(1.0, m, omega)
    return min_lambda / per_tesla


@dataclass(frozen=True)
class Comparison:
    name: str
    value: float
    limit: float
    ok: bool


@dataclass(frozen=True)
class DecoherenceReport:
    gamma_gas: float
    gamma_bb: float
    mean_velocity: float
    budget: list = field(default_factory=list)
    notes: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {
            "gamma_gas_hz": self.gamma_gas,
            "gamma_bb_hz": self.gamma_bb,
            "mean_velocity_m_s": self.mean_velocity,
            "budget": [
                {"name": c.name, "value": c.value, "limit": c.limit, "status": "pass" if c.ok else "warn"}
                for c in self.budget
            ],
            "notes": self.notes,
        }


def feasibility_report(
    params: ExperimentParams,
    *,
    threshold_G: float = 2e3,
    fock_params: ExperimentParams | None = None,
    margin: float = 0.1,
) -> DecoherenceReport:
    """Compare every protocol time scale with T2 and the decoherence rates.

    A comparison passes when the time scale is below ``margin`` times the
    limit (rate x time below ``margin`` for the decoherence entries).
    ``fock_params`` supplies the trap used for Fock-state preparation and
    QND readout; it defaults to ``params``.
    """
    fock_params = fock_params or params
    dp = units.derive(params)
    df = units.derive(fock_params)
    im_eps = params.Im_eps if params.Im_eps is not None else CALIBRATED_IM_EPS
    z = params.z_width if params.z_width is not None else dp.D_m
    g_gas = gas_collision_rate(params.P, params.d, params.T_b, params.m_a)
    g_bb = blackbody_rate(params.d, params.T_i, im_eps, z)
    v = mean_velocity(params.T_b, params.m_a)

    prep = math.pi / params.omega_m2
    flight = params.flight_time
    budget = []

    def add(name, value, limit):
        budget.append(Comparison(name, value, limit, value < margin * limit))

    if df.lam > 0:
        add("fock_prep_time_1_over_lambda_s", 1 / df.lam, fock_params.T2)
    if df.chi and math.isfinite(df.chi):
        add("qnd_detection_time_1_over_2chi_s", 1 / (2 * abs(df.chi)), fock_params.T2)
    add("cat_prep_time_s", prep, params.T2)
    add("gas_decoherence_over_flight", g_gas * flight, 1.0)
    add("blackbody_decoherence_over_flight", g_bb * flight, 1.0)

    lam_thr = units.coupling_lambda(threshold_G, fock_params.mass, fock_params.omega_m2)
    notes = {
        "threshold_gradient_T_per_m": threshold_G,
        "lambda_at_threshold_hz": units.to_hz(lam_thr),
        "lambda_T2_at_threshold": lam_thr * fock_params.T2,
        "threshold_criterion": "unresolved; reported for reference only",
        "im_eps": im_eps,
        "im_eps_is_calibration": params.Im_eps is None,
        "interference_width_m": z,
        "gravity": GRAVITY_NOTES,
    }
    return DecoherenceReport(g_gas, g_bb, v, budget, notes)
