"""Electromechanical and thermal side-estimates for the cantilevers.

Geometry in µm, everything else SI.  The cantilever is treated as a clamped
beam of length h, width b and thickness w loaded at its tip.
"""
from __future__ import annotations

import csv
import io
import math
import warnings
from dataclasses import asdict, dataclass

from .core import CONSTANTS, UM, DriveConfig, IonSpecies, MaterialProps, TrapGeometry

# per-electrode dissipation quoted in the literature for the reference drive (W)
LITERATURE_POWER_DISSIPATION = 40e-3


class ApproximationWarning(UserWarning):
    """An input lies outside the regime a closed form assumes."""


def cantilever_spring_constant(geom: TrapGeometry, mat: MaterialProps) -> float:
    """Tip spring constant ``E w^3 b / (4 h^3)`` (N/m)."""
    w, b, h = geom.w * UM, geom.b * UM, geom.h * UM
    return mat.youngs_modulus * w**3 * b / (4 * h**3)


def capacitor_force(geom: TrapGeometry, V0: float) -> float:
    """Parallel-plate attraction between the layers, ``(eps0/2) h b V0^2 / d^2`` (N)."""
    h, b, d = geom.h * UM, geom.b * UM, geom.d * UM
    return CONSTANTS.epsilon_0 / 2 * h * b * V0**2 / d**2


def cantilever_resonance(geom: TrapGeometry, mat: MaterialProps) -> float:
    """Fundamental flexural resonance ``0.162 sqrt(E/rho) w / h^2`` (Hz)."""
    w, h = geom.w * UM, geom.h * UM
    return 0.162 * math.sqrt(mat.youngs_modulus / mat.density) * w / h**2


def lorentzian_reduction(geom: TrapGeometry, mat: MaterialProps, drive: DriveConfig) -> float:
    """``omega_vib^2 / Omega_T^2``; values >= 1 mean the drive is not above resonance."""
    ratio = (2 * math.pi * cantilever_resonance(geom, mat)) ** 2 / drive.OmegaT**2
    if ratio >= 1:
        warnings.warn("RF drive at or below the cantilever resonance", ApproximationWarning,
                      stacklevel=2)
    return ratio


def tip_deflection(geom: TrapGeometry, mat: MaterialProps, V0: float, drive: DriveConfig | None = None):
    """Static upper bound on the tip deflection ``F/k`` (m); with ``drive`` the RF
    amplitude is reduced by the Lorentzian factor."""
    x = capacitor_force(geom, V0) / cantilever_spring_constant(geom, mat)
    if drive is not None:
        x *= lorentzian_reduction(geom, mat, drive)
    return x


def rf_power_dissipation(mat: MaterialProps, drive: DriveConfig) -> float:
    """Lumped-circuit RF loss per electrode ``(V0^2 C Omega/2)(R C Omega + tan delta)`` (W)."""
    C, R, tand = mat.capacitance, mat.series_resistance, mat.loss_tangent
    rc = R * C * drive.OmegaT
    if rc >= 0.1 or tand >= 0.1:
        warnings.warn("R C Omega or tan(delta) is not small; the loss formula is approximate",
                      ApproximationWarning, stacklevel=2)
    return drive.V0**2 * C * drive.OmegaT / 2 * (rc + tand)


def _resistivity(mat, resistivity):
    rho = resistivity if resistivity is not None else mat.resistivity
    if rho is None:
        raise ValueError("the heating rate needs an electrode resistivity (ohm m)")
    if not rho > 0:
        raise ValueError(f"resistivity must be positive, got {rho!r}")
    return rho


def thermal_heating_rate(ion: IonSpecies, mat: MaterialProps, z_dist: float, omega_s: float,
                         geom: TrapGeometry | None = None, w: float | None = None,
                         resistivity: float | None = None) -> float:
    """Johnson-noise heating from a thin resistive plane at ``z_dist`` µm (quanta/s).

    ``ndot = e^2 k_B T (rho_e / w) / (m z^2 hbar omega_s)``; the layer thickness
    ``w`` (µm) comes from ``geom`` unless given.
    """
    rho = _resistivity(mat, resistivity)
    w_um = w if w is not None else (geom.w if geom is not None else None)
    if w_um is None:
        raise ValueError("pass the conductor thickness via geom or w")
    if w_um >= z_dist:
        warnings.warn("thin-conductor limit w << z does not hold", ApproximationWarning, stacklevel=2)
    z, wm = z_dist * UM, w_um * UM
    power = ion.charge_C**2 * CONSTANTS.k_B * mat.temperature * (rho / wm) / (ion.mass_kg * z**2)
    return power / (CONSTANTS.hbar * omega_s)


def resistivity_for_heating_rate(target, ion, mat, z_dist, omega_s, geom=None, w=None) -> float:
    """Resistivity (ohm m) that gives ``target`` quanta/s (the rate is linear in it)."""
    unit = thermal_heating_rate(ion, mat, z_dist, omega_s, geom=geom, w=w, resistivity=1.0)
    return target / unit


def breakdown_margin(geom: TrapGeometry, mat: MaterialProps, V0: float) -> float:
    """``V0 / (d E_bd)``; above 1 the layers are expected to break down."""
    return V0 / (geom.d * UM * mat.breakdown_field)


@dataclass(frozen=True)
class EngineeringReport:
    spring_constant: float  # N/m
    capacitor_force: float  # N
    max_deflection: float  # m, static
    rf_deflection: float  # m, Lorentzian-reduced
    resonant_freq: float  # Hz
    lorentzian_reduction: float
    power_dissipation: float  # W
    power_dissipation_literature: float  # W
    heating_rate: float | None  # quanta/s
    resistivity: float | None  # ohm m
    breakdown_margin: float

    def as_text(self):
        rows = asdict(self)
        width = max(map(len, rows))
        return "\n".join(f"{k.ljust(width)} = {_fmt(v)}" for k, v in rows.items()) + "\n"

    def as_csv(self):
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["quantity", "value"])
        for k, v in asdict(self).items():
            writer.writerow([k, _fmt(v)])
        return buf.getvalue()


def _fmt(v):
    return "" if v is None else f"{v:.9g}"


def engineering_report(geom, mat, drive, ion=None, z_dist=None, omega_s=None, resistivity=None):
    """All estimates for one design; the heating rate is included when a resistivity,
    an ion distance and a secular frequency are available."""
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ApproximationWarning)
        lor = lorentzian_reduction(geom, mat, drive)
    static = tip_deflection(geom, mat, drive.V0)
    rho = resistivity if resistivity is not None else mat.resistivity
    rate = None
    if rho is not None and ion is not None and z_dist is not None and omega_s is not None:
        rate = thermal_heating_rate(ion, mat, z_dist, omega_s, geom=geom, resistivity=rho)
    return EngineeringReport(
        spring_constant=cantilever_spring_constant(geom, mat),
        capacitor_force=capacitor_force(geom, drive.V0),
        max_deflection=static,
        rf_deflection=static * lor,
        resonant_freq=cantilever_resonance(geom, mat),
        lorentzian_reduction=lor,
        power_dissipation=rf_power_dissipation(mat, drive),
        power_dissipation_literature=LITERATURE_POWER_DISSIPATION,
        heating_rate=rate,
        resistivity=rho,
        breakdown_margin=breakdown_margin(geom, mat, drive.V0),
    )
