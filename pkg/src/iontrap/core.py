"""Shared domain types, physical constants and unit conventions.

Lengths are given in micrometres and RF frequencies in MHz at the API
boundary; every physics formula works in SI.  Field solvers keep their
coordinates in micrometres, so potential gradients come out in V/µm.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import scipy.constants as sc

from .errors import GeometryError

UM = 1e-6  # metres per micrometre
MHZ = 1e6


@dataclass(frozen=True)
class PhysicalConstants:
    """CODATA values (as shipped by scipy.constants)."""

    e: float = sc.e
    epsilon_0: float = sc.epsilon_0
    k_B: float = sc.k
    hbar: float = sc.hbar
    amu: float = sc.physical_constants["atomic mass constant"][0]


CONSTANTS = PhysicalConstants()


@dataclass(frozen=True)
class TrapGeometry:
    """Idealised rectangular-cantilever trap; all lengths in µm.

    a: tip-to-tip separation, d: layer separation, w: layer thickness,
    b: centre electrode axial width, c: end-cap axial width, g: gap,
    h: cantilever length.
    """

    a: float
    d: float
    w: float
    b: float = 100.0
    c: float = 100.0
    g: float = 2.0
    h: float = 100.0

    def __post_init__(self):
        for name in ("a", "d", "w", "b", "c", "g", "h"):
            value = getattr(self, name)
            if not (value > 0 and math.isfinite(value)):
                raise GeometryError(f"{name} must be a positive finite length, got {value!r}")

    @property
    def alpha(self) -> float:
        return self.a / self.d

    @property
    def delta(self) -> float:
        return self.d / self.w

    @property
    def l_eff(self) -> float:
        """Distance from the trap centre to the nearest electrode tip (µm)."""
        return math.hypot(self.a / 2, self.d / 2)

    @property
    def d_eff(self) -> float:
        """Distance from the trap centre to the nearest end-cap corner (µm)."""
        return math.hypot(self.l_eff, self.b / 2 + self.g)

    def scaled(self, s: float) -> "TrapGeometry":
        return TrapGeometry(*(s * getattr(self, n) for n in ("a", "d", "w", "b", "c", "g", "h")))

    @classmethod
    def from_ratios(cls, alpha, delta, d=2.0, **kw) -> "TrapGeometry":
        return cls(a=alpha * d, d=d, w=d / delta, **kw)


def derive_ratios(geom: TrapGeometry) -> dict:
    return {"alpha": geom.alpha, "delta": geom.delta, "l_eff": geom.l_eff, "d_eff": geom.d_eff}


@dataclass(frozen=True)
class DriveConfig:
    """RF amplitude V0 (V), RF angular frequency OmegaT (rad/s), static end-cap voltage U0 (V).

    ``center_offsets`` are static voltages on the four centre electrodes in the
    order upper-left, upper-right, lower-left, lower-right.
    """

    V0: float
    OmegaT: float
    U0: float = 0.0
    center_offsets: tuple = (0.0, 0.0, 0.0, 0.0)

    def __post_init__(self):
        if not self.OmegaT > 0:
            raise ValueError(f"OmegaT must be positive, got {self.OmegaT!r}")
        if not self.V0 >= 0:
            raise ValueError(f"V0 must be non-negative, got {self.V0!r}")
        offsets = tuple(float(v) for v in self.center_offsets)
        if len(offsets) != 4:
            raise ValueError("center_offsets needs exactly four voltages")
        object.__setattr__(self, "center_offsets", offsets)

    @classmethod
    def from_mhz(cls, V0, f_rf_mhz, U0=0.0, center_offsets=(0.0, 0.0, 0.0, 0.0)):
        return cls(V0=V0, OmegaT=2 * math.pi * f_rf_mhz * MHZ, U0=U0, center_offsets=center_offsets)

    @property
    def f_rf_mhz(self) -> float:
        return self.OmegaT / (2 * math.pi * MHZ)


@dataclass(frozen=True)
class IonSpecies:
    """Ion mass in atomic mass units and charge in units of e."""

    mass: float
    charge: int = 1

    def __post_init__(self):
        if not self.mass > 0:
            raise ValueError(f"ion mass must be positive, got {self.mass!r}")
        if int(self.charge) != self.charge or self.charge < 1:
            raise ValueError(f"charge must be a positive integer, got {self.charge!r}")

    @property
    def mass_kg(self) -> float:
        return self.mass * CONSTANTS.amu

    @property
    def charge_C(self) -> float:
        return self.charge * CONSTANTS.e

    @classmethod
    def cd111(cls) -> "IonSpecies":
        return cls(mass=110.9041826, charge=1)


# breakdown fields (V/m) of common electrode/insulator materials
BREAKDOWN_FIELD = {"Si": 40e6, "GaAs": 40e6, "SiN": 300e6}


@dataclass(frozen=True)
class MaterialProps:
    """Electrode material and circuit parameters (SI).

    ``resistivity`` has no default: the heating estimate depends on it strongly
    and there is no representative value for doped semiconductors.
    """

    youngs_modulus: float  # Pa
    density: float  # kg/m^3
    resistivity: float | None = None  # ohm m
    loss_tangent: float = 2e-4
    series_resistance: float = 10.0  # ohm
    capacitance: float = 10e-12  # F
    temperature: float = 300.0  # K
    breakdown_field: float = BREAKDOWN_FIELD["GaAs"]  # V/m
    extras: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        for name in ("youngs_modulus", "density", "resistivity", "loss_tangent",
                     "series_resistance", "capacitance", "temperature", "breakdown_field"):
            value = getattr(self, name)
            if value is None and name == "resistivity":
                continue
            if not value > 0:
                raise ValueError(f"{name} must be positive, got {value!r}")

    @classmethod
    def gaas(cls, **kw) -> "MaterialProps":
        kw.setdefault("breakdown_field", BREAKDOWN_FIELD["GaAs"])
        return cls(youngs_modulus=85.5e9, density=5310.0, **kw)

    @classmethod
    def silicon(cls, **kw) -> "MaterialProps":
        kw.setdefault("breakdown_field", BREAKDOWN_FIELD["Si"])
        return cls(youngs_modulus=169e9, density=2330.0, **kw)


# reference ion and drive used for scaled trap depths (K um^2 / V^2)
REFERENCE_ION = IonSpecies.cd111()
REFERENCE_OMEGA = 2 * math.pi * 50 * MHZ
