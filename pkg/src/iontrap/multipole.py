"""Cylindrical-harmonic decomposition of the transverse RF potential.

``V(r, t) = V0 * sum_m [C_m (r/r0)^m cos(m t) + S_m (r/r0)^m sin(m t)]`` where
``t`` is measured from the diagonal axis pointing at the upper-left (+V0/2)
electrode tip, so a positive ``C_2`` means a confining quadrupole.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import CONSTANTS, REFERENCE_ION, REFERENCE_OMEGA, UM, TrapGeometry
from .errors import MaxOnBoundary, RadiusTouchesElectrode
from .grid import ELECTRODE, ScalarField

# angle of the x' axis in the grid frame
FRAME_ANGLE = 3 * math.pi / 4


@dataclass(frozen=True)
class MultipoleExpansion:
    r0: float
    C: np.ndarray  # C[m-1] for m = 1..M
    S: np.ndarray
    V0: float = 1.0

    @property
    def M(self):
        return len(self.C)

    def c(self, m):
        return float(self.C[m - 1])

    def s(self, n):
        return float(self.S[n - 1])

    def evaluate(self, x, y):
        """Reconstructed potential (V) at grid-frame coordinates (µm)."""
        x, y = np.asarray(x, float), np.asarray(y, float)
        r = np.hypot(x, y) / self.r0
        t = np.arctan2(y, x) - FRAME_ANGLE
        out = np.zeros(np.broadcast(x, y).shape)
        for m in range(1, self.M + 1):
            out += r**m * (self.C[m - 1] * np.cos(m * t) + self.S[m - 1] * np.sin(m * t))
        return self.V0 * out


def _disc_nodes(r0, n_theta, n_r):
    """Gauss-Legendre in r (weight r dr) times the periodic trapezoid rule in t."""
    xg, wg = np.polynomial.legendre.leggauss(n_r)
    r = 0.5 * r0 * (xg + 1)
    wr = 0.5 * r0 * wg * r
    t = 2 * np.pi * np.arange(n_theta) / n_theta
    wt = np.full(n_theta, 2 * np.pi / n_theta)
    return r, wr, t, wt


def _nearest_electrode_distance(field: ScalarField):
    x, y = np.meshgrid(*field.axes[:2], indexing="ij")
    sel = field.mask == ELECTRODE
    if not sel.any():
        return math.inf
    return float(np.min(np.hypot(x[sel], y[sel])))


def expand(field, r0, M=12, V0=None, n_theta=256, n_r=128):
    """Project a 2D potential onto the harmonics over the disc of radius r0 (µm).

    ``field`` is a solved :class:`ScalarField` or any callable ``V(x, y)``;
    ``V0`` defaults to twice the largest electrode |V| (the balanced drive).
    """
    if isinstance(field, ScalarField):
        if r0 >= _nearest_electrode_distance(field):
            raise RadiusTouchesElectrode(f"r0 = {r0} µm reaches an electrode node")
        func = field.sample
        if V0 is None:
            V0 = 2 * field.scale
    else:
        func = field
        if V0 is None:
            V0 = 1.0
    r, wr, t, wt = _disc_nodes(r0, n_theta, n_r)
    R, T = np.meshgrid(r, t, indexing="ij")
    X = R * np.cos(T + FRAME_ANGLE)
    Y = R * np.sin(T + FRAME_ANGLE)
    vals = np.asarray(func(X, Y), dtype=float)
    W = np.outer(wr, wt)
    C = np.empty(M)
    S = np.empty(M)
    for m in range(1, M + 1):
        radial = (R / r0) ** m
        norm = 2 * (m + 1) / (math.pi * r0**2 * V0)
        C[m - 1] = norm * np.sum(W * vals * radial * np.cos(m * T))
        S[m - 1] = norm * np.sum(W * vals * radial * np.sin(m * T))
    return MultipoleExpansion(r0=float(r0), C=C, S=S, V0=float(V0))


def eta(exp: MultipoleExpansion, geom: TrapGeometry) -> float:
    """Quadrupole strength relative to hyperbolic electrodes at radius l_eff."""
    return 2 * exp.c(2) * geom.l_eff**2 / exp.r0**2


def anharmonicity_ratios(exp: MultipoleExpansion, orders=None):
    """``{"S4": S4/C2, "C6": C6/C2, ...}`` for the symmetry-allowed terms."""
    c2 = exp.c(2)
    out = {}
    for m in range(3, exp.M + 1):
        if m % 4 == 2:
            out[f"C{m}"] = exp.c(m) / c2
        if m % 4 == 0:
            out[f"S{m}"] = exp.s(m) / c2
    if orders is not None:
        out = {k: out[k] for k in orders}
    return out


def anharmonicity_report(field, geom, r0_choice="fixed", drive=None, ion=None, M=12):
    """Ratios to C2 at ``r0 = a/8`` (``"fixed"``), at ``r_max`` (``"rmax"``) or at a number (µm)."""
    if r0_choice == "fixed":
        r0 = geom.a / 8
    elif r0_choice == "rmax":
        r0 = trap_depth_and_rmax(field, geom)["r_max"]
        r0 = min(r0, 0.999 * _nearest_electrode_distance(field))
    else:
        r0 = float(r0_choice)
    exp = expand(field, r0, M=M)
    return {"r0": r0, **anharmonicity_ratios(exp)}


def coefficient_curve(field, radii, M=12):
    """Ratios of every allowed term to C2 as a function of r0 (list of dicts)."""
    return [{"r0": float(r0), **anharmonicity_ratios(expand(field, r0, M=M))} for r0 in radii]


def grad_sq_along_y(field: ScalarField):
    """``(y, |grad V|^2)`` on the nodes of the +y half-axis (µm, V^2/µm^2)."""
    ix = field.axis_index(0, 0.0)
    iy0 = field.axis_index(1, 0.0)
    gsq = field.grad_sq()[ix, iy0:]
    return np.asarray(field.axes[1][iy0:]), np.asarray(gsq)


def trap_depth_and_rmax(field: ScalarField, geom: TrapGeometry, drive=None, ion=None, V0=None):
    """Pseudopotential barrier along the weak (y) axis.

    Returns depth in kelvin for ``drive``/``ion`` (when given), the scaled depth
    ``depth * a^2 / V0^2`` in K µm^2/V^2 for 111Cd+ at 50 MHz, the peak position
    and ``r_max = min(peak, a/2)``.
    """
    from .trapchar import pseudopotential

    if V0 is None:
        V0 = drive.V0 if drive is not None else 2 * field.scale
    y, gsq = grad_sq_along_y(field)
    ok = np.isfinite(gsq)
    y, gsq = y[ok], gsq[ok]
    i = int(np.argmax(gsq))
    if i == 0 or i >= len(y) - 1:
        raise MaxOnBoundary("pseudopotential maximum lies on the end of the scan; enlarge the box")
    # parabola through the three nodes around the maximum
    y3, g3 = y[i - 1:i + 2], gsq[i - 1:i + 2]
    coef = np.polyfit(y3, g3, 2)
    peak = -coef[1] / (2 * coef[0]) if coef[0] < 0 else y[i]
    peak = float(np.clip(peak, y3[0], y3[-1]))
    gmax = float(np.polyval(coef, peak)) if coef[0] < 0 else float(g3[1])
    gmax_si = gmax / UM**2  # V^2/m^2
    ref = pseudopotential(gmax_si * (1.0 / V0) ** 2, REFERENCE_OMEGA, REFERENCE_ION)
    out = {
        "peak": peak,
        "r_max": min(peak, geom.a / 2),
        "scaled_depth": ref / CONSTANTS.k_B * geom.a**2,
    }
    if drive is not None and ion is not None:
        out["depth"] = pseudopotential(gmax_si * (drive.V0 / V0) ** 2, drive.OmegaT, ion) / CONSTANTS.k_B
    return out
