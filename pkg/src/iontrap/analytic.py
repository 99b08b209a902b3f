"""Conformal-map model of the cross-section with infinitely thin electrodes.

Each side's pair of semi-infinite electrodes (tips at ``±a/2 ± i d/2``) is the
image of a parallel-plate capacitor under ``ζ = z + e^z`` with
``ζ± = ±2πw/d + aπ/d − 1``.  Inverting needs the complex Lambert W function
on the branch ``k = ceil((Im ζ − π)/2π)``.  The potential of the two sides is
superposed, which is only accurate when ``α = a/d`` is large; closed forms for
η, r_max and the depth follow from the large-argument expansion of W.
"""
from __future__ import annotations

import csv
import math
import warnings

import numpy as np
from scipy.special import lambertw as _scipy_lambertw

from .core import CONSTANTS, REFERENCE_ION, REFERENCE_OMEGA, UM, TrapGeometry
from .errors import AsymptoticValidityWarning, GeometryError, InvalidBranch, NoConvergence, OnElectrode

# scaled asymptotic depth quoted in the literature for 111Cd+ at 50 MHz (K µm^2/V^2);
# our own evaluation with CODATA constants is ``analytic_depth(...)["scaled_asymptotic"]``
LITERATURE_SCALED_DEPTH = 2694.0

# Re ζ above which W_k(e^ζ) is evaluated in log space
_LOG_SPACE_RE = 20.0
_BRANCH_POINT = -math.exp(-1.0)


def asymptotic_valid(alpha) -> bool:
    return bool(alpha >= 10)


def _warn_validity(alpha):
    if not asymptotic_valid(alpha):
        warnings.warn(f"closed form used at alpha = {alpha:.3g} < 10, outside its asymptotic regime",
                      AsymptoticValidityWarning, stacklevel=3)


def lambert_w(k, xi):
    """Branch ``k`` of the Lambert W function (``y e^y = xi``), scalar or array.

    Uses scipy's Halley iteration, with a series at the ``-1/e`` branch point
    where that iteration returns NaN, and verifies the residual.
    """
    if int(k) != k:
        raise InvalidBranch(f"branch index must be an integer, got {k!r}")
    k = int(k)
    xi_arr = np.asarray(xi, dtype=complex)
    if k != 0 and np.any(xi_arr == 0):
        raise InvalidBranch(f"W_{k}(0) is not finite; only the principal branch is defined at 0")
    y = np.asarray(_scipy_lambertw(xi_arr, k), dtype=complex)
    # branch point: W_0 and W_-1 (approached from Im >= 0) meet at -1
    p = np.sqrt(2 * (math.e * xi_arr + 1))
    near = np.abs(p) < 1e-4
    if k in (0, -1) and np.any(near):
        sign = 1.0 if k == 0 else -1.0
        series = -1 + sign * p - p * p / 3 + sign * 11 / 72 * p**3
        y = np.where(near & ~np.isfinite(y), series, y)
    resid = np.abs(y * np.exp(y) - xi_arr)
    ok = np.isfinite(y) & (resid <= 1e-12 * np.maximum(1.0, np.abs(xi_arr)))
    if not np.all(ok):
        bad = xi_arr[~ok].ravel()[0]
        raise NoConvergence(f"Lambert W_{k} failed to converge at xi = {bad}")
    return complex(y) if y.ndim == 0 else y


def select_branch(zeta):
    """``k = ceil((Im ζ − π)/2π)`` (integer or integer array)."""
    k = np.ceil((np.imag(zeta) - math.pi) / (2 * math.pi)).astype(int)
    return int(k) if np.ndim(k) == 0 else k


def w_of_exp(zeta):
    """``W_k(e^ζ)`` on the branch picked by :func:`select_branch`.

    For ``Re ζ > 20`` the exponential would lose precision or overflow, so the
    equivalent equation ``y + log y = ζ`` is solved by Newton's method instead.
    """
    zeta = np.asarray(zeta, dtype=complex)
    out = np.empty(zeta.shape, dtype=complex)
    big = zeta.real > _LOG_SPACE_RE
    if np.any(big):
        zb = zeta[big]
        y = zb - np.log(zb)
        for _ in range(100):
            step = (y + np.log(y) - zb) / (1 + 1 / y)
            y = y - step
            if np.all(np.abs(step) <= 1e-15 * (1 + np.abs(y))):
                break
        else:
            raise NoConvergence("log-space Lambert W iteration did not converge")
        out[big] = y
    small = ~big
    if np.any(small):
        zs = zeta[small]
        ks = select_branch(zs)
        vals = np.empty(zs.shape, dtype=complex)
        for k in np.unique(ks):
            sel = ks == k
            vals[sel] = lambert_w(int(k), np.exp(zs[sel]))
        out[small] = vals
    return complex(out) if out.ndim == 0 else out


def inverse_map(zeta):
    """Capacitor-plane point ``z`` with ``z + e^z = ζ``."""
    return np.asarray(zeta, dtype=complex) - w_of_exp(zeta)


def _check_alpha(geom):
    if geom.alpha < 4:
        raise GeometryError(f"conformal-map model needs alpha >= 4, got {geom.alpha:.3g}")
    _warn_validity(geom.alpha)


def analytic_potential(w, geom: TrapGeometry, V0=1.0):
    """Potential (V) at ``w = u + iv`` (µm, complex; scalar or array).

    The upper-left and lower-right electrodes sit at ``+V0/2``.
    """
    _check_alpha(geom)
    w = np.asarray(w, dtype=complex)
    tol = 1e-12 * geom.a
    on = (np.abs(np.abs(w.imag) - geom.d / 2) <= tol) & (np.abs(w.real) >= geom.a / 2 - tol)
    if np.any(on):
        raise OnElectrode(f"point {w[on].ravel()[0]} lies on an electrode")
    base = geom.a * math.pi / geom.d - 1
    scale = 2 * math.pi / geom.d
    z_plus = inverse_map(scale * w + base)
    z_minus = inverse_map(-scale * w + base)
    phi = V0 / (2 * math.pi) * (z_plus.imag + z_minus.imag)
    return float(phi) if phi.ndim == 0 else phi


def map_field(geom: TrapGeometry, V0=1.0):
    """``V(x, y)`` callable of the conformal-map potential, for harmonic expansion."""
    return lambda x, y: analytic_potential(np.asarray(x) + 1j * np.asarray(y), geom, V0)


def analytic_eta(alpha) -> float:
    """Closed-form quadrupole efficiency ``π(α²+1)/(απ−1)²``; tends to 1/π."""
    if not alpha > 1 / math.pi:
        raise ValueError(f"alpha must exceed 1/pi, got {alpha!r}")
    _warn_validity(alpha)
    return math.pi * (alpha**2 + 1) / (alpha * math.pi - 1) ** 2


def analytic_rmax(geom: TrapGeometry) -> float:
    """Position (µm) of the pseudopotential barrier on the weak axis: ``(a/2)(1 − 1/πα)``."""
    if not geom.alpha > 1 / math.pi:
        raise ValueError("alpha must exceed 1/pi")
    _warn_validity(geom.alpha)
    return geom.a / 2 * (1 - 1 / (math.pi * geom.alpha))


def _depth_factor(alpha):
    return 1.0 / (math.pi**2 * (1 - 1 / (alpha * math.pi)) ** 2)


def analytic_depth(geom: TrapGeometry, drive=None, ion=None) -> dict:
    """Closed-form barrier height.

    ``scaled`` is ``depth * a^2 / V0^2`` (K µm^2/V^2) for 111Cd+ at 50 MHz,
    ``scaled_asymptotic`` its α → ∞ limit; ``depth`` (K) needs ``drive`` and ``ion``.
    """
    if not geom.alpha > 1 / math.pi:
        raise ValueError("alpha must exceed 1/pi")
    _warn_validity(geom.alpha)
    q, m = REFERENCE_ION.charge_C, REFERENCE_ION.mass_kg
    ref = q**2 / (4 * m * REFERENCE_OMEGA**2) / CONSTANTS.k_B / UM**2
    out = {
        "scaled": ref * _depth_factor(geom.alpha),
        "scaled_asymptotic": ref / math.pi**2,
        "scaled_literature": LITERATURE_SCALED_DEPTH,
        "asymptotic_valid": asymptotic_valid(geom.alpha),
    }
    if drive is not None and ion is not None:
        a_m = geom.a * UM
        psi = ion.charge_C**2 * drive.V0**2 / (4 * ion.mass_kg * drive.OmegaT**2)
        out["depth"] = psi * _depth_factor(geom.alpha) / a_m**2 / CONSTANTS.k_B
    return out


def arctan_potential(u, v, geom: TrapGeometry, V0=1.0):
    """Large-α approximation of the potential (V) at (u, v) in µm."""
    A = geom.a - geom.d / math.pi
    u, v = np.asarray(u, float), np.asarray(v, float)
    return V0 / (2 * math.pi) * (np.arctan(2 * v / (2 * u + A)) + np.arctan(-2 * v / (-2 * u + A)))


def arctan_gradient(u, v, geom: TrapGeometry, V0=1.0):
    """``(dΦ/du, dΦ/dv)`` (V/µm) of :func:`arctan_potential`."""
    A = geom.a - geom.d / math.pi
    u, v = np.asarray(u, float), np.asarray(v, float)
    p, m = 2 * u + A, A - 2 * u
    dp, dm = p * p + 4 * v * v, m * m + 4 * v * v
    du = -4 * v / dp - 4 * v / dm
    dv = 2 * p / dp - 2 * m / dm
    k = V0 / (2 * math.pi)
    return k * du, k * dv


def analytic_pseudopotential(u, v, geom: TrapGeometry, drive, ion):
    """Pseudopotential (K) of the arctangent form."""
    du, dv = arctan_gradient(u, v, geom, drive.V0)
    gsq = (du**2 + dv**2) / UM**2
    return ion.charge_C**2 * gsq / (4 * ion.mass_kg * drive.OmegaT**2) / CONSTANTS.k_B


def analytic_pseudopotential_profile(v, geom: TrapGeometry, drive, ion):
    """``(v, ψ(0, v))`` in (µm, K) along the weak axis."""
    if geom.alpha < 4:
        raise GeometryError(f"profile needs alpha >= 4, got {geom.alpha:.3g}")
    v = np.asarray(v, float)
    return v, analytic_pseudopotential(np.zeros_like(v), v, geom, drive, ion)


def write_eta_overlay(alphas, path):
    """CSV stream ``alpha,eta_analytic``."""
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", AsymptoticValidityWarning)
        rows = [(a, analytic_eta(a)) for a in alphas]
    _write(path, ["alpha", "eta_analytic"], rows)


def write_profile(v, psi, path):
    """CSV stream ``v_um,psi_K``."""
    _write(path, ["v_um", "psi_K"], zip(v, psi))


def _write(path, header, rows):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([f"{x:.9g}" for x in row])
