"""Three-dimensional fields of the twelve-cantilever trap.

Per layer and per side there is a centre electrode spanning ``|z| <= b/2`` and
two end-caps spanning ``b/2 + g <= |z| <= b/2 + g + c``.  Electrodes are named
``"<quadrant>-<segment>"`` with quadrant UL/UR/LL/LR (upper/lower layer,
left/right side) and segment C (centre), E+ or E- (end-cap at +z or -z).
"""
from __future__ import annotations

import csv
import itertools
from dataclasses import dataclass, replace

import numpy as np

from .core import DriveConfig, TrapGeometry
from .electrodes import Electrode, ElectrodeLayout, solve_layout
from .errors import (BoundingBoxTooSmall, FitWindowOutsideVacuumRegion, FitWindowSpansGap,
                     GeometryError)
from .grid import ELECTRODE, ScalarField, graded_axis
from .laplace2d import QUADRANTS, rf_potentials

ScalarField3D = ScalarField
ElectrodeLayout3D = ElectrodeLayout

SEGMENTS = ("C", "E+", "E-")
CENTERS = tuple(f"{q}-C" for q, *_ in QUADRANTS)
END_CAPS = tuple(f"{q}-{s}" for q, *_ in QUADRANTS for s in ("E+", "E-"))
ELECTRODE_NAMES = tuple(f"{q}-{s}" for q, *_ in QUADRANTS for s in SEGMENTS)


@dataclass(frozen=True)
class GridSpec3D:
    """Grid and solver settings for 3D solves.

    box        minimum half-width of the grounded box in units of ``a``; the box
               also clears the outer electrode faces by at least ``a``
    h_center   spacing over the fit region around the centre (µm); default ``a/32``
    h_feature  spacing at electrode faces (µm); default ``min(w, d)/1.5``
    h_gap      spacing across the gaps (µm); default ``g/2``
    h_max      largest spacing (µm); default ``4a``
    """

    box: float = 32.0
    h_center: float | None = None
    h_feature: float | None = None
    h_gap: float | None = None
    growth: float = 0.4
    h_max: float | None = None
    refine: float = 1.0
    thin: bool = False
    tol: float = 1e-8
    max_iters: int = 1_000_000
    method: str = "auto"

    def spacings(self, geom):
        thick = geom.d if self.thin else min(geom.w, geom.d)
        h_c = self.h_center if self.h_center is not None else geom.a / 32
        h_f = self.h_feature if self.h_feature is not None else thick / 1.5
        h_g = self.h_gap if self.h_gap is not None else geom.g / 2
        h_max = self.h_max if self.h_max is not None else 4 * geom.a
        return tuple(v / self.refine for v in (h_c, h_f, h_g, h_max))


def box_half_widths(geom: TrapGeometry, spec: GridSpec3D):
    half = spec.box * geom.a
    x_half = max(half, geom.a / 2 + geom.h + geom.a)
    y_half = max(half, geom.d / 2 + geom.w + geom.a)
    z_half = max(half, geom.b / 2 + geom.g + geom.c + geom.a)
    return x_half, y_half, z_half


def static_voltages(drive: DriveConfig):
    """End-caps at U0, centre electrodes at their offsets."""
    volts = {name: drive.U0 for name in END_CAPS}
    volts.update(dict(zip(CENTERS, drive.center_offsets)))
    return volts


def rf_voltages(V0, drive_mode="balanced"):
    """The 2D RF pattern applied to all three segments of every quadrant."""
    quad = rf_potentials(V0, drive_mode)
    return {f"{q}-{s}": quad[q] for q, *_ in QUADRANTS for s in SEGMENTS}


def build_layout_3d(geom: TrapGeometry, static_volts=None, spec: GridSpec3D | None = None,
                    U0=1.0) -> ElectrodeLayout:
    """Twelve boxes; unspecified electrodes default to end-caps at U0 and grounded centres."""
    spec = spec or GridSpec3D()
    hx, hy, hz = box_half_widths(geom, spec)
    if min(hx, hy, hz) < 2 * geom.a:
        raise BoundingBoxTooSmall(f"box half-widths {hx, hy, hz} µm must be at least 2a = {2 * geom.a} µm")
    top = geom.d / 2 + (0.0 if spec.thin else geom.w)
    if top >= hy:
        raise BoundingBoxTooSmall("electrode layers do not fit inside the box")
    volts = {name: (U0 if name in END_CAPS else 0.0) for name in ELECTRODE_NAMES}
    if static_volts:
        unknown = set(static_volts) - set(ELECTRODE_NAMES)
        if unknown:
            raise KeyError(f"no such electrodes: {sorted(unknown)}")
        volts.update(static_volts)
    zc = geom.b / 2
    z_spans = {"C": (-zc, zc),
               "E+": (zc + geom.g, zc + geom.g + geom.c),
               "E-": (-(zc + geom.g + geom.c), -(zc + geom.g))}
    electrodes = []
    for (q, sx, sy, _), seg in itertools.product(QUADRANTS, SEGMENTS):
        xs = sorted((sx * geom.a / 2, sx * (geom.a / 2 + geom.h)))
        ys = sorted((sy * geom.d / 2, sy * top))
        z0, z1 = z_spans[seg]
        name = f"{q}-{seg}"
        electrodes.append(Electrode(name, (xs[0], ys[0], z0), (xs[1], ys[1], z1), float(volts[name])))
    return ElectrodeLayout(geometry=geom, electrodes=tuple(electrodes),
                           half_widths=(hx, hy, hz), thin=spec.thin)


def axes_3d(geom: TrapGeometry, spec: GridSpec3D):
    hx, hy, hz = box_half_widths(geom, spec)
    h_c, h_f, h_g, h_max = spec.spacings(geom)
    fit = min(geom.a / 8, geom.b / 4)
    top = geom.d / 2 + (0.0 if spec.thin else geom.w)
    x = graded_axis(hx, [(0.0, h_c, fit), (geom.a / 2, h_f, 0.0), (geom.a / 2 + geom.h, max(h_f, geom.h / 10), 0.0)],
                    h_max=h_max, growth=spec.growth)
    y = graded_axis(hy, [(0.0, h_c, fit), (geom.d / 2, h_f, 0.0), (top, h_f, 0.0)],
                    h_max=h_max, growth=spec.growth)
    zc = geom.b / 2
    z_feats = [(0.0, h_c, fit), (zc, h_g, 0.0), (zc + geom.g, h_g, 0.0),
               (zc + geom.g + geom.c, max(h_g, h_f), 0.0)]
    z = graded_axis(hz, z_feats, h_max=h_max, growth=spec.growth)
    return x, y, z


def solve_laplace_3d(layout: ElectrodeLayout, grid_spec: GridSpec3D | None = None,
                     x0=None) -> ScalarField:
    spec = grid_spec or GridSpec3D(thin=layout.thin)
    axes = axes_3d(layout.geometry, spec)
    hx, hy, hz = (ax[-1] for ax in axes)
    if not np.allclose((hx, hy, hz), layout.half_widths):
        raise GeometryError("layout box and grid spec box differ")
    return solve_layout(layout, axes, tol=spec.tol, max_iters=spec.max_iters,
                        method=spec.method, x0=x0)


def default_fit_window(geom: TrapGeometry):
    return min(geom.a / 8, geom.b / 4)


def _axis_line(field, dim):
    center = list(field.center_index())
    sl = list(center)
    sl[dim] = slice(None)
    return np.asarray(field.axes[dim]), tuple(sl)


def _check_window(field, dims, window):
    idx = field.center_index()
    for dim in dims:
        ax = field.axes[dim]
        if window > ax[-1] or window <= 0:
            raise FitWindowOutsideVacuumRegion(f"fit window {window} µm exceeds the grid")
        sel = np.abs(ax) <= window * (1 + 1e-12)
        sl = list(idx)
        sl[dim] = sel
        if np.any(field.mask[tuple(sl)] == ELECTRODE):
            raise FitWindowOutsideVacuumRegion(f"fit window {window} µm along axis {dim} touches an electrode")
        if np.count_nonzero(sel) < 7:
            raise FitWindowOutsideVacuumRegion(f"fewer than 7 nodes in the fit window along axis {dim}")


# Fits are quartic polynomials whose s^2 coefficient is reported; the higher
# terms only absorb anharmonic contamination across the window.
FIT_DEGREE = 4


def axis_curvature(field: ScalarField, dim: int, window: float, values=None):
    """Second derivative at the origin from a least-squares polynomial along one axis."""
    ax, sl = _axis_line(field, dim)
    data = (field.values if values is None else values)[sl]
    sel = np.abs(ax) <= window * (1 + 1e-12)
    coef = np.polynomial.polynomial.polyfit(ax[sel], data[sel], FIT_DEGREE)
    return 2 * coef[2]


def plane_hessian(field: ScalarField, dims, window: float):
    """Full 2x2 Hessian at the origin in the plane spanned by ``dims``
    (least-squares polynomial surface over the nodes within ``window``)."""
    i, j = dims
    center = list(field.center_index())
    ai, aj = field.axes[i], field.axes[j]
    si = np.nonzero(np.abs(ai) <= window * (1 + 1e-12))[0]
    sj = np.nonzero(np.abs(aj) <= window * (1 + 1e-12))[0]
    sl = list(center)
    sl[i] = slice(si[0], si[-1] + 1)
    sl[j] = slice(sj[0], sj[-1] + 1)
    block = field.values[tuple(sl)]
    if i > j:
        block = block.T
    P, Q = np.meshgrid(ai[si], aj[sj], indexing="ij")
    inside = P**2 + Q**2 <= window**2 * (1 + 1e-12)
    p, q, v = P[inside] / window, Q[inside] / window, block[inside]
    powers = [(m, n) for m in range(FIT_DEGREE + 1) for n in range(FIT_DEGREE + 1 - m)]
    A = np.column_stack([p**m * q**n for m, n in powers])
    coef, *_ = np.linalg.lstsq(A, v, rcond=None)
    c = dict(zip(powers, coef))
    hxx, hxy, hyy = 2 * c[(2, 0)], c[(1, 1)], 2 * c[(0, 2)]
    return np.array([[hxx, hxy], [hxy, hyy]]) / window**2


def hessian_at_center(field: ScalarField, U0: float, window: float | None = None,
                      geom: TrapGeometry | None = None):
    """Curvatures ``D_k = (1/U0) d^2U/dk^2`` at the origin (1/µm^2), plus mixed terms."""
    if window is None:
        if geom is None:
            raise ValueError("pass either a fit window or the geometry")
        window = default_fit_window(geom)
    _check_window(field, (0, 1, 2), window)
    D = {f"D_{k}": axis_curvature(field, n, window) / U0 for n, k in enumerate("xyz")}
    for (i, j), name in (((0, 1), "D_xy"), ((0, 2), "D_xz"), ((1, 2), "D_yz")):
        D[name] = plane_hessian(field, (i, j), window)[0, 1] / U0
    return D


def grad_sq_along_z(field: ScalarField):
    """``(z, |grad V|^2)`` on the nodes of the z axis (µm, V^2/µm^2)."""
    ix, iy, _ = field.center_index()
    # local 3x3 stencil in x and y suffices for the transverse derivatives on the axis
    xs, ys = field.axes[0], field.axes[1]
    sub = field.values[ix - 1:ix + 2, iy - 1:iy + 2, :]
    dvdx = np.gradient(sub, xs[ix - 1:ix + 2], axis=0)[1, 1, :]
    dvdy = np.gradient(sub, ys[iy - 1:iy + 2], axis=1)[1, 1, :]
    dvdz = np.gradient(field.values[ix, iy, :], field.axes[2], edge_order=2)
    return np.asarray(field.axes[2]), dvdx**2 + dvdy**2 + dvdz**2


def axial_pseudo_curvature(rf_field: ScalarField, geom: TrapGeometry, window: float | None = None):
    """``H_z = (1/2) d^2/dz^2 |grad V|^2`` at the origin (V^2/µm^4) from a polynomial fit."""
    window = default_fit_window(geom) if window is None else window
    if window >= geom.b / 2:
        raise FitWindowSpansGap(f"fit window {window} µm reaches the gap at z = {geom.b / 2} µm")
    z, gsq = grad_sq_along_z(rf_field)
    sel = np.abs(z) <= window * (1 + 1e-12)
    if np.count_nonzero(sel) < 7:
        raise FitWindowSpansGap("fewer than 7 nodes inside the axial fit window")
    coef = np.polynomial.polynomial.polyfit(z[sel], gsq[sel], FIT_DEGREE)
    return float(coef[2])


def export_axis_csv(z, gsq, path):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["z_um", "gradV_sq"])
        for zz, gg in zip(z, gsq):
            writer.writerow([f"{zz:.9g}", f"{gg:.9g}"])


def richardson_hessian(geom: TrapGeometry, volts, U0, spec: GridSpec3D | None = None,
                       refine_levels=(1.0, 2.0), order=2.0, window=None):
    """Curvatures from solves at two resolutions, extrapolated assuming O(h^order) error.

    Returns ``{"D": extrapolated, "D_err": |extrapolated - fine|, "levels": [per-level D]}``.
    A single refine level returns that level's values with zero error bars.
    """
    spec = spec or GridSpec3D()
    layout = build_layout_3d(geom, volts, spec)
    levels = []
    for r in refine_levels:
        s = replace(spec, refine=spec.refine * r)
        levels.append(hessian_at_center(solve_laplace_3d(layout, s), U0, window=window, geom=geom))
    if len(levels) == 1:
        D = dict(levels[0])
        return {"D": D, "D_err": {k: 0.0 for k in D}, "levels": levels}
    if len(levels) != 2:
        raise ValueError("Richardson extrapolation uses exactly two refine levels")
    ratio = (refine_levels[1] / refine_levels[0]) ** order
    coarse, fine = levels
    D = {k: (ratio * fine[k] - coarse[k]) / (ratio - 1) for k in fine}
    err = {k: abs(D[k] - fine[k]) for k in fine}
    return {"D": D, "D_err": err, "levels": levels}


def sigma_z(geom: TrapGeometry, eta, V0=1.0, spec: GridSpec3D | None = None,
            drive_mode="single_ended", window=None, return_field=False):
    """Residual axial to transverse pseudopotential ratio ``H_z l_eff^4 / (eta^2 V0^2)``."""
    spec = spec or GridSpec3D()
    layout = build_layout_3d(geom, rf_voltages(V0, drive_mode), spec)
    fld = solve_laplace_3d(layout, spec)
    Hz = axial_pseudo_curvature(fld, geom, window)
    value = Hz * geom.l_eff**4 / (eta**2 * V0**2)
    return (value, Hz, fld) if return_field else value
