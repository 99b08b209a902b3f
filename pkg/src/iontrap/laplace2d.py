"""RF potential amplitude in the z = 0 cross-section.

The four cantilever cross-sections sit at ``|x| >= a/2`` in two layers
``d/2 <= |y| <= d/2 + w`` and run out to the grounded bounding box.  The
upper-left and lower-right electrodes carry ``+V0/2``, the other diagonal pair
``-V0/2`` (``drive_mode="balanced"``); ``"single_ended"`` puts ``V0`` on the
first pair and grounds the second.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .core import DriveConfig, TrapGeometry
from .electrodes import Electrode, ElectrodeLayout, solve_layout
from .errors import BoundingBoxTooSmall, GeometryError
from .grid import ScalarField, graded_axis, uniform_axis

ScalarField2D = ScalarField
ElectrodeLayout2D = ElectrodeLayout

# (name, x side, y side, sign of the RF amplitude)
QUADRANTS = (("UL", -1, +1, +1), ("UR", +1, +1, -1), ("LL", -1, -1, -1), ("LR", +1, -1, +1))


def rf_potentials(V0, drive_mode="balanced"):
    """RF amplitude on each cantilever quadrant."""
    if drive_mode == "balanced":
        return {name: sign * V0 / 2 for name, _, _, sign in QUADRANTS}
    if drive_mode == "single_ended":
        return {name: (V0 if sign > 0 else 0.0) for name, _, _, sign in QUADRANTS}
    raise ValueError(f"unknown drive_mode {drive_mode!r}")


@dataclass(frozen=True)
class GridSpec:
    """Grid and solver settings.

    box       half-width of the grounded bounding box, in units of ``a``
    h_center  node spacing over the trapping region (µm); default ``l_eff/60``
    h_feature spacing at electrode faces (µm); default ``min(w, d)/4``
    growth    spacing growth rate away from those regions (0 gives a uniform grid)
    refine    divide every spacing by this factor
    thin      electrodes of zero thickness, one node row each
    """

    box: float = 2.0
    h_center: float | None = None
    h_feature: float | None = None
    growth: float = 0.12
    h_max: float | None = None
    refine: float = 1.0
    thin: bool = False
    tol: float = 1e-8
    max_iters: int = 1_000_000
    method: str = "auto"

    def spacings(self, geom, center_div=60.0, feature_div=4.0):
        h_c = self.h_center if self.h_center is not None else geom.l_eff / center_div
        thick = geom.d if self.thin else min(geom.w, geom.d)
        h_f = self.h_feature if self.h_feature is not None else thick / feature_div
        h_max = self.h_max if self.h_max is not None else geom.a / 4
        h_c, h_f, h_max = (v / self.refine for v in (h_c, h_f, h_max))
        return h_c, h_f, max(h_max, h_c, h_f)


def build_layout_2d(geom: TrapGeometry, drive: DriveConfig, box: float = 2.0,
                    thin: bool = False, drive_mode: str = "balanced") -> ElectrodeLayout:
    half = box * geom.a
    if 2 * half < 2 * geom.a:
        raise BoundingBoxTooSmall(f"bounding box {2 * half} µm is smaller than 2a = {2 * geom.a} µm")
    top = geom.d / 2 + (0.0 if thin else geom.w)
    if top >= half or geom.a / 2 >= half:
        raise BoundingBoxTooSmall("electrodes do not fit inside the bounding box")
    volts = rf_potentials(drive.V0, drive_mode)
    electrodes = []
    for name, sx, sy, _ in QUADRANTS:
        xs = sorted((sx * geom.a / 2, sx * half))
        ys = sorted((sy * geom.d / 2, sy * top))
        electrodes.append(Electrode(name, (xs[0], ys[0]), (xs[1], ys[1]), volts[name]))
    return ElectrodeLayout(geometry=geom, electrodes=tuple(electrodes),
                           half_widths=(half, half), thin=thin)


def axes_2d(layout: ElectrodeLayout, spec: GridSpec):
    geom = layout.geometry
    hx, hy = layout.half_widths
    h_c, h_f, h_max = spec.spacings(geom)
    if spec.growth == 0:
        h = min(h_c, h_f)
        return _snapped_uniform(hx, h, geom, layout.thin), _snapped_uniform(hy, h, geom, layout.thin)
    top = geom.d / 2 + (0.0 if layout.thin else geom.w)
    x = graded_axis(hx, [(0.0, h_c, 0.5 * geom.a), (geom.a / 2, h_f, 0.0)],
                    h_max=h_max, growth=spec.growth)
    y_feats = [(0.0, h_c, 0.75 * geom.a), (geom.d / 2, h_f, 0.0), (top, h_f, 0.0)]
    y = graded_axis(hy, y_feats, h_max=h_max, growth=spec.growth)
    return x, y


def _snapped_uniform(half, h, geom, thin):
    """Uniform axis with spacing <= h, chosen so electrode edges fall on nodes when possible."""
    marks = [geom.a / 2, geom.d / 2, half] + ([] if thin else [geom.d / 2 + geom.w])
    base = geom.d / 2
    for n in range(1, 10_000):
        step = base / n
        if step > h:
            continue
        if all(abs(m / step - round(m / step)) < 1e-6 for m in marks):
            return uniform_axis(half, step)
        if step < h / 4:
            break
    return uniform_axis(half, h)


def solve_laplace_2d(layout: ElectrodeLayout, grid_spec: GridSpec | None = None) -> ScalarField:
    spec = grid_spec or GridSpec(thin=layout.thin)
    if spec.thin != layout.thin:
        raise GeometryError("grid spec and layout disagree on thin-electrode mode")
    geom = layout.geometry
    axes = axes_2d(layout, spec)
    for k, ax in enumerate(axes):
        h_fine = np.min(np.diff(ax))
        need = geom.d if k == 1 else geom.a
        if need / h_fine < 4 - 1e-9:
            raise GeometryError("grid does not resolve the layer separation with 4 nodes")
    return solve_layout(layout, axes, tol=spec.tol, max_iters=spec.max_iters, method=spec.method)


def solve_rf_2d(geom, drive, spec: GridSpec | None = None, drive_mode="balanced"):
    spec = spec or GridSpec()
    layout = build_layout_2d(geom, drive, box=spec.box, thin=spec.thin, drive_mode=drive_mode)
    return solve_laplace_2d(layout, spec)


def sample_field(field: ScalarField, x, y):
    """Bilinear interpolation of the potential (V) at (x, y) in µm."""
    return field.sample(x, y)


def gradient_field(field: ScalarField):
    """(dV/dx, dV/dy) in V/µm on the grid nodes; NaN inside electrodes."""
    return field.gradient()


def export_field_csv(field: ScalarField, path, what="values"):
    """Write ``x_um,y_um[,z_um],V`` (or ``mask``) with one node per row, row-major."""
    names = ["x_um", "y_um", "z_um"][: field.ndim]
    data = field.values if what == "values" else field.mask
    label = "V" if what == "values" else "mask"
    grids = np.meshgrid(*field.axes, indexing="ij")
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(names + [label])
        for row in zip(*(g.ravel() for g in grids), data.ravel()):
            *coords, v = row
            writer.writerow([f"{c:.9g}" for c in coords] + [f"{v:.9g}" if what == "values" else int(v)])
