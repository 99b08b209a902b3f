"""Axis-aligned electrode layouts and their rasterisation onto a grid."""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .core import TrapGeometry
from .errors import GapTooSmallForGrid, GeometryError
from .fdsolve import solve_dirichlet
from .grid import BOUNDARY, ELECTRODE, INTERIOR, ScalarField, min_cells_across


@dataclass(frozen=True)
class Electrode:
    name: str
    lo: tuple
    hi: tuple
    potential: float

    def with_potential(self, v):
        return replace(self, potential=float(v))


@dataclass(frozen=True)
class ElectrodeLayout:
    """Electrodes inside a grounded box ``[-half_widths, half_widths]`` (µm)."""

    geometry: TrapGeometry
    electrodes: tuple
    half_widths: tuple
    thin: bool = False

    @property
    def ndim(self):
        return len(self.half_widths)

    @property
    def names(self):
        return tuple(e.name for e in self.electrodes)

    def potentials(self):
        return {e.name: e.potential for e in self.electrodes}

    def with_potentials(self, volts):
        unknown = set(volts) - set(self.names)
        if unknown:
            raise KeyError(f"no such electrodes: {sorted(unknown)}")
        return replace(self, electrodes=tuple(
            e.with_potential(volts[e.name]) if e.name in volts else e for e in self.electrodes))

    def electrode(self, name):
        for e in self.electrodes:
            if e.name == name:
                return e
        raise KeyError(name)


def rasterize(layout, axes):
    """Return ``(mask, fixed_values)`` for the layout on the given axes."""
    shape = tuple(len(ax) for ax in axes)
    mask = np.full(shape, INTERIOR, dtype=np.int8)
    values = np.zeros(shape)
    owner = np.full(shape, -1, dtype=np.int32)
    for n, e in enumerate(layout.electrodes):
        sel = np.ones(shape, dtype=bool)
        for k, ax in enumerate(axes):
            lo, hi = e.lo[k], e.hi[k]
            tol = 1e-9 * max(1.0, abs(ax[-1]))
            if hi - lo > tol:
                cells = min_cells_across(ax, lo, hi)
                if cells < 2:
                    err = GapTooSmallForGrid if layout.ndim == 3 and k == 2 else GeometryError
                    raise err(f"electrode {e.name} spans {cells} cell(s) along axis {k}; "
                              "refine the grid (at least 2 cells required)")
            elif not layout.thin:
                raise GeometryError(f"electrode {e.name} has zero extent along axis {k}")
            vec = (ax >= lo - tol) & (ax <= hi + tol)
            if not vec.any():
                raise GeometryError(f"electrode {e.name} does not cover any node along axis {k}")
            shp = [1] * len(axes)
            shp[k] = vec.size
            sel = sel & vec.reshape(shp)
        clash = sel & (owner >= 0)
        if clash.any():
            other = layout.electrodes[int(owner[clash][0])].name
            raise GeometryError(f"electrodes {other} and {e.name} overlap on the grid")
        owner[sel] = n
        mask[sel] = ELECTRODE
        values[sel] = e.potential
    face = np.zeros(shape, dtype=bool)
    for k in range(len(axes)):
        idx = [slice(None)] * len(axes)
        idx[k] = 0
        face[tuple(idx)] = True
        idx[k] = -1
        face[tuple(idx)] = True
    face &= mask != ELECTRODE
    mask[face] = BOUNDARY
    return mask, values


def check_gaps(layout, axes):
    """Vacuum gaps between electrodes must span at least two cells."""
    for k, ax in enumerate(axes):
        edges = sorted({e.lo[k] for e in layout.electrodes} | {e.hi[k] for e in layout.electrodes})
        for lo, hi in zip(edges[:-1], edges[1:]):
            if not any(e.lo[k] <= lo and e.hi[k] >= hi for e in layout.electrodes):
                gap = hi - lo
                if gap > 0 and min_cells_across(ax, lo, hi) < 2:
                    err = GapTooSmallForGrid if k == layout.ndim - 1 and layout.ndim == 3 else GeometryError
                    raise err(f"gap [{lo}, {hi}] along axis {k} is narrower than two cells")


def solve_layout(layout, axes, tol=1e-8, max_iters=1_000_000, method="auto", x0=None):
    axes = tuple(np.asarray(ax, dtype=float) for ax in axes)
    check_gaps(layout, axes)
    mask, fixed_values = rasterize(layout, axes)
    fixed = mask != INTERIOR
    values, iterations, res = solve_dirichlet(axes, fixed, fixed_values, tol=tol,
                                              max_iters=max_iters, method=method, x0=x0)
    scale = float(np.max(np.abs(fixed_values))) if fixed.any() else 0.0
    values.setflags(write=False)
    mask.setflags(write=False)
    return ScalarField(axes=axes, values=values, mask=mask, scale=scale,
                       residual=res, iterations=iterations)
