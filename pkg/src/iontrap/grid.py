"""Rectilinear grids, graded towards electrode edges, and the fields that live on them."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.interpolate import RegularGridInterpolator

from .errors import OutOfDomain

INTERIOR, ELECTRODE, BOUNDARY = 0, 1, 2


def graded_axis(half_width, features=(), h_max=None, growth=0.0, h_base=None):
    """Node coordinates on [-half_width, half_width], mirror symmetric about 0.

    ``features`` is a sequence of ``(position, spacing, plateau)``; the local
    spacing is the smallest ``spacing + growth * max(0, |s - position| - plateau)``
    over all features, capped by ``h_max``.  Zero, every feature position and
    the end point are nodes.  With ``growth=0`` and a single spacing the axis is
    uniform up to the rounding needed to land on the breakpoints.
    """
    half_width = float(half_width)
    feats = [(abs(float(p)), float(h), float(r)) for p, h, r in features]
    if h_base is None:
        h_base = min(h for _, h, _ in feats) if feats else half_width / 64
    if h_max is None:
        h_max = max([h_base] + [h for _, h, _ in feats]) if growth == 0 else half_width / 8

    def spacing(s):
        out = np.full_like(s, h_max if growth > 0 else max(h_max, h_base))
        if growth == 0 and not feats:
            out[:] = h_base
        for p, h, r in feats:
            out = np.minimum(out, h + growth * np.maximum(0.0, np.abs(s - p) - r))
        return out

    breaks = sorted({0.0, half_width, *(p for p, _, _ in feats if 0 < p < half_width)})
    nodes = [0.0]
    for lo, hi in zip(breaks[:-1], breaks[1:]):
        s = np.linspace(lo, hi, 4001)
        density = 1.0 / spacing(s)
        cum = np.concatenate(([0.0], np.cumsum(0.5 * (density[1:] + density[:-1]) * np.diff(s))))
        n = max(1, int(np.ceil(cum[-1] - 1e-9)))
        targets = np.linspace(0.0, cum[-1], n + 1)[1:]
        pts = np.interp(targets, cum, s)
        pts[-1] = hi
        nodes.extend(pts)
    half = np.asarray(nodes)
    return np.concatenate((-half[:0:-1], half))


def uniform_axis(half_width, h):
    n = max(1, int(round(half_width / h)))
    return np.linspace(-half_width, half_width, 2 * n + 1)


def min_cells_across(axis, lo, hi):
    """Number of grid cells spanned by [lo, hi] on ``axis`` (nodes inside, minus one)."""
    tol = 1e-9 * max(1.0, abs(axis[-1]))
    inside = np.count_nonzero((axis >= lo - tol) & (axis <= hi + tol))
    return max(0, inside - 1)


@dataclass(frozen=True, eq=False)
class ScalarField:
    """Potential sampled on a rectilinear grid (coordinates in µm, values in V).

    ``mask`` marks every node as INTERIOR, ELECTRODE or BOUNDARY.
    """

    axes: tuple
    values: np.ndarray
    mask: np.ndarray
    scale: float = 1.0  # largest electrode |V|, used to normalise residuals
    residual: float = float("nan")
    iterations: int = 0

    @property
    def ndim(self):
        return len(self.axes)

    @property
    def shape(self):
        return self.values.shape

    @property
    def spacings(self):
        return tuple(np.diff(ax) for ax in self.axes)

    @property
    def origin(self):
        return tuple(float(ax[0]) for ax in self.axes)

    def axis_index(self, dim, coord, atol=1e-9):
        idx = int(np.argmin(np.abs(self.axes[dim] - coord)))
        if abs(self.axes[dim][idx] - coord) > atol * max(1.0, abs(coord)):
            raise OutOfDomain(f"{coord} is not a node on axis {dim}")
        return idx

    def center_index(self):
        return tuple(self.axis_index(k, 0.0) for k in range(self.ndim))

    def interpolator(self, values=None, fill_nan=False):
        vals = self.values if values is None else values
        return RegularGridInterpolator(self.axes, vals, method="linear",
                                       bounds_error=not fill_nan,
                                       fill_value=np.nan if fill_nan else None)

    def sample(self, *coords):
        """Multilinear interpolation of the node values; exact at nodes."""
        pts = np.stack(np.broadcast_arrays(*[np.asarray(c, dtype=float) for c in coords]), axis=-1)
        lo = np.array([ax[0] for ax in self.axes])
        hi = np.array([ax[-1] for ax in self.axes])
        tol = 1e-12 * np.maximum(1.0, np.abs(hi))
        if np.any(pts < lo - tol) or np.any(pts > hi + tol):
            raise OutOfDomain("sample point lies outside the grid")
        pts = np.clip(pts, lo, hi)
        out = self.interpolator()(pts)
        return float(out) if out.ndim == 0 else out

    def gradient(self):
        """Central differences in the interior (second order on graded axes),
        one-sided at the box faces; electrode nodes are set to NaN."""
        comps = np.gradient(self.values, *self.axes, edge_order=2)
        if self.ndim == 1:
            comps = [comps]
        bad = self.mask == ELECTRODE
        out = []
        for comp in comps:
            comp = np.array(comp)
            comp[bad] = np.nan
            out.append(comp)
        return tuple(out)

    def grad_sq(self):
        return sum(c * c for c in self.gradient())
