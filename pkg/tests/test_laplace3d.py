import csv
from dataclasses import replace

import numpy as np
import pytest

from iontrap.core import DriveConfig, TrapGeometry
from iontrap.electrodes import rasterize
from iontrap.errors import BoundingBoxTooSmall, FitWindowOutsideVacuumRegion, FitWindowSpansGap
from iontrap.fdsolve import solve_dirichlet
from iontrap.grid import ELECTRODE, INTERIOR, ScalarField
from iontrap.laplace3d import (CENTERS, ELECTRODE_NAMES, END_CAPS, GridSpec3D, axes_3d,
                               axial_pseudo_curvature, box_half_widths, build_layout_3d,
                               default_fit_window, export_axis_csv, grad_sq_along_z,
                               hessian_at_center, rf_voltages, sigma_z, solve_laplace_3d,
                               static_voltages)

ROW2 = TrapGeometry(a=40, d=2, w=2, b=100)
COARSE = GridSpec3D(box=4)


def test_default_layout():
    lay = build_layout_3d(ROW2, U0=1.5)
    assert len(lay.electrodes) == 12
    volts = lay.potentials()
    assert sorted(v for v in volts.values()) == [0.0] * 4 + [1.5] * 8
    assert all(volts[n] == 1.5 for n in END_CAPS) and all(volts[n] == 0 for n in CENTERS)
    c = lay.electrode("UR-C")
    assert (c.lo[2], c.hi[2]) == (-50, 50)
    e = lay.electrode("UR-E+")
    assert (e.lo[2], e.hi[2]) == (52, 152)
    m = lay.electrode("UR-E-")
    assert (m.lo[2], m.hi[2]) == (-152, -52)
    with pytest.raises(KeyError):
        build_layout_3d(ROW2, {"XX-C": 1.0})


def test_rotation_map_and_rf_pattern():
    drv = DriveConfig.from_mhz(20, 50, U0=1, center_offsets=(-0.5, 0.0, 0.0, -0.5))
    volts = static_voltages(drv)
    assert set(volts) == set(ELECTRODE_NAMES)
    assert sum(v < 0 for v in volts.values()) == 2
    rf = rf_voltages(10)
    assert sorted(set(rf.values())) == [-5.0, 5.0]


def test_box_floor():
    hx, hy, hz = box_half_widths(ROW2, GridSpec3D(box=1))
    assert hx == ROW2.a / 2 + ROW2.h + ROW2.a and hz == ROW2.b / 2 + ROW2.g + ROW2.c + ROW2.a
    assert hy == ROW2.d / 2 + ROW2.w + ROW2.a
    with pytest.raises(BoundingBoxTooSmall):
        build_layout_3d(TrapGeometry(a=40, d=2, w=2, b=10, c=10, h=10), spec=GridSpec3D(box=1))


def _hyperbolic_field(eps, s, lam=0.0, quartic=0.0):
    ax = np.concatenate([-np.geomspace(20, 0.5, 30), [0.0], np.geomspace(0.5, 20, 30)])
    X, Y, Z = np.meshgrid(ax, ax, ax, indexing="ij")
    U = (-eps * X**2 - (1 - eps) * Y**2 + Z**2 + lam * X * Y) / s**2 + quartic * (X**4 - Z**4)
    return ScalarField(axes=(ax, ax, ax), values=U, mask=np.full(U.shape, INTERIOR, np.int8))


@pytest.mark.parametrize("eps,s", [(3.5, 30.0), (0.5, 10.0), (-1.0, 50.0)])
def test_hessian_hyperbolic_fixture(eps, s):
    D = hessian_at_center(_hyperbolic_field(eps, s, lam=0.3, quartic=1e-6), U0=1.0, window=10)
    assert D["D_z"] == pytest.approx(2 / s**2, rel=1e-9)
    assert D["D_x"] == pytest.approx(-2 * eps / s**2, rel=1e-9)
    assert D["D_y"] == pytest.approx(-2 * (1 - eps) / s**2, abs=1e-12)
    assert D["D_xy"] == pytest.approx(0.3 / s**2, rel=1e-9)
    assert abs(D["D_xz"]) < 1e-12 and abs(D["D_yz"]) < 1e-12


def test_hessian_window_errors():
    f = _hyperbolic_field(3.5, 30)
    with pytest.raises(FitWindowOutsideVacuumRegion):
        hessian_at_center(f, 1.0, window=50)
    mask = np.array(f.mask)
    mask[35, 30, 30] = ELECTRODE
    with pytest.raises(FitWindowOutsideVacuumRegion):
        hessian_at_center(replace(f, mask=mask), 1.0, window=10)
    with pytest.raises(ValueError):
        hessian_at_center(f, 1.0)


def test_all_electrodes_equal_give_constant():
    # every Dirichlet node (electrodes and box) at U0: the interior must be U0
    lay = build_layout_3d(ROW2, {n: 2.0 for n in ELECTRODE_NAMES}, COARSE)
    axes = axes_3d(ROW2, COARSE)
    mask, vals = rasterize(lay, axes)
    vals = np.where(mask == INTERIOR, 0.0, 2.0)
    out, _, _ = solve_dirichlet(axes, mask != INTERIOR, vals, tol=1e-10)
    assert np.max(np.abs(out - 2.0)) < 1e-8
    # with the grounded box the interior stays within the electrode range
    fld = solve_laplace_3d(lay, COARSE)
    assert fld.values.min() >= -1e-9 and fld.values.max() <= 2.0 + 1e-9


@pytest.fixture(scope="module")
def static_row2():
    return solve_laplace_3d(build_layout_3d(ROW2, U0=1.0), GridSpec3D())


@pytest.mark.slow
def test_symmetric_static_field(static_row2):
    f = static_row2
    x, y, z = f.axes
    for ax in (x, y, z):
        assert np.allclose(ax, -ax[::-1])
    v = f.values
    assert np.max(np.abs(v - v[:, :, ::-1])) < 2 * 1e-8
    assert np.max(np.abs(v - v[::-1, :, :])) < 2 * 1e-8
    assert np.max(np.abs(v - v[:, ::-1, :])) < 2 * 1e-8
    g = f.gradient()
    idx = f.center_index()
    assert all(abs(comp[idx]) < 1e-9 for comp in g)
    assert v.min() >= -1e-9 and v.max() <= 1 + 1e-9


@pytest.mark.slow
def test_trace_free_and_row2_factors(static_row2):
    D = hessian_at_center(static_row2, 1.0, geom=ROW2)
    assert abs(D["D_x"] + D["D_y"] + D["D_z"]) < 0.01 * abs(D["D_z"])
    assert abs(D["D_xy"]) < 1e-6 * abs(D["D_z"])
    eps = -D["D_x"] / D["D_z"]
    kappa = D["D_z"] * ROW2.d_eff**2 / 2
    assert eps == pytest.approx(3.5, rel=0.15)
    assert kappa == pytest.approx(0.26, rel=0.15)


@pytest.mark.slow
def test_row1_factors():
    g = TrapGeometry(a=40, d=10, w=10, b=100)
    f = solve_laplace_3d(build_layout_3d(g, U0=1.0), GridSpec3D())
    D = hessian_at_center(f, 1.0, geom=g)
    eps = -D["D_x"] / D["D_z"]
    kappa = D["D_z"] * g.d_eff**2 / 2
    assert eps == pytest.approx(3.0, rel=0.15)
    assert kappa == pytest.approx(0.3, rel=0.15)


@pytest.mark.slow
def test_window_halving():
    spec = GridSpec3D(h_center=ROW2.a / 64)
    f = solve_laplace_3d(build_layout_3d(ROW2, U0=1.0, spec=spec), spec)
    w = default_fit_window(ROW2)
    assert w <= ROW2.l_eff / 2
    full, half = hessian_at_center(f, 1.0, window=w), hessian_at_center(f, 1.0, window=w / 2)
    for k in ("D_x", "D_y", "D_z"):
        assert half[k] == pytest.approx(full[k], rel=0.01), k


@pytest.mark.slow
def test_balanced_drive_has_no_axial_pseudopotential():
    fld = solve_laplace_3d(build_layout_3d(ROW2, rf_voltages(1.0, "balanced"), COARSE), COARSE)
    assert abs(axial_pseudo_curvature(fld, ROW2)) < 1e-15


@pytest.mark.slow
def test_sigma_z_small_and_decreasing_with_b():
    l = ROW2.l_eff
    scaled = TrapGeometry(a=40, d=2, w=2, b=10 * l, c=5 * l, g=l / 10)
    s_scaled = sigma_z(scaled, 0.4185, spec=COARSE)
    assert 0 < s_scaled < 0.05
    short = sigma_z(TrapGeometry(a=40, d=2, w=2, b=100), 0.4185, spec=COARSE)
    long = sigma_z(TrapGeometry(a=40, d=2, w=2, b=300), 0.4185, spec=COARSE)
    assert 0 < long < short


def test_fit_window_spans_gap():
    f = _hyperbolic_field(3.5, 30)
    with pytest.raises(FitWindowSpansGap):
        axial_pseudo_curvature(f, TrapGeometry(a=40, d=2, w=2, b=10), window=6)


def test_axis_export(tmp_path):
    z, gsq = grad_sq_along_z(_hyperbolic_field(3.5, 30))
    # |grad U|^2 on the z axis of the fixture is (2z/s^2)^2
    assert gsq == pytest.approx((2 * z / 900) ** 2, rel=0.05, abs=1e-12)
    path = tmp_path / "axis.csv"
    export_axis_csv(z, gsq, path)
    rows = list(csv.reader(open(path)))
    assert rows[0] == ["z_um", "gradV_sq"] and len(rows) == len(z) + 1
