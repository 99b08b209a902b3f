import math
import warnings

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from iontrap.analytic import (LITERATURE_SCALED_DEPTH, analytic_depth, analytic_eta,
                              analytic_potential, analytic_pseudopotential,
                              analytic_pseudopotential_profile, analytic_rmax, arctan_potential,
                              asymptotic_valid, inverse_map, lambert_w, map_field, select_branch,
                              w_of_exp, write_eta_overlay, write_profile)
from iontrap.core import DriveConfig, IonSpecies, TrapGeometry
from iontrap.errors import (AsymptoticValidityWarning, GeometryError, InvalidBranch, OnElectrode)
from iontrap.multipole import eta, expand

ION = IonSpecies.cd111()
DRIVE = DriveConfig.from_mhz(1.0, 50)


def test_lambert_identities():
    assert lambert_w(0, 0) == 0
    assert abs(lambert_w(0, math.e) - 1) < 1e-14
    assert abs(lambert_w(-1, -1 / math.e) + 1) < 1e-14
    assert abs(lambert_w(0, -1 / math.e) + 1) < 1e-14


def test_lambert_random_residuals():
    rng = np.random.default_rng(2024)
    n = 10_000
    k = rng.integers(-5, 6, n)
    mag = 10.0 ** rng.uniform(-6, 6, n)
    xi = mag * np.exp(1j * rng.uniform(-np.pi, np.pi, n))
    worst = 0.0
    for kk, x in zip(k, xi):
        y = lambert_w(int(kk), x)
        worst = max(worst, abs(y * np.exp(y) - x) / max(1.0, abs(x)))
    assert worst < 1e-12


def test_lambert_matches_mpmath_branches():
    rng = np.random.default_rng(7)
    for _ in range(200):
        k = int(rng.integers(-3, 4))
        x = complex(*rng.normal(size=2) * 10)
        ref = complex(mpmath.lambertw(x, k))
        assert abs(lambert_w(k, x) - ref) < 1e-10 * max(1, abs(ref))


def test_lambert_array_input():
    xi = np.array([0.5, 1.0, 2.0 + 1j])
    y = lambert_w(0, xi)
    np.testing.assert_allclose(y * np.exp(y), xi, atol=1e-13)


@pytest.mark.parametrize("k,xi", [(1, 0.0), (-1, 0.0), (0.5, 1.0)])
def test_lambert_invalid(k, xi):
    with pytest.raises(InvalidBranch):
        lambert_w(k, xi)


@pytest.mark.parametrize("im,k", [(0.0, 0), (3 * math.pi, 1), (math.pi, 0), (-3 * math.pi, -2),
                                  (-math.pi, -1)])
def test_select_branch(im, k):
    assert select_branch(complex(1.0, im)) == k


@given(re=st.floats(-30, 200), im=st.floats(-60, 60))
@settings(max_examples=300, deadline=None)
def test_forward_map_round_trip(re, im):
    zeta = complex(re, im)
    z = inverse_map(zeta)
    # z + e^z evaluated without overflow via z + exp(z)
    back = z + np.exp(z) if z.real < 700 else None
    if back is not None:
        assert abs(back - zeta) < 1e-10 * max(1.0, abs(zeta))


def test_log_space_route_agrees_with_direct():
    for zeta in (5 + 0.3j, 12 - 2j, 19.5 + 1j):
        direct = lambert_w(select_branch(zeta), np.exp(zeta))
        assert abs(w_of_exp(zeta) - direct) < 1e-10 * abs(direct)


def test_analytic_eta_values():
    assert abs(analytic_eta(1e6) - 1 / math.pi) < 1e-5
    assert analytic_eta(20) == pytest.approx(math.pi * 401 / (20 * math.pi - 1) ** 2, rel=1e-15)
    assert analytic_eta(20) == pytest.approx(0.3295, abs=1e-4)
    with pytest.warns(AsymptoticValidityWarning):
        assert analytic_eta(1) == pytest.approx(2 * math.pi / (math.pi - 1) ** 2)
    with pytest.raises(ValueError):
        analytic_eta(0.3)


def test_analytic_eta_high_precision_oracle():
    with mpmath.workdps(50):
        a = mpmath.mpf(20)
        ref = mpmath.pi * (a**2 + 1) / (a * mpmath.pi - 1) ** 2
    assert analytic_eta(20) == pytest.approx(float(ref), rel=1e-14)


def test_validity_tag():
    assert asymptotic_valid(10) and not asymptotic_valid(9.99)


def test_rmax():
    g = TrapGeometry(a=40, d=2, w=2)
    assert analytic_rmax(g) == pytest.approx(20 * (1 - 1 / (20 * math.pi)))
    assert analytic_rmax(g) == pytest.approx(19.68, abs=0.01)
    big = TrapGeometry(a=1e6, d=1, w=1)
    assert analytic_rmax(big) / big.a == pytest.approx(0.5, rel=1e-5)


def test_depth():
    g = TrapGeometry(a=40, d=2, w=2)
    d = analytic_depth(g, DRIVE, ION)
    big = analytic_depth(TrapGeometry(a=1e7, d=1, w=1))
    assert big["scaled"] == pytest.approx(big["scaled_asymptotic"], rel=1e-6)
    assert big["scaled_literature"] == LITERATURE_SCALED_DEPTH == 2694
    assert abs(big["scaled_asymptotic"] - 2694) / 2694 < 0.05
    assert d["scaled"] / d["scaled_asymptotic"] == pytest.approx((1 - 1 / (20 * math.pi)) ** -2)
    d2 = analytic_depth(g, DriveConfig.from_mhz(2.0, 50), ION)
    assert d2["depth"] == pytest.approx(4 * d["depth"])
    assert d["depth"] == pytest.approx(d["scaled"] / g.a**2)


def test_depth_constants_oracle():
    # e^2 / (4 m Omega^2 pi^2 k_B) in K um^2 / V^2 with CODATA 2018 values
    # (the package uses whatever scipy ships, so allow for a constants update)
    e, kB, u = 1.602176634e-19, 1.380649e-23, 1.66053906660e-27
    m = 110.9041826 * u
    omega = 2 * math.pi * 50e6
    ref = e**2 / (4 * m * omega**2 * math.pi**2 * kB) * 1e12
    big = analytic_depth(TrapGeometry(a=1e7, d=1, w=1))
    assert big["scaled_asymptotic"] == pytest.approx(ref, rel=1e-7)


def test_potential_symmetries():
    g = TrapGeometry(a=40, d=2, w=2)
    assert analytic_potential(0j, g) == pytest.approx(0, abs=1e-14)
    for u in (-7.0, 3.0, 15.0):
        assert analytic_potential(complex(u, 0), g) == pytest.approx(0, abs=1e-12)
    w = complex(2.0, 1.5)
    v = analytic_potential(w, g)
    assert analytic_potential(-w, g) == pytest.approx(v, rel=1e-10)
    assert analytic_potential(w.conjugate(), g) == pytest.approx(-v, rel=1e-10)


def small_w(u, v, g, V0):
    return -4 * math.pi * V0 * u * v / (g.a * math.pi - g.d) ** 2


def test_small_w_quadratic_of_arctan_form():
    g = TrapGeometry(a=40, d=2, w=2)
    for u, v in ((0.01, 0.02), (-0.03, 0.01), (0.02, -0.02)):
        assert arctan_potential(u, v, g, 2.0) == pytest.approx(small_w(u, v, g, 2.0), rel=1e-4)


def test_exact_map_approaches_small_w_quadratic():
    # the quadratic is the large-alpha reduction; the exact map converges to it slowly
    ratios = []
    for a in (40, 200, 2000, 20000):
        g = TrapGeometry(a=a, d=2, w=2)
        u, v = 1e-5 * a, 2e-5 * a
        ratios.append(analytic_potential(complex(u, v), g, 2.0) / small_w(u, v, g, 2.0))
    assert all(r > 1 for r in ratios)
    assert ratios == sorted(ratios, reverse=True)
    assert ratios[-1] - 1 < 0.01


def test_potential_on_electrode_and_gating():
    g = TrapGeometry(a=40, d=2, w=2)
    with pytest.raises(OnElectrode):
        analytic_potential(complex(25.0, 1.0), g)
    with pytest.raises(GeometryError):
        analytic_potential(0.1j, TrapGeometry(a=6, d=2, w=2))
    with pytest.warns(AsymptoticValidityWarning):
        analytic_potential(0.1 + 0.1j, TrapGeometry(a=12, d=2, w=2))


def test_map_field_quadrupole_matches_closed_form_trend():
    etas = []
    for alpha in (10, 20, 40, 100):
        g = TrapGeometry.from_ratios(alpha, 1.0, d=2.0)
        exp = expand(map_field(g), g.a / 8)
        etas.append(eta(exp, g))
    assert etas == sorted(etas, reverse=True)
    assert etas[-1] > 1 / math.pi


def test_profile_consistency():
    g = TrapGeometry(a=40, d=2, w=2)
    drv = DriveConfig.from_mhz(10.0, 50)
    v = np.linspace(0, 0.999 * g.a / 2, 40001)
    v, psi = analytic_pseudopotential_profile(v, g, drv, ION)
    assert psi[0] == pytest.approx(0, abs=1e-20)
    arctan_peak = (g.a - g.d / math.pi) / 2
    assert v[np.argmax(psi)] == pytest.approx(analytic_rmax(g), rel=1e-3)
    assert v[np.argmax(psi)] == pytest.approx(arctan_peak, rel=1e-3)
    assert psi.max() == pytest.approx(analytic_depth(g, drv, ION)["depth"], rel=1e-3)
    with pytest.raises(GeometryError):
        analytic_pseudopotential_profile(v, TrapGeometry(a=6, d=2, w=2), drv, ION)


@given(u=st.floats(-8, 8), v=st.floats(-8, 8))
@settings(max_examples=100, deadline=None)
def test_pseudopotential_mirror_symmetry(u, v):
    g = TrapGeometry(a=40, d=2, w=2)
    p = analytic_pseudopotential(u, v, g, DRIVE, ION)
    for uu, vv in ((-u, v), (u, -v)):
        assert analytic_pseudopotential(uu, vv, g, DRIVE, ION) == pytest.approx(p, rel=1e-9, abs=1e-30)


def test_pseudopotential_minimum_at_origin():
    g = TrapGeometry(a=40, d=2, w=2)
    s = np.linspace(-5, 5, 201)
    px = analytic_pseudopotential(s, 0 * s, g, DRIVE, ION)
    py = analytic_pseudopotential(0 * s, s, g, DRIVE, ION)
    assert px[100] == py[100] == 0
    assert np.all(np.delete(px, 100) > 0) and np.all(np.delete(py, 100) > 0)


def test_arctan_form_matches_exact_map_near_centre():
    g = TrapGeometry(a=400, d=2, w=2)
    for u, v in ((1.0, 2.0), (-3.0, 5.0)):
        exact = analytic_potential(complex(u, v), g)
        assert arctan_potential(u, v, g) == pytest.approx(exact, rel=0.02)


def test_csv_streams(tmp_path):
    p = tmp_path / "eta.csv"
    write_eta_overlay([10, 20], p)
    lines = p.read_text().splitlines()
    assert lines[0] == "alpha,eta_analytic"
    assert lines[2] == f"20,{analytic_eta(20):.9g}"
    q = tmp_path / "psi.csv"
    write_profile([0.0, 1.0], [0.0, 2.5], q)
    assert q.read_text().splitlines() == ["v_um,psi_K", "0,0", "1,2.5"]
