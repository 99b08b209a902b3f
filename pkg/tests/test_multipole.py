import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from iontrap.core import DriveConfig, TrapGeometry
from iontrap.errors import RadiusTouchesElectrode
from iontrap.laplace2d import solve_rf_2d
from iontrap.multipole import (FRAME_ANGLE, anharmonicity_ratios, anharmonicity_report,
                               coefficient_curve, eta, expand, trap_depth_and_rmax)

DRIVE = DriveConfig.from_mhz(1.0, 50)


def rotated(x, y):
    """Coordinates in the expansion frame."""
    c, s = math.cos(FRAME_ANGLE), math.sin(FRAME_ANGLE)
    return c * x + s * y, -s * x + c * y


@pytest.fixture(scope="module")
def fields():
    out = {}
    for alpha in (4, 20, 40):
        g = TrapGeometry.from_ratios(alpha, 1.0, d=2.0)
        out[alpha] = (g, solve_rf_2d(g, DRIVE))
    return out


def test_pure_quadrupole_fixture():
    r0, V0 = 3.0, 2.0

    def V(x, y):
        xp, yp = rotated(x, y)
        return V0 * (xp**2 - yp**2) / (2 * r0**2)

    exp = expand(V, r0, V0=V0)
    assert exp.c(2) == pytest.approx(0.5, abs=1e-12)
    others = np.concatenate([np.delete(exp.C, 1), exp.S])
    assert np.abs(others).max() < 1e-12


@given(m=st.integers(1, 12), kind=st.sampled_from(["cos", "sin"]), amp=st.floats(-5, 5).filter(lambda v: abs(v) > 1e-3))
@settings(max_examples=40, deadline=None)
def test_basis_is_one_hot(m, kind, amp):
    r0 = 1.7

    def V(x, y):
        xp, yp = rotated(x, y)
        r, t = np.hypot(xp, yp) / r0, np.arctan2(yp, xp)
        return amp * r**m * (np.cos(m * t) if kind == "cos" else np.sin(m * t))

    exp = expand(V, r0)
    target = exp.C if kind == "cos" else exp.S
    assert target[m - 1] == pytest.approx(amp, abs=1e-10)
    rest = np.concatenate([np.delete(target, m - 1), exp.S if kind == "cos" else exp.C])
    assert np.abs(rest).max() < 1e-10


def test_reconstruction_round_trip():
    rng = np.random.default_rng(3)
    C, S = rng.normal(size=12), rng.normal(size=12)
    from iontrap.multipole import MultipoleExpansion
    src = MultipoleExpansion(r0=2.0, C=C, S=S, V0=1.0)
    exp = expand(src.evaluate, 2.0)
    np.testing.assert_allclose(exp.C, C, atol=1e-10)
    np.testing.assert_allclose(exp.S, S, atol=1e-10)


def test_eta_of_hyperbolic_electrodes_is_one():
    g = TrapGeometry(a=40, d=2, w=2)
    R0 = g.l_eff

    def V(x, y):
        xp, yp = rotated(x, y)
        return 0.5 * (xp**2 - yp**2) / R0**2

    assert eta(expand(V, g.a / 8), g) == pytest.approx(1.0, rel=1e-12)


def test_parseval_bound(fields):
    g, f = fields[20]
    r0 = g.a / 8
    exp = expand(f, r0)
    # disc mean of V^2 bounds the energy in the projected components
    energy = sum((exp.C[m - 1] ** 2 + exp.S[m - 1] ** 2) / (2 * (m + 1)) for m in range(1, 13))
    r = np.linspace(0, r0, 200)[1:]
    t = np.linspace(0, 2 * np.pi, 256, endpoint=False)
    R, T = np.meshgrid(r, t, indexing="ij")
    v = f.sample(R * np.cos(T), R * np.sin(T))
    mean_sq = np.sum(v**2 * R) / np.sum(R)
    assert energy <= mean_sq * (1 + 1e-3)


@pytest.mark.parametrize("alpha", [4, 20, 40])
def test_symmetry_suppression(fields, alpha):
    g, f = fields[alpha]
    exp = expand(f, g.a / 8)
    c2 = abs(exp.c(2))
    for m in range(1, 13):
        if m % 4 != 2:
            assert abs(exp.c(m)) / c2 < 1e-3, f"C{m}"
        if m % 4 != 0:
            assert abs(exp.s(m)) / c2 < 1e-3, f"S{m}"


@pytest.mark.parametrize("alpha,expected,tol", [(4, 0.7, 0.1), (20, 0.43, 0.05), (40, 0.38, 0.05)])
def test_eta_values(fields, alpha, expected, tol):
    g, f = fields[alpha]
    assert eta(expand(f, g.a / 8), g) == pytest.approx(expected, abs=tol)


def test_eta_independent_of_radius(fields):
    g, f = fields[20]
    e8, e10 = eta(expand(f, g.a / 8), g), eta(expand(f, g.a / 10), g)
    assert abs(e8 - e10) / e8 < 0.02


def test_anharmonicity_bands_and_growth(fields):
    g, f = fields[20]
    fixed = anharmonicity_report(f, g, "fixed")
    worst = anharmonicity_report(f, g, "rmax")
    assert 0.005 < abs(fixed["S4"]) < 0.08
    assert abs(fixed["C6"]) < abs(fixed["S4"])
    assert worst["r0"] > fixed["r0"]
    for k in ("S4", "C6", "S8"):
        assert abs(worst[k]) > abs(fixed[k])
    # terms above sixth order are tiny at a/8
    assert all(abs(fixed[k]) < 1e-3 for k in ("S8", "C10", "S12"))


def test_ratios_vanish_at_small_radius(fields):
    g, f = fields[20]
    curve = coefficient_curve(f, [0.5, 1.0, 2.0, 4.0])
    s4 = [abs(c["S4"]) for c in curve]
    assert s4 == sorted(s4) and s4[0] < 0.01


def test_radius_touching_electrode(fields):
    g, f = fields[20]
    with pytest.raises(RadiusTouchesElectrode):
        expand(f, g.a / 2 + 1)


def test_depth_and_rmax(fields):
    g, f = fields[40]
    out = trap_depth_and_rmax(f, g)
    # scaled depth near 2400 K um^2/V^2 at large alpha
    assert out["scaled_depth"] == pytest.approx(2400, rel=0.15)
    assert out["r_max"] <= g.a / 2
    from iontrap.core import IonSpecies
    drv = DriveConfig.from_mhz(10.0, 50)
    with_ion = trap_depth_and_rmax(f, g, drv, IonSpecies.cd111(), V0=1.0)
    assert with_ion["depth"] == pytest.approx(out["scaled_depth"] * 100 / g.a**2, rel=1e-9)


def test_anharmonicity_ratio_keys():
    from iontrap.multipole import MultipoleExpansion
    exp = MultipoleExpansion(r0=1, C=np.arange(1, 13.0), S=np.arange(1, 13.0))
    assert list(anharmonicity_ratios(exp)) == ["S4", "C6", "S8", "C10", "S12"]
