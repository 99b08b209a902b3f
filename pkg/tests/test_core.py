import math

import pytest
from hypothesis import given, strategies as st

from iontrap.core import (CONSTANTS, BREAKDOWN_FIELD, DriveConfig, IonSpecies, MaterialProps,
                          TrapGeometry, derive_ratios)
from iontrap.errors import GeometryError

lengths = st.floats(min_value=0.1, max_value=1e4, allow_nan=False)


def test_ratios_row1():
    r = derive_ratios(TrapGeometry(a=40, d=10, w=10))
    assert r["alpha"] == 4
    assert r["delta"] == 1
    # printed value is rounded to 21
    assert r["l_eff"] == pytest.approx(math.hypot(20, 5))
    assert round(r["l_eff"]) == 21


def test_l_eff_square_cross_section():
    g = TrapGeometry(a=7, d=7, w=1)
    assert g.l_eff == pytest.approx(7 / math.sqrt(2))


def test_d_eff_direct_evaluation():
    g = TrapGeometry(a=40, d=2, w=2, b=100, g=2)
    assert g.d_eff == pytest.approx(math.sqrt(20.025**2 + 52**2), rel=1e-4)
    assert g.d_eff == pytest.approx(55.72, abs=0.01)


@pytest.mark.parametrize("name", ["a", "d", "w", "b", "c", "g", "h"])
@pytest.mark.parametrize("bad", [0.0, -1.0, math.inf, math.nan])
def test_geometry_rejects_nonpositive(name, bad):
    kw = dict(a=40, d=2, w=2)
    kw[name] = bad
    with pytest.raises(GeometryError):
        TrapGeometry(**kw)


@given(a=lengths, d=lengths, w=lengths, b=lengths, g=lengths, s=st.floats(0.01, 100))
def test_scale_covariance(a, d, w, b, g, s):
    geom = TrapGeometry(a=a, d=d, w=w, b=b, g=g)
    big = geom.scaled(s)
    assert big.alpha == pytest.approx(geom.alpha, rel=1e-12)
    assert big.delta == pytest.approx(geom.delta, rel=1e-12)
    assert big.l_eff == pytest.approx(s * geom.l_eff, rel=1e-12)
    assert big.d_eff == pytest.approx(s * geom.d_eff, rel=1e-12)


@given(a=lengths, d=lengths, w=lengths, b=lengths, g=lengths)
def test_l_eff_below_d_eff(a, d, w, b, g):
    geom = TrapGeometry(a=a, d=d, w=w, b=b, g=g)
    assert geom.l_eff < geom.d_eff


def test_from_ratios():
    g = TrapGeometry.from_ratios(20, 2, d=2)
    assert (g.a, g.d, g.w) == (40, 2, 1)


def test_drive_units():
    drv = DriveConfig.from_mhz(20, 50, U0=1)
    assert drv.OmegaT == pytest.approx(2 * math.pi * 50e6)
    assert drv.f_rf_mhz == pytest.approx(50)
    assert drv.center_offsets == (0.0, 0.0, 0.0, 0.0)


@pytest.mark.parametrize("kw", [dict(V0=-1, OmegaT=1.0), dict(V0=1, OmegaT=0.0),
                                dict(V0=1, OmegaT=1.0, center_offsets=(1, 2))])
def test_drive_validation(kw):
    with pytest.raises(ValueError):
        DriveConfig(**kw)


def test_ion_species():
    ion = IonSpecies.cd111()
    assert ion.mass_kg == pytest.approx(110.9041826 * 1.66053906660e-27, rel=1e-9)
    assert ion.charge_C == CONSTANTS.e
    with pytest.raises(ValueError):
        IonSpecies(mass=0)
    with pytest.raises(ValueError):
        IonSpecies(mass=1, charge=0)
    with pytest.raises(ValueError):
        IonSpecies(mass=1, charge=1.5)


def test_constants_are_codata_and_frozen():
    assert CONSTANTS.e == 1.602176634e-19
    assert CONSTANTS.k_B == 1.380649e-23
    with pytest.raises(AttributeError):
        CONSTANTS.e = 1.0


def test_material_presets():
    gaas = MaterialProps.gaas()
    assert gaas.youngs_modulus == 85.5e9 and gaas.density == 5310
    assert gaas.resistivity is None
    si = MaterialProps.silicon(resistivity=1e-5)
    assert si.youngs_modulus == 169e9 and si.resistivity == 1e-5
    assert BREAKDOWN_FIELD["SiN"] == 300e6
    with pytest.raises(ValueError):
        MaterialProps.gaas(resistivity=-1.0)
    with pytest.raises(ValueError):
        MaterialProps(youngs_modulus=1e9, density=0)
