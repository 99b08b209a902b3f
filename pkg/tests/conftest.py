import math

import pytest

from iontrap.core import DriveConfig, IonSpecies, TrapGeometry

CD111 = IonSpecies.cd111()


def table_rows():
    """Three worked designs: geometry, drive, geometric factors, printed lengths and frequencies (MHz)."""
    return [
        dict(geom=TrapGeometry(a=40, d=10, w=10, b=100), drive=DriveConfig.from_mhz(40, 50, U0=20),
             eta=0.7, epsilon=3.0, kappa=0.3, l_eff=21.0, d_eff=59.0,
             f=dict(p=20.0, x=13.0, y=23.0, z=8.7)),
        dict(geom=TrapGeometry(a=40, d=2, w=2, b=100), drive=DriveConfig.from_mhz(20, 50, U0=1),
             eta=0.43, epsilon=3.5, kappa=0.26, l_eff=20.0, d_eff=58.0,
             f=dict(p=6.7, x=5.8, y=7.3, z=1.8)),
        dict(geom=TrapGeometry(a=80, d=2, w=2, b=160), drive=DriveConfig.from_mhz(35, 50, U0=0.9),
             eta=0.38, epsilon=3.2, kappa=0.28, l_eff=40.0, d_eff=89.0,
             f=dict(p=2.6, x=1.5, y=3.2, z=1.2)),
    ]


def rel(a, b):
    return abs(a - b) / abs(b)


@pytest.fixture
def cd111():
    return CD111


@pytest.fixture
def row2_geom():
    return TrapGeometry(a=40, d=2, w=2, b=100)


def mhz(omega):
    return omega / (2 * math.pi * 1e6)


# --- acceptance reporting -------------------------------------------------

_ACCEPTANCE = []


def pytest_runtest_logreport(report):
    if report.when != "call" and not (report.when == "setup" and report.failed):
        return
    for name, value in report.user_properties:
        if name == "acceptance":
            number, title = value
            detail = dict(report.user_properties).get("detail", "")
            if report.failed and not detail:
                detail = report.longrepr.reprcrash.message if hasattr(report.longrepr, "reprcrash") else ""
            _ACCEPTANCE.append((number, title, "PASS" if report.passed else "FAIL", detail))


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number, title, verdict, detail in sorted(_ACCEPTANCE, key=lambda r: str(r[0]).zfill(3)):
        terminalreporter.write_line(f"{verdict}  {str(number):>3}  {title}: {detail}")


@pytest.fixture(autouse=True)
def _acceptance_tag(request):
    marker = request.node.get_closest_marker("acceptance")
    if marker is not None:
        request.node.user_properties.append(("acceptance", tuple(marker.args)))
