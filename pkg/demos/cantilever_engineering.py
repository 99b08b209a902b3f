"""Mechanical and electrical side-estimates for GaAs cantilevers."""
import math

from iontrap import DriveConfig, IonSpecies, MaterialProps, TrapGeometry
from iontrap.engineering import engineering_report, resistivity_for_heating_rate

geom = TrapGeometry(a=40, d=2, w=2, b=100, h=100)
drive = DriveConfig.from_mhz(20, 50)
ion = IonSpecies.cd111()
omega_s = 2 * math.pi * 10e6

for name, mat in (("GaAs", MaterialProps.gaas()), ("Si", MaterialProps.silicon())):
    rep = engineering_report(geom, mat, drive, ion, 20, omega_s, resistivity=1e-5)
    print(name)
    print(rep.as_text())

rho = resistivity_for_heating_rate(10.0, ion, MaterialProps.gaas(), 20, omega_s, geom=geom)
print(f"resistivity for 10 quanta/s at 20 um: {rho:.3g} ohm m")
