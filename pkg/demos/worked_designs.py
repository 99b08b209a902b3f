"""Secular frequencies of three worked trap designs.

First from given geometric factors, then with eta from a 2D solve of each
design.  Pass --full to also solve the 3D static problem for epsilon and kappa
(several minutes).
"""
import sys
import warnings

from iontrap import DriveConfig, IonSpecies, TrapGeometry
from iontrap.trapchar import AdiabaticityWarning, characterize, table1_report

warnings.simplefilter("ignore", AdiabaticityWarning)

ion = IonSpecies.cd111()
designs = [
    # geometry, drive, (eta, epsilon, kappa), (l_eff, d_eff)
    (TrapGeometry(a=40, d=10, w=10, b=100), DriveConfig.from_mhz(40, 50, U0=20), (0.7, 3.0, 0.3), (21, 59)),
    (TrapGeometry(a=40, d=2, w=2, b=100), DriveConfig.from_mhz(20, 50, U0=1), (0.43, 3.5, 0.26), (20, 58)),
    (TrapGeometry(a=80, d=2, w=2, b=160), DriveConfig.from_mhz(35, 50, U0=0.9), (0.38, 3.2, 0.28), (40, 89)),
]

given = [characterize(g, drv, ion, eta=f[0], epsilon=f[1], kappa=f[2], l_eff=l[0], d_eff=l[1])
         for g, drv, f, l in designs]
print("given factors")
print(table1_report(given))

solved_eta = [characterize(g, drv, ion, epsilon=f[1], kappa=f[2]) for g, drv, f, _ in designs]
print("eta from 2D solves, epsilon and kappa given")
print(table1_report(solved_eta))

if "--full" in sys.argv:
    full = [characterize(g, drv, ion) for g, drv, _, _ in designs]
    print("all factors from field solves")
    print(table1_report(full))
