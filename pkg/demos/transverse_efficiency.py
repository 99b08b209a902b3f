"""Quadrupole efficiency, anharmonicity and depth against aspect ratio.

Numerical eta for thick (delta = 1) and thin electrodes next to the closed-form
thin-electrode result, which tends to 1/pi at large alpha.
"""
import math
import warnings

from iontrap import DriveConfig, TrapGeometry
from iontrap.analytic import analytic_depth, analytic_eta
from iontrap.errors import AsymptoticValidityWarning
from iontrap.laplace2d import GridSpec, solve_rf_2d
from iontrap.multipole import anharmonicity_ratios, eta, expand, trap_depth_and_rmax

warnings.simplefilter("ignore", AsymptoticValidityWarning)

unit = DriveConfig.from_mhz(1.0, 50)
print(f"{'alpha':>6} {'eta':>7} {'eta_thin':>8} {'closed':>7} {'S4/C2':>7} {'depth':>6} {'closed':>6}")
for alpha in (2, 4, 10, 20, 40):
    g = TrapGeometry(a=2.0 * alpha, d=2.0, w=2.0)
    thick = solve_rf_2d(g, unit)
    thin = solve_rf_2d(g, unit, GridSpec(thin=True))
    exp = expand(thick, g.a / 8)
    depth = trap_depth_and_rmax(thick, g, V0=1.0)["scaled_depth"]
    print(f"{alpha:6d} {eta(exp, g):7.4f} {eta(expand(thin, g.a / 8), g):8.4f} {analytic_eta(alpha):7.4f} "
          f"{anharmonicity_ratios(exp)['S4']:7.4f} {depth:6.0f} {analytic_depth(g)['scaled']:6.0f}")
print(f"1/pi = {1 / math.pi:.4f}; scaled depths in K um^2/V^2 for 111Cd+ at 50 MHz")
