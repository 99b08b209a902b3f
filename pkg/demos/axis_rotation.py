"""Tilting the radial principal axes with one diagonal pair of centre electrodes.

The point-charge model gives the angle in closed form; the 3D solve (two
field solves, about a minute) gives it for the real electrode shapes.
"""
import math

import numpy as np

from iontrap import TrapGeometry
from iontrap.trapchar import point_charge_model, rotation_basis

print("point-charge model, q'/q = 0")
for alpha in (4 / 3, 2, 5, 20):
    pc = point_charge_model(TrapGeometry(a=3 * alpha, d=3, w=3), 0.0)
    print(f"  alpha {alpha:5.2f}: theta {math.degrees(pc['theta_pc']):6.2f} deg")

geom = TrapGeometry(a=40, d=2, w=2, b=100, c=100)
basis = rotation_basis(geom)
print("field solve, end-caps at 1 V, centre pair UL/LR at Vc")
for vc in np.linspace(-0.5, 0.5, 11):
    f = basis.factors(1.0, vc)
    print(f"  Vc {vc:+.2f} V: theta {math.degrees(basis.theta(1.0, vc)):+7.2f} deg, "
          f"epsilon {f['epsilon']:.3f}, lambda {f['lambda']:+.3f}")
