"""Secular frequencies, static factors and principal axes.

Frequencies are angular (rad/s) unless a name ends in ``_mhz``.  Lengths given
to the public functions are in µm, voltages in V.
"""
from __future__ import annotations

import csv
import io
import logging
import math
import warnings
from dataclasses import asdict, dataclass, field

import numpy as np

from .core import CONSTANTS, MHZ, UM, DriveConfig, IonSpecies, TrapGeometry
from .errors import (DegenerateRotation, NotAxiallyConfining, OutsideHarmonicRegion,
                     UnstableAxis)

log = logging.getLogger(__name__)

Q_ADIABATIC_LIMIT = 0.3


class AdiabaticityWarning(UserWarning):
    """The Mathieu q parameter exceeds the usual pseudopotential validity bound."""


def _omega(drive):
    return drive.OmegaT if isinstance(drive, DriveConfig) else float(drive)


def pseudopotential(gradV_sq, drive, ion):
    """Ponderomotive energy (J) for |grad V|^2 in V^2/m^2."""
    gradV_sq = np.asarray(gradV_sq, dtype=float)
    if np.any(gradV_sq < 0):
        raise ValueError("|grad V|^2 must be non-negative")
    out = ion.charge_C**2 * gradV_sq / (4 * ion.mass_kg * _omega(drive) ** 2)
    return float(out) if out.ndim == 0 else out


def secular_frequency_quadrupole(eta, geom: TrapGeometry, drive: DriveConfig, ion: IonSpecies,
                                 l_eff=None):
    """``(omega_p, q)`` of the quadrupole pseudopotential; ``l_eff`` (µm) overrides the geometry."""
    if eta < 0:
        raise ValueError(f"eta must be non-negative, got {eta!r}")
    ell = (geom.l_eff if l_eff is None else l_eff) * UM
    omega_p = ion.charge_C * drive.V0 * eta / (math.sqrt(2) * ion.mass_kg * drive.OmegaT * ell**2)
    q = 2 * math.sqrt(2) * omega_p / drive.OmegaT
    if q >= Q_ADIABATIC_LIMIT:
        warnings.warn(f"q = {q:.3f} >= {Q_ADIABATIC_LIMIT}: pseudopotential approximation is marginal",
                      AdiabaticityWarning, stacklevel=2)
    return omega_p, q


def static_characterization(D, geom: TrapGeometry, d_eff=None):
    """``{kappa, epsilon, epsilon_alt, consistent}`` from curvatures D (1/µm^2)."""
    D_x, D_y, D_z = D["D_x"], D["D_y"], D["D_z"]
    if not D_z > 0:
        raise NotAxiallyConfining(f"D_z = {D_z:.4g} 1/µm^2: the end-caps do not confine along z")
    deff = geom.d_eff if d_eff is None else d_eff
    eps = -D_x / D_z
    eps_alt = 1 + D_y / D_z
    consistent = abs(eps - eps_alt) < 0.05 * abs(eps)
    if not consistent:
        log.warning("epsilon routes disagree: -D_x/D_z = %.4g, 1 + D_y/D_z = %.4g", eps, eps_alt)
    return {"kappa": D_z * deff**2 / 2, "epsilon": eps, "epsilon_alt": eps_alt,
            "consistent": consistent}


def axial_frequency(kappa, geom: TrapGeometry, drive: DriveConfig, ion: IonSpecies, d_eff=None):
    """Static axial frequency (rad/s)."""
    if kappa <= 0:
        raise NotAxiallyConfining(f"kappa = {kappa!r} must be positive")
    if drive.U0 < 0:
        raise ValueError("U0 must be non-negative")
    deff = (geom.d_eff if d_eff is None else d_eff) * UM
    return math.sqrt(2 * kappa * ion.charge_C * drive.U0 / (ion.mass_kg * deff**2))


def net_frequencies(omega_p, omega_z, epsilon, sigma_z=None):
    """Quadrature sums of RF and static contributions (rad/s).

    With ``sigma_z`` the residual axial RF confinement is added to omega_z.
    """
    rx = omega_p**2 - epsilon * omega_z**2
    ry = omega_p**2 - (1 - epsilon) * omega_z**2
    if rx <= 0:
        raise UnstableAxis("x", rx)
    if ry <= 0:
        raise UnstableAxis("y", ry)
    wz2 = omega_z**2 + (sigma_z * omega_p**2 if sigma_z else 0.0)
    return {"omega_x": math.sqrt(rx), "omega_y": math.sqrt(ry), "omega_z": math.sqrt(wz2)}


def principal_axis_angle(epsilon, lam):
    """Rotation (rad) about z that removes the xy cross term; ``½ atan2(λ, 2ε−1)``."""
    if lam == 0 and epsilon == 0.5:
        raise DegenerateRotation("circularly symmetric static potential: principal axes undefined")
    return 0.5 * math.atan2(lam, 2 * epsilon - 1)


def rotated_anisotropy(epsilon, lam, theta):
    """Anisotropy factor along the rotated axes."""
    return epsilon * math.cos(2 * theta) + lam / 2 * math.sin(2 * theta) + math.sin(theta) ** 2


def quadratic_form(epsilon, lam, x, y, z):
    """``−εx² − (1−ε)y² + λxy + z²``."""
    return -epsilon * x * x - (1 - epsilon) * y * y + lam * x * y + z * z


def point_charge_model(geom: TrapGeometry, q_ratio):
    """Twelve point charges at the electrode corners (``b >> a, d``) with one diagonal
    pair of the four centre-plane charges changed from ``-q`` to ``-q'``."""
    if not q_ratio > -1:
        raise ValueError("q'/q must exceed -1")
    a, d = geom.a, geom.d
    eps = (2 * a * a - d * d) / (a * a + d * d)
    lam = 6 * (1 - q_ratio) / (1 + q_ratio) * a * d / (a * a + d * d)
    theta = 0.0 if lam == 0 else principal_axis_angle(eps, lam)
    return {"epsilon_pc": eps, "lambda_pc": lam, "theta_pc": theta}


def point_charge_tan2theta(alpha, q_ratio):
    """Closed form ``((1−r)/(1+r))·2α/(α²−1)``; infinite at α = 1."""
    r = q_ratio
    den = alpha * alpha - 1
    num = (1 - r) / (1 + r) * 2 * alpha
    return math.copysign(math.inf, num) if den == 0 else num / den


@dataclass
class TrapCharacterization:
    """Everything derived for one (geometry, drive, ion)."""

    geometry: TrapGeometry
    drive: DriveConfig
    ion: IonSpecies
    eta: float
    epsilon: float
    kappa: float
    l_eff: float
    d_eff: float
    omega_p: float
    omega_x: float
    omega_y: float
    omega_z: float
    q: float
    sigma_z: float | None = None
    r_max: float | None = None
    depth: float | None = None
    lam: float = 0.0
    theta_principal: float = 0.0
    epsilon_prime: float | None = None
    errors: dict = field(default_factory=dict)
    sources: dict = field(default_factory=dict)
    # Richardson output of the static solve, when one was run
    static_solution: dict | None = field(default=None, repr=False)

    def f_mhz(self, name):
        return getattr(self, name) / (2 * math.pi * MHZ)

    def table_row(self):
        g, dr = self.geometry, self.drive
        return {
            "a": g.a, "d": g.d, "w": g.w, "b": g.b, "alpha": g.alpha, "delta": g.delta,
            "l_eff": self.l_eff, "d_eff": self.d_eff, "eta": self.eta, "epsilon": self.epsilon,
            "kappa": self.kappa, "V0": dr.V0, "U0": dr.U0,
            "f_p_MHz": self.f_mhz("omega_p"), "f_x_MHz": self.f_mhz("omega_x"),
            "f_y_MHz": self.f_mhz("omega_y"), "f_z_MHz": self.f_mhz("omega_z"), "q": self.q,
        }

    def as_dict(self):
        out = asdict(self)
        for key in ("geometry", "drive", "ion"):
            out[key] = asdict(getattr(self, key))
        return out


def characterize_from_factors(geom, drive, ion, eta, epsilon, kappa, *, lam=0.0, l_eff=None,
                              d_eff=None, sigma_z=None, include_sigma_z=False, r_max=None,
                              depth=None, errors=None, sources=None, static_solution=None):
    """Frequencies and axes from given η, ε, κ (and optionally λ, σ_z)."""
    ell = geom.l_eff if l_eff is None else l_eff
    deff = geom.d_eff if d_eff is None else d_eff
    omega_p, q = secular_frequency_quadrupole(eta, geom, drive, ion, l_eff=ell)
    omega_z = axial_frequency(kappa, geom, drive, ion, d_eff=deff) if drive.U0 > 0 else 0.0
    if lam == 0:
        theta, eps_p = 0.0, epsilon
    else:
        theta = principal_axis_angle(epsilon, lam)
        eps_p = rotated_anisotropy(epsilon, lam, theta)
    freqs = net_frequencies(omega_p, omega_z, eps_p, sigma_z if include_sigma_z else None)
    return TrapCharacterization(
        geometry=geom, drive=drive, ion=ion, eta=eta, epsilon=epsilon, kappa=kappa,
        l_eff=ell, d_eff=deff, omega_p=omega_p, q=q, sigma_z=sigma_z, r_max=r_max, depth=depth,
        lam=lam, theta_principal=theta, epsilon_prime=eps_p, errors=dict(errors or {}),
        sources=dict(sources or {}), static_solution=static_solution, **freqs)


def net_potential(x, y, z, char: TrapCharacterization, include_sigma_z=True, check_region=True):
    """Total potential energy (J) at (x, y, z) in µm in the harmonic approximation."""
    g = char.geometry
    x, y, z = (np.asarray(v, dtype=float) for v in (x, y, z))
    if check_region and (np.any(np.abs(x) > g.a / 8) or np.any(np.abs(y) > g.a / 8)
                         or np.any(np.abs(z) > g.b / 4)):
        raise OutsideHarmonicRegion("net_potential is only valid for |x|,|y| <= a/8 and |z| <= b/4")
    m, e = char.ion.mass_kg, char.ion.charge_C
    xs, ys, zs = x * UM, y * UM, z * UM
    sig = char.sigma_z if (include_sigma_z and char.sigma_z) else 0.0
    rf = 0.5 * m * char.omega_p**2 * (xs**2 + ys**2 + sig * zs**2)
    k = e * char.kappa * char.drive.U0 / (char.d_eff * UM) ** 2
    static = k * quadratic_form(char.epsilon, char.lam, xs, ys, zs)
    out = rf + static
    return float(out) if out.ndim == 0 else out


# --- solver pipeline -------------------------------------------------------

def eta_from_solve(geom, drive=None, spec=None, r0=None):
    """η, depth and r_max from a 2D RF solve (``spec``: laplace2d.GridSpec)."""
    from .laplace2d import GridSpec, solve_rf_2d
    from .multipole import eta as eta_of, expand, trap_depth_and_rmax

    drive = drive or DriveConfig(V0=1.0, OmegaT=1.0)
    field_ = solve_rf_2d(geom, DriveConfig(V0=1.0, OmegaT=drive.OmegaT), spec or GridSpec())
    exp = expand(field_, geom.a / 8 if r0 is None else r0)
    out = {"eta": eta_of(exp, geom), "field": field_}
    try:
        out.update(trap_depth_and_rmax(field_, geom, V0=1.0))
    except Exception as exc:  # depth is optional in the pipeline
        log.warning("depth/r_max unavailable: %s", exc)
    return out


def static_from_solve(geom, drive, spec=None, refine_levels=(1.0, 2.0)):
    """Richardson-extrapolated D coefficients (and error bars) from 3D static solves."""
    from .laplace3d import GridSpec3D, richardson_hessian, static_voltages

    U0 = drive.U0 if drive.U0 > 0 else 1.0
    volts = static_voltages(DriveConfig(drive.V0, drive.OmegaT, U0, drive.center_offsets))
    return richardson_hessian(geom, volts, U0, spec or GridSpec3D(), refine_levels)


def characterize(geom, drive, ion, *, eta=None, epsilon=None, kappa=None, sigma_z=None,
                 l_eff=None, d_eff=None, include_sigma_z=False, grid2d=None, grid3d=None,
                 refine_levels=(1.0, 2.0)):
    """Full characterisation; any of η, ε, κ not given is computed from field solves."""
    sources, errors = {}, {}
    r_max = depth = None
    lam = 0.0
    st = None
    if eta is None:
        res = eta_from_solve(geom, drive, grid2d)
        eta = res["eta"]
        sources["eta"] = "2d-solve"
        r_max = res.get("r_max")
        if "scaled_depth" in res:
            ref = res["scaled_depth"]
            depth = _depth_for(ref, geom, drive, ion)
    else:
        sources["eta"] = "given"
    if epsilon is None or kappa is None:
        st = static_from_solve(geom, drive, grid3d, refine_levels)
        D = st["D"]
        fac = static_characterization(D, geom, d_eff)
        deff = geom.d_eff if d_eff is None else d_eff
        if epsilon is None:
            epsilon = fac["epsilon"]
            sources["epsilon"] = "3d-solve"
            errors["epsilon"] = _ratio_error(D, st["D_err"])
        if kappa is None:
            kappa = fac["kappa"]
            sources["kappa"] = "3d-solve"
            errors["kappa"] = st["D_err"]["D_z"] * deff**2 / 2
        lam = 2 * D.get("D_xy", 0.0) / D["D_z"]
        if abs(lam) < 1e-9:
            lam = 0.0
    sources.setdefault("epsilon", "given")
    sources.setdefault("kappa", "given")
    return characterize_from_factors(geom, drive, ion, eta, epsilon, kappa, lam=lam, l_eff=l_eff,
                                     d_eff=d_eff, sigma_z=sigma_z, include_sigma_z=include_sigma_z,
                                     r_max=r_max, depth=depth, errors=errors, sources=sources,
                                     static_solution=st)


def _ratio_error(D, err):
    eps = -D["D_x"] / D["D_z"]
    return abs(eps) * math.hypot(err["D_x"] / D["D_x"] if D["D_x"] else 0.0, err["D_z"] / D["D_z"])


def _depth_for(scaled, geom, drive, ion):
    """Rescale a 111Cd+/50 MHz scaled depth (K µm^2/V^2) to the given drive and ion."""
    from .core import REFERENCE_ION, REFERENCE_OMEGA

    factor = (ion.charge_C**2 / ion.mass_kg / drive.OmegaT**2) / (
        REFERENCE_ION.charge_C**2 / REFERENCE_ION.mass_kg / REFERENCE_OMEGA**2)
    return scaled * drive.V0**2 / geom.a**2 * factor


# --- axis rotation ---------------------------------------------------------

@dataclass(frozen=True)
class RotationBasis:
    """Curvatures at the origin of the unit end-cap field and the unit diagonal-centre field.

    By linearity the static field for end-caps at U0 and the centre pair at Vc is
    ``U0 * endcaps + Vc * centers``; ``H_*`` are 2x2 xy Hessians (V/µm^2 per V)
    and ``Dz_*`` the zz curvatures.
    """

    geometry: TrapGeometry
    pair: tuple
    H_endcaps: np.ndarray
    H_centers: np.ndarray
    Dz_endcaps: float
    Dz_centers: float

    def hessian(self, U0, Vc):
        return U0 * self.H_endcaps + Vc * self.H_centers

    def theta(self, U0, Vc):
        H = self.hessian(U0, Vc)
        return 0.5 * math.atan2(2 * H[0, 1], H[1, 1] - H[0, 0])

    def factors(self, U0, Vc, d_eff=None):
        """``{kappa, epsilon, lambda}`` of the combined field (normalised by U0)."""
        H = self.hessian(U0, Vc)
        Dz = (U0 * self.Dz_endcaps + Vc * self.Dz_centers) / U0
        if not Dz > 0:
            raise NotAxiallyConfining("combined static field does not confine along z")
        deff = self.geometry.d_eff if d_eff is None else d_eff
        return {"kappa": Dz * deff**2 / 2, "epsilon": -H[0, 0] / U0 / Dz,
                "lambda": 2 * H[0, 1] / U0 / Dz}


def rotation_basis(geom, pair=("UL-C", "LR-C"), spec=None):
    """Two 3D solves give the xy Hessian for any (U0, Vc) combination."""
    from .laplace3d import (GridSpec3D, END_CAPS, ELECTRODE_NAMES, axis_curvature,
                            build_layout_3d, default_fit_window, plane_hessian, solve_laplace_3d,
                            _check_window)

    spec = spec or GridSpec3D()
    window = default_fit_window(geom)
    out = []
    for live in (END_CAPS, pair):
        volts = {n: (1.0 if n in live else 0.0) for n in ELECTRODE_NAMES}
        fld = solve_laplace_3d(build_layout_3d(geom, volts, spec), spec)
        _check_window(fld, (0, 1, 2), window)
        out.append((plane_hessian(fld, (0, 1), window), axis_curvature(fld, 2, window)))
    return RotationBasis(geometry=geom, pair=tuple(pair), H_endcaps=out[0][0], H_centers=out[1][0],
                         Dz_endcaps=float(out[0][1]), Dz_centers=float(out[1][1]))


def numerical_axis_rotation(geom, end_cap_U0, center_voltage, spec=None, basis=None):
    """Principal-axis angle (rad) for end-caps at U0 and the diagonal centre pair at Vc."""
    basis = basis or rotation_basis(geom, spec=spec)
    return basis.theta(end_cap_U0, center_voltage)


# --- reports ---------------------------------------------------------------

TABLE_COLUMNS = ("a", "d", "w", "b", "alpha", "delta", "l_eff", "d_eff", "eta", "epsilon",
                 "kappa", "V0", "U0", "f_p_MHz", "f_x_MHz", "f_y_MHz", "f_z_MHz", "q")


def table1_report(chars, fmt="text"):
    """Aligned text or CSV rendering of characterisations."""
    rows = [c.table_row() for c in chars]
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(TABLE_COLUMNS)
        for r in rows:
            writer.writerow([f"{r[k]:.9g}" for k in TABLE_COLUMNS])
        return buf.getvalue()
    cells = [[f"{r[k]:.4g}" for k in TABLE_COLUMNS] for r in rows]
    widths = [max(len(h), *(len(c[i]) for c in cells)) for i, h in enumerate(TABLE_COLUMNS)]
    lines = ["  ".join(h.rjust(w) for h, w in zip(TABLE_COLUMNS, widths))]
    lines += ["  ".join(c.rjust(w) for c, w in zip(row, widths)) for row in cells]
    return "\n".join(lines) + "\n"
