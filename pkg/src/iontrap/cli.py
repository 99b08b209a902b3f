"""``iontrap`` command line: design files in, reports and CSV out.

Exit codes: 0 success, 1 usage or design-file error, 2 numerical failure.
"""
from __future__ import annotations

import argparse
import configparser
import csv
import io
import logging
import math
import os
import re
import sys
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

import numpy as np

from . import __version__
from .core import BREAKDOWN_FIELD, CONSTANTS, MHZ, UM, DriveConfig, IonSpecies, MaterialProps, TrapGeometry
from .errors import AsymptoticValidityWarning, DesignFileError, GeometryError, IonTrapError

log = logging.getLogger("iontrap")

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2
COMMANDS = ("solve2d", "solve3d", "analytic", "characterize", "sweep", "engineering")
SWEEP_KINDS = ("transverse", "coefficients", "static", "sigma_z", "axial_profile", "rotation")


# --- design file -------------------------------------------------------------

@dataclass(frozen=True)
class SolverSettings:
    box: float = 2.0
    box3d: float = 32.0
    growth: float = 0.12
    growth3d: float = 0.4
    refine: float = 1.0
    tol: float = 1e-8
    max_iters: int = 1_000_000
    method: str = "auto"
    thin: bool = False
    drive_mode: str = "balanced"
    r0_um: float | None = None
    richardson: bool = True


@dataclass(frozen=True)
class Overrides:
    eta: float | None = None
    epsilon: float | None = None
    kappa: float | None = None
    sigma_z: float | None = None
    l_eff: float | None = None
    d_eff: float | None = None
    include_sigma_z: bool = False


@dataclass(frozen=True)
class SweepSpec:
    kind: str = "transverse"
    parameter: str = "alpha"
    start: float | None = None
    stop: float | None = None
    steps: int | None = None
    values: tuple | None = None
    spacing: str = "linear"
    endcap_mode: str = "fixed"

    def points(self):
        if self.values is not None:
            pts = list(self.values)
        else:
            if self.start is None or self.stop is None or self.steps is None:
                raise DesignFileError("[sweep] needs either values or start, stop and steps")
            if self.steps < 1:
                raise DesignFileError("[sweep] steps must be at least 1")
            if self.spacing == "log":
                if self.start <= 0 or self.stop <= 0:
                    raise DesignFileError("[sweep] log spacing needs positive start and stop")
                pts = np.geomspace(self.start, self.stop, self.steps).tolist()
            else:
                pts = np.linspace(self.start, self.stop, self.steps).tolist()
        if not pts:
            raise DesignFileError("[sweep] range is empty")
        return pts


@dataclass(frozen=True)
class Heating:
    ion_distance_um: float | None = None
    f_secular_mhz: float | None = None
    target_rate: float = 10.0


@dataclass(frozen=True)
class Design:
    geometry: TrapGeometry
    drive: DriveConfig
    ion: IonSpecies
    material: MaterialProps | None
    heating: Heating
    solver: SolverSettings
    overrides: Overrides
    sweep: SweepSpec | None


MATERIAL_PRESETS = {
    "gaas": {"youngs_modulus": 85.5e9, "density": 5310.0, "breakdown_field": BREAKDOWN_FIELD["GaAs"]},
    "silicon": {"youngs_modulus": 169e9, "density": 2330.0, "breakdown_field": BREAKDOWN_FIELD["Si"]},
    "none": {},
}

_FLOAT, _INT, _BOOL, _STR, _OPT_FLOAT, _FLOATS = "float", "int", "bool", "str", "opt_float", "floats"

SCHEMA = {
    "geometry": {"a": _FLOAT, "d": _FLOAT, "w": _FLOAT, "b": _FLOAT, "c": _FLOAT, "g": _FLOAT,
                 "h": _FLOAT},
    "drive": {"V0": _FLOAT, "f_rf_mhz": _FLOAT, "OmegaT": _FLOAT, "U0": _FLOAT,
              "center_offsets": _FLOATS},
    "ion": {"mass_amu": _FLOAT, "charge": _INT},
    "material": {"preset": _STR, "youngs_modulus": _FLOAT, "density": _FLOAT,
                 "resistivity": _OPT_FLOAT, "loss_tangent": _FLOAT, "series_resistance": _FLOAT,
                 "capacitance": _FLOAT, "temperature": _FLOAT, "breakdown_field": _FLOAT,
                 "ion_distance_um": _OPT_FLOAT, "f_secular_mhz": _OPT_FLOAT,
                 "target_rate": _FLOAT},
    "solver": {"box": _FLOAT, "box3d": _FLOAT, "growth": _FLOAT, "growth3d": _FLOAT,
               "refine": _FLOAT, "tol": _FLOAT, "max_iters": _INT, "method": _STR,
               "thin": _BOOL, "drive_mode": _STR, "r0_um": _OPT_FLOAT, "richardson": _BOOL},
    "overrides": {"eta": _OPT_FLOAT, "epsilon": _OPT_FLOAT, "kappa": _OPT_FLOAT,
                  "sigma_z": _OPT_FLOAT, "l_eff": _OPT_FLOAT, "d_eff": _OPT_FLOAT,
                  "include_sigma_z": _BOOL},
    "sweep": {"kind": _STR, "parameter": _STR, "start": _OPT_FLOAT, "stop": _OPT_FLOAT,
              "steps": _INT, "values": _FLOATS, "spacing": _STR, "endcap_mode": _STR},
}
REQUIRED = {"geometry": ("a", "d", "w"), "drive": ("V0",)}
CHOICES = {("solver", "method"): ("auto", "sor", "amg", "direct"),
           ("solver", "drive_mode"): ("balanced", "single_ended"),
           ("material", "preset"): ("gaas", "silicon", "none"),
           ("sweep", "kind"): SWEEP_KINDS,
           ("sweep", "spacing"): ("linear", "log"),
           ("sweep", "endcap_mode"): ("fixed", "scaled")}


def _locate(lines, section, key=None):
    """1-based line number of a section header or of a key inside it."""
    current = None
    for n, raw in enumerate(lines, 1):
        text = raw.strip()
        m = re.match(r"\[([^\]]+)\]", text)
        if m:
            current = m.group(1).strip()
            if key is None and current == section:
                return n
            continue
        if key is not None and current == section and re.match(rf"{re.escape(key)}\s*[=:]", text):
            return n
    return None


def _convert(kind, raw, section, key, lines):
    where = _locate(lines, section, key)
    text = raw.strip()
    try:
        if kind in (_FLOAT, _OPT_FLOAT):
            if kind == _OPT_FLOAT and text.lower() in ("", "none"):
                return None
            value = float(text)
            if not math.isfinite(value):
                raise ValueError
            return value
        if kind == _INT:
            return int(text)
        if kind == _BOOL:
            low = text.lower()
            if low in ("true", "yes", "on", "1"):
                return True
            if low in ("false", "no", "off", "0"):
                return False
            raise ValueError
        if kind == _FLOATS:
            return tuple(float(v) for v in text.replace(";", ",").split(",") if v.strip())
        return text
    except ValueError:
        col = len(lines[where - 1]) - len(lines[where - 1].lstrip()) + 1 if where else None
        raise DesignFileError(f"[{section}] {key}: cannot read {raw!r} as {kind}", where, col) from None


def parse_design_text(text: str) -> Design:
    lines = text.splitlines()
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    parser.optionxform = str  # keys are case-sensitive (V0, U0)
    try:
        parser.read_string(text)
    except configparser.MissingSectionHeaderError as exc:
        raise DesignFileError("key outside of any [section]", exc.lineno) from None
    except configparser.DuplicateSectionError as exc:
        raise DesignFileError(f"duplicate section [{exc.section}]", exc.lineno) from None
    except configparser.DuplicateOptionError as exc:
        raise DesignFileError(f"duplicate key {exc.option!r} in [{exc.section}]", exc.lineno) from None
    except configparser.ParsingError as exc:
        line = exc.errors[0][0] if exc.errors else None
        raise DesignFileError("malformed line", line) from None

    values = {}
    for section in parser.sections():
        if section not in SCHEMA:
            raise DesignFileError(f"unknown section [{section}]", _locate(lines, section), 1)
        values[section] = {}
        for key, raw in parser.items(section):
            if key not in SCHEMA[section]:
                raise DesignFileError(f"unknown key {key!r} in [{section}]",
                                      _locate(lines, section, key), 1)
            value = _convert(SCHEMA[section][key], raw, section, key, lines)
            allowed = CHOICES.get((section, key))
            if allowed and value not in allowed:
                raise DesignFileError(f"[{section}] {key} must be one of {', '.join(allowed)}",
                                      _locate(lines, section, key), 1)
            values[section][key] = value
    for section, keys in REQUIRED.items():
        for key in keys:
            if key not in values.get(section, {}):
                raise DesignFileError(f"missing required key {key!r} in [{section}]",
                                      _locate(lines, section))
    # OmegaT (rad/s) is what --dump-config writes, since it round-trips exactly
    rates = [k for k in ("f_rf_mhz", "OmegaT") if k in values["drive"]]
    if len(rates) != 1:
        raise DesignFileError("[drive] needs exactly one of f_rf_mhz or OmegaT", _locate(lines, "drive"))
    return _build_design(values, lines)


def _build_design(values, lines):
    def block(name):
        return dict(values.get(name, {}))

    def guarded(section, fn):
        try:
            return fn()
        except (ValueError, TypeError) as exc:
            raise DesignFileError(f"[{section}] {exc}", _locate(lines, section)) from None

    geom = guarded("geometry", lambda: TrapGeometry(**block("geometry")))
    drv = block("drive")
    omega = drv["OmegaT"] if "OmegaT" in drv else 2 * math.pi * drv["f_rf_mhz"] * MHZ
    drive = guarded("drive", lambda: DriveConfig(
        drv["V0"], omega, drv.get("U0", 0.0), drv.get("center_offsets", (0.0, 0.0, 0.0, 0.0))))
    ionb = block("ion")
    ion = guarded("ion", lambda: IonSpecies(mass=ionb.get("mass_amu", IonSpecies.cd111().mass),
                                            charge=ionb.get("charge", 1)))
    material = None
    heating = Heating()
    if "material" in values:
        mat = block("material")
        heat = {k: mat.pop(k) for k in ("ion_distance_um", "f_secular_mhz", "target_rate") if k in mat}
        heating = Heating(**heat)
        preset = mat.pop("preset", "gaas")
        base = dict(MATERIAL_PRESETS[preset])
        material = guarded("material", lambda: MaterialProps(**{**base, **mat}))
        material = replace(material, extras={"preset": preset})
    solver = guarded("solver", lambda: SolverSettings(**block("solver")))
    overrides = guarded("overrides", lambda: Overrides(**block("overrides")))
    sweep = None
    if "sweep" in values:
        sweep = guarded("sweep", lambda: SweepSpec(**block("sweep")))
    return Design(geom, drive, ion, material, heating, solver, overrides, sweep)


def load_design(path) -> Design:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise DesignFileError(f"cannot read design file: {exc}") from None
    return parse_design_text(text)


def _fmt_value(v):
    if v is None:
        return "none"
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, tuple):
        return ", ".join(repr(float(x)) for x in v)
    return str(v)


def dump_design(design: Design) -> str:
    """INI text that re-parses to an equal :class:`Design`."""
    out = io.StringIO()
    g = design.geometry
    out.write("[geometry]\n")
    for k in ("a", "d", "w", "b", "c", "g", "h"):
        out.write(f"{k} = {_fmt_value(float(getattr(g, k)))}\n")
    d = design.drive
    out.write("\n[drive]\n")
    out.write(f"V0 = {_fmt_value(float(d.V0))}\n")
    out.write(f"# f_rf_mhz = {d.f_rf_mhz:.9g}\n")
    out.write(f"OmegaT = {_fmt_value(float(d.OmegaT))}\n")
    out.write(f"U0 = {_fmt_value(float(d.U0))}\n")
    out.write(f"center_offsets = {_fmt_value(d.center_offsets)}\n")
    out.write("\n[ion]\n")
    out.write(f"mass_amu = {_fmt_value(float(design.ion.mass))}\n")
    out.write(f"charge = {int(design.ion.charge)}\n")
    if design.material is not None:
        m = design.material
        out.write("\n[material]\n")
        out.write(f"preset = {m.extras.get('preset', 'none')}\n")
        for f_ in fields(MaterialProps):
            if f_.name != "extras":
                out.write(f"{f_.name} = {_fmt_value(getattr(m, f_.name))}\n")
        for k, v in asdict(design.heating).items():
            out.write(f"{k} = {_fmt_value(v)}\n")
    for name in ("solver", "overrides", "sweep"):
        obj = getattr(design, name)
        if obj is None:
            continue
        out.write(f"\n[{name}]\n")
        for k, v in asdict(obj).items():
            if name == "sweep" and v is None:
                continue
            out.write(f"{k} = {_fmt_value(v)}\n")
    return out.getvalue()


# --- helpers -----------------------------------------------------------------

def _f(v):
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, str):
        return v
    return f"{float(v):.9g}"


def _kv(pairs):
    pairs = list(pairs)
    width = max(len(k) for k, _ in pairs)
    return "".join(f"{k.ljust(width)} = {_f(v)}\n" for k, v in pairs)


def _csv_text(header, rows):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_f(v) for v in row])
    return buf.getvalue()


def _grid2d(s: SolverSettings, thin=None):
    from .laplace2d import GridSpec
    return GridSpec(box=s.box, growth=s.growth, refine=s.refine, thin=s.thin if thin is None else thin,
                    tol=s.tol, max_iters=s.max_iters, method=s.method)


def _grid3d(s: SolverSettings):
    from .laplace3d import GridSpec3D
    return GridSpec3D(box=s.box3d, growth=s.growth3d, refine=s.refine, tol=s.tol,
                      max_iters=s.max_iters, method=s.method)


def _levels(s):
    return (1.0, 2.0) if s.richardson else (1.0,)


class Outputs:
    """Collects report text for stdout and named files for ``--out``."""

    def __init__(self, out_dir):
        self.out_dir = Path(out_dir) if out_dir else None
        self.stdout = []

    def text(self, s):
        self.stdout.append(s)

    def file(self, name, content, echo=False):
        if self.out_dir is not None:
            self.out_dir.mkdir(parents=True, exist_ok=True)
            (self.out_dir / name).write_text(content)
            log.info("wrote %s", self.out_dir / name)
        elif echo:
            self.stdout.append(content)

    def path(self, name):
        if self.out_dir is None:
            return None
        self.out_dir.mkdir(parents=True, exist_ok=True)
        return self.out_dir / name


# --- commands ----------------------------------------------------------------

def cmd_solve2d(design: Design, out: Outputs):
    from .laplace2d import export_field_csv, solve_rf_2d
    from .multipole import anharmonicity_ratios, eta, expand, trap_depth_and_rmax

    g, s = design.geometry, design.solver
    fld = solve_rf_2d(g, design.drive, _grid2d(s), drive_mode=s.drive_mode)
    r0 = s.r0_um if s.r0_um is not None else g.a / 8
    exp = expand(fld, r0, V0=design.drive.V0)
    pairs = [("nodes", fld.values.size), ("residual_V", fld.residual), ("r0_um", r0),
             ("eta", eta(exp, g))]
    pairs += [(f"C{m}", exp.c(m)) for m in range(1, exp.M + 1)]
    pairs += [(f"S{n}", exp.s(n)) for n in range(1, exp.M + 1)]
    pairs += [(f"{k}_C2", v) for k, v in anharmonicity_ratios(exp).items()]
    try:
        dep = trap_depth_and_rmax(fld, g, design.drive, design.ion)
        pairs += [("peak_um", dep["peak"]), ("r_max_um", dep["r_max"]),
                  ("scaled_depth_K_um2_per_V2", dep["scaled_depth"]), ("depth_K", dep["depth"])]
    except IonTrapError as exc:
        log.warning("depth unavailable: %s", exc)
    out.text(_kv(pairs))
    path = out.path("field2d.csv")
    if path is not None:
        export_field_csv(fld, path)
    return EXIT_OK


def cmd_solve3d(design: Design, out: Outputs):
    from .laplace2d import export_field_csv
    from .laplace3d import (build_layout_3d, richardson_hessian, solve_laplace_3d,
                            static_voltages)
    from .trapchar import static_characterization

    g, s, drv = design.geometry, design.solver, design.drive
    U0 = drv.U0 if drv.U0 > 0 else 1.0
    volts = static_voltages(DriveConfig(drv.V0, drv.OmegaT, U0, drv.center_offsets))
    spec = _grid3d(s)
    res = richardson_hessian(g, volts, U0, spec, _levels(s))
    D, err = res["D"], res["D_err"]
    fac = static_characterization(D, g, design.overrides.d_eff)
    pairs = [("U0_V", U0)]
    for k in ("D_x", "D_y", "D_z", "D_xy", "D_xz", "D_yz"):
        pairs += [(k, D[k]), (f"{k}_err", err[k])]
    pairs += [("trace_rel", (D["D_x"] + D["D_y"] + D["D_z"]) / D["D_z"]),
              ("kappa", fac["kappa"]), ("epsilon", fac["epsilon"]),
              ("epsilon_alt", fac["epsilon_alt"]), ("epsilon_consistent", fac["consistent"]),
              ("d_eff_um", g.d_eff if design.overrides.d_eff is None else design.overrides.d_eff)]
    out.text(_kv(pairs))
    path = out.path("field3d.csv")
    if path is not None:
        fld = solve_laplace_3d(build_layout_3d(g, volts, spec), spec)
        export_field_csv(fld, path)
    return EXIT_OK


def cmd_analytic(design: Design, out: Outputs):
    from .analytic import (analytic_depth, analytic_eta, analytic_pseudopotential_profile,
                           analytic_rmax, asymptotic_valid)

    g = design.geometry
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", AsymptoticValidityWarning)
        dep = analytic_depth(g, design.drive, design.ion)
        pairs = [("alpha", g.alpha), ("asymptotic_valid", asymptotic_valid(g.alpha)),
                 ("eta", analytic_eta(g.alpha)), ("eta_limit", 1 / math.pi),
                 ("r_max_um", analytic_rmax(g)), ("depth_K", dep["depth"]),
                 ("scaled_depth", dep["scaled"]), ("scaled_depth_limit", dep["scaled_asymptotic"]),
                 ("scaled_depth_limit_literature", dep["scaled_literature"])]
        v = np.linspace(0.0, 0.999 * g.a / 2, 201)
        v, psi = analytic_pseudopotential_profile(v, g, design.drive, design.ion)
    out.text(_kv(pairs))
    out.file("psi_profile.csv", _csv_text(["v_um", "psi_K"], zip(v, psi)))
    return EXIT_OK


def _characterize(design: Design):
    from .trapchar import characterize

    o, s = design.overrides, design.solver
    return characterize(design.geometry, design.drive, design.ion, eta=o.eta, epsilon=o.epsilon,
                        kappa=o.kappa, sigma_z=o.sigma_z, l_eff=o.l_eff, d_eff=o.d_eff,
                        include_sigma_z=o.include_sigma_z, grid2d=_grid2d(s),
                        grid3d=_grid3d(s), refine_levels=_levels(s))


def cmd_characterize(design: Design, out: Outputs):
    from .trapchar import table1_report

    c = _characterize(design)
    pairs = [("eta", c.eta), ("epsilon", c.epsilon), ("kappa", c.kappa), ("lambda", c.lam),
             ("sigma_z", c.sigma_z), ("q", c.q), ("l_eff_um", c.l_eff), ("d_eff_um", c.d_eff),
             ("r_max_um", c.r_max), ("depth_K", c.depth),
             ("f_p_MHz", c.f_mhz("omega_p")), ("f_x_MHz", c.f_mhz("omega_x")),
             ("f_y_MHz", c.f_mhz("omega_y")), ("f_z_MHz", c.f_mhz("omega_z")),
             ("theta_principal_rad", c.theta_principal),
             ("theta_principal_deg", math.degrees(c.theta_principal)),
             ("epsilon_prime", c.epsilon_prime)]
    pairs += [(f"source_{k}", v) for k, v in sorted(c.sources.items())]
    pairs += [(f"err_{k}", v) for k, v in sorted(c.errors.items())]
    out.text(_kv(pairs))
    out.text("\n" + table1_report([c]))
    out.file("characterization.csv", table1_report([c], fmt="csv"))
    return EXIT_OK


def cmd_engineering(design: Design, out: Outputs):
    from .engineering import engineering_report, resistivity_for_heating_rate

    if design.material is None:
        raise DesignFileError("engineering needs a [material] section")
    h = design.heating
    omega_s = 2 * math.pi * h.f_secular_mhz * 1e6 if h.f_secular_mhz else None
    rep = engineering_report(design.geometry, design.material, design.drive, design.ion,
                             h.ion_distance_um, omega_s)
    extra = [("power_dissipation_ratio_literature_over_formula",
              rep.power_dissipation_literature / rep.power_dissipation)]
    if h.ion_distance_um and omega_s:
        extra.append(("resistivity_for_target_rate", resistivity_for_heating_rate(
            h.target_rate, design.ion, design.material, h.ion_distance_um, omega_s,
            geom=design.geometry)))
        extra.append(("target_rate", h.target_rate))
    out.text(_kv(list(asdict(rep).items()) + extra))
    out.file("engineering.csv", rep.as_csv())
    return EXIT_OK


# --- sweeps ------------------------------------------------------------------

def _apply_param(design: Design, name, value):
    g = design.geometry
    if name == "alpha":
        return replace(design, geometry=replace(g, a=value * g.d))
    if name == "delta":
        return replace(design, geometry=replace(g, w=g.d / value))
    if name in ("a", "d", "w", "b", "c", "g", "h"):
        return replace(design, geometry=replace(g, **{name: value}))
    if name in ("box", "box3d"):
        return replace(design, solver=replace(design.solver, **{name: value}))
    if name in ("V0", "U0"):
        return replace(design, drive=replace(design.drive, **{name: value}))
    raise DesignFileError(f"cannot sweep parameter {name!r} for this kind")


def _sweep_transverse(design: Design, value):
    from .analytic import analytic_depth, analytic_eta, analytic_rmax
    from .laplace2d import solve_rf_2d
    from .multipole import anharmonicity_ratios, eta, expand, trap_depth_and_rmax, _nearest_electrode_distance

    d = _apply_param(design, design.sweep.parameter, value)
    g, s = d.geometry, d.solver
    fld = solve_rf_2d(g, d.drive, _grid2d(s))
    exp = expand(fld, g.a / 8)
    r8 = anharmonicity_ratios(exp)
    dep = trap_depth_and_rmax(fld, g)
    r0 = min(dep["r_max"], 0.999 * _nearest_electrode_distance(fld))
    rm = anharmonicity_ratios(expand(fld, r0))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", AsymptoticValidityWarning)
        try:
            ana = (analytic_eta(g.alpha), analytic_rmax(g), analytic_depth(g)["scaled"])
        except ValueError:  # closed forms need alpha > 1/pi
            ana = (None,) * 3
    return [value, g.alpha, g.delta, eta(exp, g), ana[0], r8["S4"], r8["C6"], r8["S8"], r8["C10"],
            r0, rm["S4"], rm["C6"], rm["S8"], dep["peak"], ana[1], dep["scaled_depth"], ana[2]]


TRANSVERSE_HEADER = ["value", "alpha", "delta", "eta", "eta_analytic", "S4_C2", "C6_C2", "S8_C2",
                     "C10_C2", "r0_rmax_um", "S4_C2_rmax", "C6_C2_rmax", "S8_C2_rmax", "peak_um",
                     "r_max_analytic_um", "scaled_depth", "scaled_depth_analytic"]


def _sweep_static(design: Design, value):
    from .laplace3d import richardson_hessian, static_voltages
    from .trapchar import static_characterization

    d = _apply_param(design, design.sweep.parameter, value)
    g, s, drv = d.geometry, d.solver, d.drive
    U0 = drv.U0 if drv.U0 > 0 else 1.0
    volts = static_voltages(DriveConfig(drv.V0, drv.OmegaT, U0, drv.center_offsets))
    res = richardson_hessian(g, volts, U0, _grid3d(s), _levels(s))
    D = res["D"]
    fac = static_characterization(D, g)
    return [value, g.alpha, g.delta, D["D_x"], D["D_y"], D["D_z"],
            (D["D_x"] + D["D_y"] + D["D_z"]) / D["D_z"], fac["kappa"], fac["epsilon"],
            fac["epsilon_alt"], res["D_err"]["D_z"] * g.d_eff**2 / 2]


STATIC_HEADER = ["value", "alpha", "delta", "D_x", "D_y", "D_z", "trace_rel", "kappa", "epsilon",
                 "epsilon_alt", "kappa_err"]


def _endcap_geometry(design: Design, b):
    g = design.geometry
    if design.sweep.endcap_mode == "scaled":
        return replace(g, b=b, c=5 * g.l_eff, g=g.l_eff / 10)
    return replace(g, b=b)


def _sweep_sigma_z(design: Design, value):
    from .laplace3d import sigma_z
    from .trapchar import eta_from_solve

    if design.sweep.parameter != "b":
        raise DesignFileError("sigma_z sweeps run over parameter = b")
    g = _endcap_geometry(design, value)
    eta = design.overrides.eta or eta_from_solve(g, design.drive, _grid2d(design.solver))["eta"]
    sig, Hz, _ = sigma_z(g, eta, 1.0, _grid3d(design.solver), drive_mode="single_ended",
                         return_field=True)
    return [value, g.c, g.g, eta, Hz, sig, value / g.l_eff]


SIGMA_HEADER = ["b_um", "c_um", "g_um", "eta", "H_z_per_V2", "sigma_z", "b_over_l_eff"]


def _sweep_axial_profile(design: Design, value):
    from .laplace3d import build_layout_3d, grad_sq_along_z, rf_voltages, solve_laplace_3d
    from .trapchar import pseudopotential

    if design.sweep.parameter != "b":
        raise DesignFileError("axial_profile sweeps run over parameter = b")
    g = _endcap_geometry(design, value)
    spec = _grid3d(design.solver)
    V0 = design.drive.V0
    fld = solve_laplace_3d(build_layout_3d(g, rf_voltages(V0, "single_ended"), spec), spec)
    z, gsq = grad_sq_along_z(fld)
    keep = np.abs(z) <= g.b / 2 + g.g + g.c
    psi = pseudopotential(gsq[keep] / UM**2, design.drive, design.ion) / CONSTANTS.k_B
    return [[value, zz, p] for zz, p in zip(z[keep], psi)]


AXIAL_HEADER = ["b_um", "z_um", "psi_K"]


def _sweep_coefficients(design: Design, values):
    from .laplace2d import solve_rf_2d
    from .multipole import expand

    g = design.geometry
    fld = solve_rf_2d(g, design.drive, _grid2d(design.solver))
    rows = []
    for frac in values:
        exp = expand(fld, frac * g.a / 2, V0=design.drive.V0)
        c2 = exp.c(2)
        rows.append([frac, frac * g.a / 2, c2] + [exp.c(m) / c2 for m in (6, 10)]
                    + [exp.s(n) / c2 for n in (4, 8, 12)])
    return rows


COEFF_HEADER = ["r0_over_half_a", "r0_um", "C2", "C6_C2", "C10_C2", "S4_C2", "S8_C2", "S12_C2"]


def _sweep_rotation(design: Design, values):
    from .trapchar import rotation_basis

    U0 = design.drive.U0 if design.drive.U0 > 0 else 1.0
    basis = rotation_basis(design.geometry, spec=_grid3d(design.solver))
    rows = []
    for vc in values:
        theta = basis.theta(U0, vc)
        fac = basis.factors(U0, vc)
        rows.append([vc, theta, math.degrees(theta), fac["epsilon"], fac["kappa"], fac["lambda"]])
    return rows


ROTATION_HEADER = ["center_voltage_V", "theta_rad", "theta_deg", "epsilon", "kappa", "lambda"]

_PER_POINT = {"transverse": (_sweep_transverse, TRANSVERSE_HEADER),
              "static": (_sweep_static, STATIC_HEADER),
              "sigma_z": (_sweep_sigma_z, SIGMA_HEADER),
              "axial_profile": (_sweep_axial_profile, AXIAL_HEADER)}


def _run_point(args):
    kind, design, value = args
    warnings.simplefilter("ignore", AsymptoticValidityWarning)
    return _PER_POINT[kind][0](design, value)


def cmd_sweep(design: Design, out: Outputs, jobs=1):
    sw = design.sweep
    if sw is None:
        raise DesignFileError("sweep needs a [sweep] section")
    pts = sw.points()
    if sw.kind == "coefficients":
        header, rows = COEFF_HEADER, _sweep_coefficients(design, pts)
    elif sw.kind == "rotation":
        header, rows = ROTATION_HEADER, _sweep_rotation(design, pts)
    else:
        header = _PER_POINT[sw.kind][1]
        tasks = [(sw.kind, design, v) for v in pts]
        if jobs > 1 and len(tasks) > 1:
            with ProcessPoolExecutor(max_workers=jobs) as pool:
                results = list(pool.map(_run_point, tasks))  # map keeps sweep order
        else:
            results = [_run_point(t) for t in tasks]
        rows = []
        for r in results:
            rows.extend(r if sw.kind == "axial_profile" else [r])
    text = _csv_text(header, rows)
    out.file("sweep.csv", text, echo=True)
    if out.out_dir is not None:
        out.text(f"{len(rows)} rows written\n")
    return EXIT_OK


# --- entry point -------------------------------------------------------------

def _version_text():
    c = CONSTANTS
    return (f"iontrap {__version__}\n"
            + _kv([("e_C", c.e), ("epsilon_0_F_per_m", c.epsilon_0), ("k_B_J_per_K", c.k_B),
                   ("hbar_J_s", c.hbar), ("amu_kg", c.amu)]))


def build_parser():
    p = argparse.ArgumentParser(prog="iontrap", description="Design calculations for planar linear RF ion traps.")
    p.add_argument("--version", action="store_true", help="print the version and constants table")
    p.add_argument("command", nargs="?", choices=COMMANDS)
    p.add_argument("--config", help="design file (INI)")
    p.add_argument("--out", help="directory for CSV outputs")
    p.add_argument("--jobs", type=int, default=os.cpu_count() or 1, help="worker processes for sweeps")
    p.add_argument("--verbose", "-v", action="count", default=0, help="more logging on stderr")
    p.add_argument("--dump-config", action="store_true", help="print the normalised design file and exit")
    return p


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, stream=sys.stderr, format="%(levelname)s %(name)s: %(message)s")
    if args.version:
        sys.stdout.write(_version_text())
        return EXIT_OK
    if args.config is None or (args.command is None and not args.dump_config):
        parser.print_usage(sys.stderr)
        sys.stderr.write("iontrap: a command and --config FILE are required\n")
        return EXIT_USAGE
    if args.jobs < 1:
        sys.stderr.write("iontrap: --jobs must be at least 1\n")
        return EXIT_USAGE
    stage = "design file"
    try:
        design = load_design(args.config)
        if args.dump_config:
            sys.stdout.write(dump_design(design))
            return EXIT_OK
        if args.command == "sweep" and design.sweep is not None:
            design.sweep.points()  # validate the range before any solve
        out = Outputs(args.out)
        stage = args.command
        if args.command == "sweep":
            code = cmd_sweep(design, out, jobs=args.jobs)
        else:
            code = globals()[f"cmd_{args.command}"](design, out)
        sys.stdout.write("".join(out.stdout))
        return code
    except DesignFileError as exc:
        sys.stderr.write(f"iontrap: {args.config}: {exc}\n")
        return EXIT_USAGE
    except GeometryError as exc:
        sys.stderr.write(f"iontrap: invalid design ({stage}): {exc}\n")
        return EXIT_USAGE
    except IonTrapError as exc:
        sys.stderr.write(f"iontrap: {stage} failed: {type(exc).__name__}: {exc}\n")
        return EXIT_NUMERIC
    except (ArithmeticError, np.linalg.LinAlgError) as exc:
        sys.stderr.write(f"iontrap: {stage} failed: {type(exc).__name__}: {exc}\n")
        return EXIT_NUMERIC


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
