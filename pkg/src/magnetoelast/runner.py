"""Scenario files and the time loop.

A scenario is an INI file with the sections [run], [material], [grid],
[initial], [external], [stepping], [output], [curve] and [hysteresis].
Lists are comma separated; presets take their parameters after the name,
e.g. ``v0 = shear, 0.05`` or ``m0 = disk, 0.25, 0.6, 0.8``.

One step of the coupled system:
transport (rho, F, m) -> demag -> llg -> demag -> stresses/momentum -> heat -> audit.
"""
import configparser
import io
import os
from dataclasses import dataclass, field

import numpy as np

from . import constitutive as cst
from . import demag as dm
from . import diagnostics as dg
from . import fields as fd
from . import heat as ht
from . import llg
from . import momentum as mo
from . import transport as tr
from .errors import DomainError, SolverError, ValidationError

# section -> {key: default}
DEFAULTS = {
    "run": {"kind": "dynamics", "seed": "0"},
    "material": dict({"preset": "default"},
                     **{k: repr(v) for k, v in cst.Material().__dict__.items()}),
    "grid": {"nx": "64", "ny": "64", "hx": "", "hy": "", "mode": "box", "pad": "4",
             "demag": "true"},
    "initial": {"rho0": "1.0", "v0": "zero", "F0": "identity", "m0": "saturated, 0.0",
                "theta0": "0.5", "ncomp": "2"},
    "external": {"h_ext": "constant, 0.0, 0.0", "g": "0.0, 0.0", "k_traction": "0.0, 0.0",
                 "theta_ext": "0.0", "kappa_b": "0.0"},
    "stepping": {"t_end": "1.0", "n_steps": "0", "cfl": "0.4", "dt_max": "0.01",
                 "scheme": "upwind1", "mechanics": "true", "wave_cfl": "true",
                 "newton_tol": "1e-10", "llg_tol": "1e-12", "alt_signs": "false",
                 "skw_sign": "1"},
    "output": {"report": "report.csv", "snapshots": "0", "dump": "theta, m"},
    "curve": {"thetas": "0.0, 1.5, 20", "h_ext": "0.0, 0.0", "nx": "64", "output": "curve.csv"},
    "hysteresis": {"theta": "0.5", "amplitude": "0.6", "period": "200.0", "n_steps": "100000",
                   "cycles": "1", "tau": "0.01", "output": "loop.csv"},
}
# stepping keys forwarded to the material
_MAT_ALIASES = {"eps_reg", "lambda_cut", "cutoff"}


def _floats(s):
    return [float(x) for x in s.split(",") if x.strip()]


def _bool(s):
    t = str(s).strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


def _preset(s):
    parts = [x.strip() for x in s.split(",")]
    return parts[0].lower(), parts[1:]


@dataclass
class Scenario:
    material: cst.Material
    grid: fd.Grid
    sections: dict
    path: str = "<defaults>"
    seed: int = 0
    lines: dict = field(default_factory=dict)

    def get(self, sec, key):
        return self.sections[sec][key]

    @property
    def kind(self):
        return self.get("run", "kind")


def _line_numbers(text):
    """(section, key) -> line number in the original file."""
    out = {}
    sec = None
    for n, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if line.startswith("[") and line.endswith("]"):
            sec = line[1:-1].strip().lower()
        elif "=" in line and sec and not line.startswith(("#", ";")):
            out[(sec, line.split("=", 1)[0].strip())] = n
    return out


def parse_scenario_text(text, path="<string>", base_dir="."):
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    cp.optionxform = str
    lines = _line_numbers(text)
    errs = []
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ValidationError(f"{path}: unreadable scenario", [str(exc)])
    sections = {s: dict(d) for s, d in DEFAULTS.items()}
    for sec in cp.sections():
        key_sec = sec.lower()
        if key_sec not in DEFAULTS:
            errs.append(f"line {lines.get((key_sec, next(iter(cp[sec]), ''), 0), '?')}: "
                        f"unknown section [{sec}]")
            continue
        for k, v in cp[sec].items():
            where = f"line {lines.get((key_sec, k), '?')}"
            if key_sec == "stepping" and k in _MAT_ALIASES:
                sections["material"][k] = v
            elif k not in DEFAULTS[key_sec]:
                errs.append(f"{where}: unknown key '{k}' in [{sec}]")
            else:
                sections[key_sec][k] = v
    sc = None
    try:
        sc = _build(sections, path, lines, errs, base_dir)
    except (ValueError, KeyError) as exc:
        errs.append(str(exc))
    if errs:
        raise ValidationError(f"{path}: {len(errs)} violation(s)", errs)
    return sc


def parse_scenario(path):
    with open(path) as fh:
        text = fh.read()
    return parse_scenario_text(text, path, os.path.dirname(os.path.abspath(path)))


def _where(lines, sec, key):
    n = lines.get((sec, key)) or (lines.get(("stepping", key)) if sec == "material" else None)
    return f"line {n}" if n else "default"


def _build(sections, path, lines, errs, base_dir):
    mat_s = sections["material"]
    kw = {}
    for k in cst.Material.field_names():
        try:
            kw[k] = _bool(mat_s[k]) if k == "cutoff" else float(mat_s[k])
        except ValueError:
            errs.append(f"{_where(lines, 'material', k)}: {k} = {mat_s[k]!r} is not a number")
    preset = mat_s["preset"].strip().lower()
    if preset not in ("default", "rigid"):
        errs.append(f"{_where(lines, 'material', 'preset')}: unknown material preset {preset!r}")
    if preset == "rigid":
        for k in ("eps1", "eps2"):
            if (("material", k) not in lines):
                kw[k] = 0.0
    mat = cst.Material(**kw) if len(kw) == len(cst.Material.field_names()) else cst.Material()
    for v in mat.violations():
        key = v.split()[0]
        errs.append(f"{_where(lines, 'material', key)}: {v}")
    g = sections["grid"]
    grid = None
    try:
        nx, ny = int(g["nx"]), int(g["ny"])
        hx = float(g["hx"]) if g["hx"] else 1.0 / nx
        hy = float(g["hy"]) if g["hy"] else 1.0 / ny
        grid = fd.Grid(nx, ny, hx, hy, g["mode"].strip())
    except ValueError as exc:
        errs.append(f"{_where(lines, 'grid', 'nx')}: {exc}")
    try:
        if int(g["pad"]) < 2:
            errs.append(f"{_where(lines, 'grid', 'pad')}: pad must be >= 2")
    except ValueError:
        errs.append(f"{_where(lines, 'grid', 'pad')}: pad must be an integer")
    st = sections["stepping"]
    if st["scheme"].strip() not in tr.SCHEMES:
        errs.append(f"{_where(lines, 'stepping', 'scheme')}: unknown scheme {st['scheme']!r}")
    if not float(st["t_end"]) > 0:
        errs.append(f"{_where(lines, 'stepping', 't_end')}: t_end must be > 0")
    if not 0 < float(st["cfl"]) <= 1:
        errs.append(f"{_where(lines, 'stepping', 'cfl')}: cfl must lie in (0, 1]")
    ex = sections["external"]
    for k in ("theta_ext", "kappa_b"):
        if float(ex[k]) < 0:
            errs.append(f"{_where(lines, 'external', k)}: {k} must be >= 0")
    if sections["run"]["kind"] not in ("dynamics", "hysteresis", "curve"):
        errs.append(f"{_where(lines, 'run', 'kind')}: unknown run kind")
    sc = Scenario(mat, grid, sections, path, int(sections["run"]["seed"]), lines)
    sc.base_dir = base_dir
    if grid is not None and sc.kind == "dynamics" and not errs:
        try:
            init = initial_state(sc)
        except ValueError as exc:
            errs.append(str(exc))
            return sc
        if np.min(init.rho) <= 0:
            errs.append(f"{_where(lines, 'initial', 'rho0')}: rho0 must be > 0 (min {np.min(init.rho):g})")
        if np.min(cst.det(init.F)) <= 0:
            errs.append(f"{_where(lines, 'initial', 'F0')}: min det F0 must be > 0")
        if np.min(init.theta) < 0:
            errs.append(f"{_where(lines, 'initial', 'theta0')}: theta0 must be >= 0 "
                        f"(min {np.min(init.theta):g})")
    return sc


# ---------------------------------------------------------------- state and presets

@dataclass
class State:
    rho: np.ndarray
    v: np.ndarray
    F: np.ndarray
    m: np.ndarray
    theta: np.ndarray
    w: np.ndarray
    t: float = 0.0
    rho_ref: np.ndarray = None


def _load(sc, name):
    p = name if os.path.isabs(name) else os.path.join(getattr(sc, "base_dir", "."), name)
    return fd.load_field(p)[2]


def initial_state(sc):
    g = sc.grid
    mat = sc.material
    ini = sc.sections["initial"]
    x, y = g.coords()
    Lx, Ly = g.nx * g.hx, g.ny * g.hy
    rng = np.random.default_rng(sc.seed)

    def scalar(key):
        name, args = _preset(ini[key])
        if name == "file":
            return _load(sc, args[0])
        return np.full(g.shape, float(name))

    rho = scalar("rho0")
    theta = scalar("theta0")
    name, a = _preset(ini["v0"])
    a = [float(t) for t in a] if name != "file" else a
    if name == "zero":
        v = np.zeros((2,) + g.shape)
    elif name == "shear":
        v = np.stack([a[0] * np.sin(2 * np.pi * y / Ly), np.zeros(g.shape)])
    elif name == "vortex":
        v = a[0] * np.stack([np.sin(np.pi * x / Lx) * np.cos(np.pi * y / Ly),
                             -np.cos(np.pi * x / Lx) * np.sin(np.pi * y / Ly)])
    elif name == "rotation":
        v = a[0] * np.stack([-(y - 0.5 * Ly), x - 0.5 * Lx])
    elif name == "file":
        v = _load(sc, a[0])
    else:
        raise ValueError(f"{_where(sc.lines, 'initial', 'v0')}: unknown v0 preset {name!r}")
    name, a = _preset(ini["F0"])
    F = np.zeros((2, 2) + g.shape)
    if name == "identity":
        F[0, 0] = F[1, 1] = 1.0
    elif name == "stretch":
        F[0, 0], F[1, 1] = float(a[0]), float(a[1])
    elif name == "file":
        F = _load(sc, a[0]).reshape((2, 2) + g.shape)
    else:
        raise ValueError(f"{_where(sc.lines, 'initial', 'F0')}: unknown F0 preset {name!r}")
    nc = int(ini["ncomp"])
    if nc not in (2, 3):
        raise ValueError(f"{_where(sc.lines, 'initial', 'ncomp')}: ncomp must be 2 or 3")
    name, a = _preset(ini["m0"])
    m = np.zeros((nc,) + g.shape)
    ms = cst.saturation_magnetization(mat.a0, mat.b0, mat.theta_c, theta)
    if name == "zero":
        pass
    elif name == "uniform":
        vals = [float(t) for t in a]
        for c, val in enumerate(vals[:nc]):
            m[c] = val
    elif name == "saturated":
        ang = float(a[0]) if a else 0.0
        m[0], m[1] = ms * np.cos(ang), ms * np.sin(ang)
    elif name == "perturbed":
        amp = float(a[0])
        scale = float(a[1]) if len(a) > 1 else 1.0
        phi = amp * np.sin(2 * np.pi * x / Lx) * np.sin(2 * np.pi * y / Ly)
        m[0], m[1] = scale * ms * np.cos(phi), scale * ms * np.sin(phi)
    elif name == "random":
        amp = float(a[0])
        m[:] = amp * rng.standard_normal(m.shape)
    elif name == "disk":
        R, mx, my = (float(t) for t in a[:3])
        m2, _ = dm.disk_magnetization(g, R, (mx, my))
        m[:2] = m2
    elif name == "file":
        arr = _load(sc, a[0])
        m[:arr.shape[0]] = arr
    else:
        raise ValueError(f"{_where(sc.lines, 'initial', 'm0')}: unknown m0 preset {name!r}")
    if np.min(cst.det(F)) <= 0:
        raise ValueError(f"{_where(sc.lines, 'initial', 'F0')}: min det F0 must be > 0")
    if np.min(theta) < 0:
        raise ValueError(f"{_where(sc.lines, 'initial', 'theta0')}: theta0 must be >= 0 "
                         f"(min {np.min(theta):g})")
    w = cst.enthalpy(mat, F, m, theta)
    return State(rho, v, F, m, theta, w, 0.0, rho * cst.det(F))


def external_field(sc):
    """h_ext(t) as a callable returning a (2,) vector (uniform in space)."""
    name, a = _preset(sc.get("external", "h_ext"))
    a = [float(t) for t in a]
    if name == "constant":
        return lambda t: np.array(a[:2])
    if name == "ramp":
        T = a[2]
        return lambda t: np.array(a[:2]) * min(t / T, 1.0)
    if name == "sinusoid":
        om = a[2]
        return lambda t: np.array(a[:2]) * np.sin(om * t)
    if name == "triangle":
        amp, period = a[0], a[1]
        return lambda t: np.array([amp * float(llg.triangle(t / period)), 0.0])
    raise ValueError(f"unknown h_ext preset {name!r}")


# ---------------------------------------------------------------- simulation

class Simulation:
    def __init__(self, sc, state=None):
        self.sc = sc
        self.grid = sc.grid
        self.mat = sc.material
        st = sc.sections["stepping"]
        self.scheme = st["scheme"].strip()
        self.mechanics = _bool(st["mechanics"])
        self.cfl = float(st["cfl"])
        self.dt_max = float(st["dt_max"])
        self.t_end = float(st["t_end"])
        self.n_steps = int(st["n_steps"])
        self.wave_cfl = _bool(st["wave_cfl"])
        self.newton_tol = float(st["newton_tol"])
        self.llg_tol = float(st["llg_tol"])
        self.alt_signs = _bool(st["alt_signs"])
        self.skw_sign = float(st["skw_sign"])
        ex = sc.sections["external"]
        self.g = np.array(_floats(ex["g"]))
        self.k_traction = np.array(_floats(ex["k_traction"]))
        self.theta_ext = float(ex["theta_ext"])
        self.kappa_b = float(ex["kappa_b"])
        self.h_ext = external_field(sc)
        gs = sc.sections["grid"]
        self.pad = int(gs["pad"])
        self.use_demag = _bool(gs["demag"]) and not self.grid.periodic
        self.state = initial_state(sc) if state is None else state
        self.ops = mo.MomentumOperators(self.grid) if self.mechanics else None
        self.step_index = 0
        self.reports = []
        self.cutoff_ever = False
        s = self.state
        self._dres = self._demag(s.m)
        self._energies = dg.energies(self.grid, self.mat, s.rho, s.v, s.F, s.m, s.w,
                                     self.h_ext(s.t), self._dres)

    def _demag(self, m):
        if not self.use_demag:
            return None
        return dm.solve_demag(self.grid, m[:2], self.pad)

    def _h_total(self, hvec, dres, nc):
        h = np.zeros((nc,) + self.grid.shape)
        h[0] += hvec[0]
        h[1] += hvec[1]
        if dres is not None:
            h[:2] -= dres.grad_u
        return h

    def choose_dt(self):
        if self.n_steps > 0:
            return self.t_end / self.n_steps
        c = 0.0
        if self.mechanics and self.wave_cfl:
            c = float(np.sqrt((2 * self.mat.G + self.mat.bulk) / np.min(self.state.rho)))
        dt = tr.cfl_dt(self.grid, self.state.v, self.cfl, c, self.dt_max)
        return min(dt, self.t_end - self.state.t) if self.t_end > self.state.t else dt

    def done(self):
        if self.n_steps > 0:
            return self.step_index >= self.n_steps
        return self.state.t >= self.t_end * (1 - 1e-12)

    def step(self):
        g, mat, s = self.grid, self.mat, self.state
        dt = self.choose_dt()
        t1 = s.t + dt
        h0, h1 = self.h_ext(s.t), self.h_ext(t1)
        nc = s.m.shape[0]
        if self.mechanics:
            gv0 = tr.velocity_gradient(g, s.v)
            rho1 = tr.advance_density(g, s.rho, s.v, dt, self.scheme)
            F1, _ = tr.advance_defgrad(g, s.F, s.v, dt, self.scheme, gv0)
            mstar = tr.advance_magnetization(g, s.m, s.v, None, dt, self.scheme, gv0)
        else:
            rho1, F1, mstar = s.rho, s.F, s.m
        if np.any(cst.det(F1) <= 0):
            raise DomainError(f"det F <= 0 at step {self.step_index + 1}")
        J1 = dg.effective_det(mat, F1)
        cut = bool(np.any(cst.cutoff_pi(mat, F1) < 1.0)) if mat.cutoff else False
        self.cutoff_ever |= cut
        dres = self._demag(mstar)
        L = llg.llg_step(g, mat, F1, mstar, s.theta, self._h_total(h1, dres, nc), dt, J=J1,
                         tol=self.llg_tol)
        m1 = L.m
        dres1 = self._demag(m1)
        fl = dg.StepFluxes()
        xi = L.heat.copy()
        navier = None
        if self.mechanics:
            bundle = mo.assemble_stresses(g, mat, F1, m1, s.theta, s.v,
                                          self._h_total(h1, dres1, nc))
            force = mo.explicit_force(g, self.ops, mat, bundle, rho1, s.v, self.g,
                                      self.k_traction, self.scheme, self.alt_signs)
            M = mo.momentum_step(g, self.ops, mat, s.rho, rho1, s.v, force, dt,
                                 tol=self.newton_tol)
            v1 = M.v
            xi += M.xi_visc
            fl.dissipation_boundary = M.wall_dissipation
            gv1 = tr.velocity_gradient(g, v1)
            fl.power_gravity = g.integrate(rho1 * np.einsum("i,i...->...", self.g, v1))
            fl.power_traction = mo.traction_power(g, v1, self.k_traction)
            if not g.periodic:
                vt = fd.tangential_velocity(g, v1)
                navier = fd.BoundaryField(*[mat.nu_flat * np.abs(x) ** mat.p for x in vt])
        else:
            v1 = s.v
            gv1 = np.zeros((2, 2) + g.shape)
        aF, am = ht.adiabatic_sources(mat, F1, m1, s.theta, gv1, L.r, J1, self.skw_sign)
        H = ht.heat_step(g, mat, F1, m1, s.w, s.v if self.mechanics else np.zeros_like(s.v), dt,
                         xi, aF, am, self.scheme, self.kappa_b, self.theta_ext, navier)
        fl.dissipation_bulk = g.integrate(xi)
        fl.adiabatic_bulk = g.integrate(aF + am)
        fl.power_boundary_heat = H.boundary_heat_power
        he0 = np.zeros_like(s.m)
        he0[0], he0[1] = h1[0] - h0[0], h1[1] - h0[1]
        fl.power_external_field = -g.integrate(mat.mu0 * np.sum(he0 * s.m, axis=0)) / dt
        theta_floor = 1e-12 * max(float(np.max(np.abs(H.theta))), 1e-300)
        fl.entropy_production = ht.entropy_production(g, mat, F1, H.theta, xi,
                                                      theta_floor=theta_floor)
        self.state = State(rho1, v1, F1, m1, H.theta, H.w, t1, s.rho_ref)
        self.step_index += 1
        after = dg.energies(g, mat, rho1, v1, F1, m1, H.w, h1, dres1)
        rep = dg.audit_step(self.step_index, t1, self._energies, after, fl, dt, g, rho1, F1,
                            H.theta, cut)
        rep.min_xi = float(np.min(xi))
        self._energies = after
        self._dres = dres1
        self.reports.append(rep)
        return rep

    def density_consistency(self):
        s = self.state
        return float(np.max(np.abs(s.rho * cst.det(s.F) - s.rho_ref) / s.rho_ref))

    def run(self, out_dir=None, snapshots=None, callback=None):
        snaps = int(self.sc.get("output", "snapshots")) if snapshots is None else snapshots
        dumps = [x.strip() for x in self.sc.get("output", "dump").split(",") if x.strip()]
        try:
            while not self.done():
                rep = self.step()
                if callback:
                    callback(rep)
                if out_dir and snaps and self.step_index % snaps == 0:
                    self.dump(out_dir, dumps)
        finally:
            if out_dir:
                dg.emit_csv(os.path.join(out_dir, self.sc.get("output", "report")), self.reports)
        return self.reports

    def dump(self, out_dir, names, tag=None):
        tag = f"{self.step_index:06d}" if tag is None else tag
        for nm in names:
            arr = getattr(self.state, nm, None)
            if arr is None:
                continue
            fd.dump_field(os.path.join(out_dir, f"{nm}_{tag}.bin"), nm, self.grid, arr)


def dump_config(sections=None):
    """Effective configuration as INI text."""
    cp = configparser.ConfigParser(interpolation=None)
    cp.optionxform = str
    for sec, d in (sections or DEFAULTS).items():
        cp[sec] = d
    buf = io.StringIO()
    cp.write(buf)
    return buf.getvalue()


def default_scenario(**overrides):
    """Scenario built from defaults plus {section: {key: value}} overrides."""
    lines = []
    for sec, d in overrides.items():
        lines.append(f"[{sec}]")
        lines += [f"{k} = {v}" for k, v in d.items()]
    return parse_scenario_text("\n".join(lines) + "\n")


__all__ = ["Scenario", "State", "Simulation", "parse_scenario", "parse_scenario_text",
           "initial_state", "dump_config", "default_scenario", "SolverError"]
