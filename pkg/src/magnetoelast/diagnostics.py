"""Energy bookkeeping and invariant monitors.

Two balances are audited per step (rates times dt, left minus right):

    mechanical:  d(E_kin + E_stored + E_exch + E_zee + E_dem) + dt (D_bulk + D_wall)
                 = dt (P_grav + P_field + P_trac - A_adiab)
    total:       d(E_mech + int w) + dt D_wall/2 = dt (P_grav + P_field + P_trac + P_heat)

where A_adiab is the adiabatic power handed to the heat equation and
D_wall/2 is the half of the Navier dissipation that does not become heat.
Every flux entering the audit is the exact field the solvers used.
"""
import csv
from dataclasses import asdict, dataclass, fields

import numpy as np

from . import constitutive as cst
from . import demag as dm
from . import llg


@dataclass
class EnergyReport:
    step: int
    time: float
    kinetic: float
    stored: float
    exchange: float
    zeeman: float
    demag: float
    heat: float
    dissipation_bulk: float
    dissipation_boundary: float
    power_gravity: float
    power_external_field: float
    power_traction: float
    power_boundary_heat: float
    adiabatic_bulk: float
    residual_mech: float
    residual_total: float
    min_theta: float
    min_detF: float
    total_mass: float
    entropy_production: float
    cutoff_active: int = 0

    @property
    def mechanical(self):
        return self.kinetic + self.stored + self.exchange + self.zeeman + self.demag

    @property
    def total(self):
        return self.mechanical + self.heat

    @property
    def scale(self):
        return (abs(self.kinetic) + abs(self.stored) + abs(self.exchange) + abs(self.zeeman)
                + abs(self.demag) + abs(self.heat))


COLUMNS = [f.name for f in fields(EnergyReport)]


@dataclass
class Energies:
    kinetic: float
    stored: float
    exchange: float
    zeeman: float
    demag: float
    heat: float

    @property
    def mechanical(self):
        return self.kinetic + self.stored + self.exchange + self.zeeman + self.demag

    @property
    def total(self):
        return self.mechanical + self.heat


@dataclass
class StepFluxes:
    """Rates (per unit time) accumulated by the solvers during one step."""
    dissipation_bulk: float = 0.0
    dissipation_boundary: float = 0.0
    power_gravity: float = 0.0
    power_external_field: float = 0.0
    power_traction: float = 0.0
    power_boundary_heat: float = 0.0
    adiabatic_bulk: float = 0.0
    entropy_production: float = 0.0


def effective_det(mat, F):
    return cst.det_reg(mat, F) if mat.cutoff else cst.det(F)


def energies(grid, mat, rho, v, F, m, w, h_ext, demag_res=None):
    J = effective_det(mat, F)
    kin = grid.integrate(0.5 * rho * np.sum(v * v, axis=0))
    stored = grid.integrate(cst.phi(mat, F, m) / J)
    coef = llg.exchange_coefficient(mat, F, J)
    exch = llg.exchange_energy(grid, mat, F, m, coef)
    he = np.zeros_like(m)
    h_ext = np.asarray(h_ext, dtype=float)
    if h_ext.ndim == 1:
        h_ext = h_ext.reshape(-1, 1, 1)
    he[:h_ext.shape[0]] = h_ext
    zee = -grid.integrate(mat.mu0 * np.sum(he * m, axis=0))
    dem = 0.0
    if demag_res is not None:
        dem, _ = dm.demag_energy(grid, demag_res, m, mat.mu0)
    return Energies(kin, stored, exch, zee, dem, grid.integrate(w))


def residuals(before, after, fl, dt):
    mech = (after.mechanical - before.mechanical) \
        + dt * (fl.dissipation_bulk + fl.dissipation_boundary) \
        - dt * (fl.power_gravity + fl.power_external_field + fl.power_traction - fl.adiabatic_bulk)
    tot = (after.total - before.total) + dt * 0.5 * fl.dissipation_boundary \
        - dt * (fl.power_gravity + fl.power_external_field + fl.power_traction
                + fl.power_boundary_heat)
    return abs(mech), abs(tot)


def audit_step(step, time, before, after, fl, dt, grid, rho, F, theta, cutoff_active=False):
    """Build the EnergyReport of one step (never raises)."""
    try:
        rm, rt = residuals(before, after, fl, dt)
    except Exception:  # a report must always be produced
        rm = rt = float("nan")
    return EnergyReport(
        step=step, time=time, kinetic=after.kinetic, stored=after.stored,
        exchange=after.exchange, zeeman=after.zeeman, demag=after.demag, heat=after.heat,
        dissipation_bulk=fl.dissipation_bulk, dissipation_boundary=fl.dissipation_boundary,
        power_gravity=fl.power_gravity, power_external_field=fl.power_external_field,
        power_traction=fl.power_traction, power_boundary_heat=fl.power_boundary_heat,
        adiabatic_bulk=fl.adiabatic_bulk, residual_mech=rm, residual_total=rt,
        min_theta=float(np.min(theta)), min_detF=float(np.min(cst.det(F))),
        total_mass=float(grid.integrate(rho)), entropy_production=fl.entropy_production,
        cutoff_active=int(bool(cutoff_active)))


def emit_csv(path, reports):
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(COLUMNS)
        for r in reports:
            row = asdict(r)
            wr.writerow([row[c] if isinstance(row[c], int) else format(row[c], ".17g")
                         for c in COLUMNS])


def read_csv(path):
    out = []
    with open(path, newline="") as fh:
        rd = csv.DictReader(fh)
        for row in rd:
            kw = {}
            for f in fields(EnergyReport):
                kw[f.name] = int(row[f.name]) if f.type in (int, "int") else float(row[f.name])
            out.append(EnergyReport(**kw))
    return out
