"""
Traveling-wave convergence study and seeded coarsening runs.

Both experiments live on the box (-0.5, 0.5)^d.  The traveling wave uses
Neumann conditions and the double-well nonlinearity; coarsening uses
periodic conditions and either potential.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from . import diagnostics as dg
from .potential import compute_bounds, double_well, flory_huggins
from .schemes import IntegrationError, SchemeKind, Stepper, integrate
from .spatial import GridSpec, operator_inf_norm

ALL_SCHEMES = ("ETD1", "LRI1a", "LRI1b", "ETDRK2", "LRI2")
DESK_WAVE_H_DENOM = 256
FULL_WAVE_H_DENOM = 2048
DESK_COARSEN_H_DENOM = 128
FULL_COARSEN_H_DENOM = 1024


def wave_speed(eps):
    return 3.0 * eps / math.sqrt(2.0)


def traveling_wave_field(grid, eps, t):
    """0.5 (1 - tanh((x - s t) / (2 sqrt(2) eps))), x along axis 0."""
    if not eps > 0:
        raise ValueError("eps must be positive")
    x = grid.mesh()[0]
    return 0.5 * (1.0 - np.tanh((x - wave_speed(eps) * t) / (2.0 * math.sqrt(2.0) * eps)))


def make_potential(name, theta=0.8, theta_c=1.6):
    if name == "double-well":
        return double_well()
    if name == "flory-huggins":
        return flory_huggins(theta, theta_c)
    raise ValueError(f"unknown potential {name!r}")


@dataclass
class WaveConfig:
    eps: float = 0.02
    h_denom: int = DESK_WAVE_H_DENOM
    dt_divisors: list = field(default_factory=lambda: [32, 64, 128, 256, 512, 1024])
    schemes: list = field(default_factory=lambda: list(ALL_SCHEMES))
    dim: int = 2
    method: str = "fft"
    jobs: int = 1

    def __post_init__(self):
        if not self.eps > 0:
            raise ValueError("eps must be positive")
        if self.h_denom < 2:
            raise ValueError("h_denom must be at least 2")
        if any(int(d) != d or d < 1 for d in self.dt_divisors):
            raise ValueError("dt divisors must be positive integers")
        self.dt_divisors = sorted(int(d) for d in self.dt_divisors)
        self.schemes = [SchemeKind.parse(s).label for s in self.schemes]

    @property
    def T(self):
        return 1.0 / (4.0 * wave_speed(self.eps))

    def grid(self):
        return GridSpec.from_spacing(self.dim, 1.0 / self.h_denom, "neumann", origin=-0.5)


def _wave_cell(cfg, grid, potential, u0, exact, scheme, div):
    st = Stepper(scheme, grid, cfg.eps, potential, cfg.T / div, method=cfg.method)
    try:
        traj = integrate(st, u0, div)
    except IntegrationError:
        return math.nan, math.nan
    if traj.diverged:
        return math.nan, math.nan
    return dg.error_norms(traj.final, exact, grid)


def run_convergence(cfg: WaveConfig) -> dg.ConvergenceTable:
    grid = cfg.grid()
    pot = double_well()
    bounds = compute_bounds(pot)
    u0 = traveling_wave_field(grid, cfg.eps, 0.0)
    exact = traveling_wave_field(grid, cfg.eps, cfg.T)
    cells = [(s, d) for s in cfg.schemes for d in cfg.dt_divisors]

    def run(cell):
        return _wave_cell(cfg, grid, pot, u0, exact, *cell)

    if cfg.jobs > 1:
        with ThreadPoolExecutor(cfg.jobs) as ex:
            results = list(ex.map(run, cells))
    else:
        results = [run(c) for c in cells]
    by_cell = dict(zip(cells, results))

    table = dg.ConvergenceTable()
    for s in cfg.schemes:
        kind = SchemeKind.parse(s)
        dts = [cfg.T / d for d in cfg.dt_divisors]
        l2 = [by_cell[(s, d)][0] for d in cfg.dt_divisors]
        li = [by_cell[(s, d)][1] for d in cfg.dt_divisors]
        if len(dts) > 1:
            r2, ri = dg.convergence_rates(l2, dts), dg.convergence_rates(li, dts)
        else:
            r2 = ri = [None]
        for k, dt in enumerate(dts):
            table.rows.append(dg.ConvergenceRow(s, dt, l2[k], r2[k], li[k], ri[k]))
            if dt > bounds.ceiling(kind.order):
                table.uncertified.append((s, dt, bounds.ceiling(kind.order)))
    return table


def random_field(grid, lo, hi, seed):
    """I.i.d. uniform values in [lo, hi) from numpy's PCG64 seeded with ``seed``."""
    if not lo < hi:
        raise ValueError(f"need lo < hi, got [{lo}, {hi}]")
    rng = np.random.Generator(np.random.PCG64(int(seed)))
    return rng.uniform(lo, hi, size=grid.shape)


@dataclass
class CoarsenConfig:
    potential: str = "double-well"
    theta: float = 0.8
    theta_c: float = 1.6
    eps: float = 0.01
    h_denom: int = DESK_COARSEN_H_DENOM
    dim: int = 2
    dt: float = 0.6
    scheme: str = "LRI2"
    T: float = 50.0
    seed: int = 20240101
    lo: float | None = None
    hi: float | None = None
    snapshot_times: list = field(default_factory=list)
    mbp_tol: float = 1e-9
    energy_rtol: float = 1e-8
    method: str = "fft"

    def __post_init__(self):
        self.scheme = SchemeKind.parse(self.scheme).label
        pot = self.make_potential()
        if self.lo is None or self.hi is None:
            # full bound interval for the double well, [-0.9, 0.9] for Flory-Huggins
            default = 1.0 if self.potential == "double-well" else 0.9
            self.lo = -default if self.lo is None else self.lo
            self.hi = default if self.hi is None else self.hi
        if not self.lo < self.hi:
            raise ValueError("need lo < hi")
        if self.lo < -pot.beta - 1e-15 or self.hi > pot.beta + 1e-15:
            raise ValueError(f"initial range [{self.lo}, {self.hi}] exceeds [-beta, beta]")
        if not self.dt > 0 or not self.T > 0:
            raise ValueError("dt and T must be positive")
        self.snapshot_times = [float(t) for t in self.snapshot_times]
        if any(t < 0 or t > self.T for t in self.snapshot_times):
            raise ValueError(f"snapshot times must lie in [0, T={self.T}]")

    def make_potential(self):
        return make_potential(self.potential, self.theta, self.theta_c)

    def grid(self):
        return GridSpec.from_spacing(self.dim, 1.0 / self.h_denom, "periodic", origin=-0.5)

    @property
    def steps(self):
        return max(1, int(round(self.T / self.dt)))

    def to_dict(self):
        return asdict(self)


@dataclass
class Snapshot:
    requested: float
    realized: float
    step: int
    field: np.ndarray


@dataclass
class RunReport:
    config: CoarsenConfig
    beta: float
    times: list
    sup_norms: list
    energies: list
    increments: list
    snapshots: list
    final: np.ndarray
    diverged_step: int | None = None
    domain_error_step: int | None = None
    domain_error: str | None = None
    mbp_violation_step: int | None = None
    energy: dg.EnergyReport | None = None

    @property
    def anomaly(self):
        return (self.diverged_step is not None or self.domain_error_step is not None
                or self.mbp_violation_step is not None)


def run_coarsening(cfg: CoarsenConfig) -> RunReport:
    grid = cfg.grid()
    pot = cfg.make_potential()
    u0 = random_field(grid, cfg.lo, cfg.hi, cfg.seed)
    stepper = Stepper(cfg.scheme, grid, cfg.eps, pot, cfg.dt, method=cfg.method)
    M = cfg.steps

    wanted = {}
    for t in cfg.snapshot_times:
        wanted.setdefault(min(M, int(round(t / cfg.dt))), []).append(t)

    report = RunReport(cfg, pot.beta, [0.0], [float(np.max(np.abs(u0)))],
                       [dg.discrete_energy(u0, grid, cfg.eps, pot)], [], [], u0)
    for t in wanted.get(0, []):
        report.snapshots.append(Snapshot(t, 0.0, 0, u0.copy()))
    prev = [u0]

    def monitor(m, u):
        report.times.append(m * cfg.dt)
        report.sup_norms.append(float(np.max(np.abs(u))))
        report.increments.append(float(np.max(np.abs(u - prev[0]))))
        prev[0] = u
        if report.mbp_violation_step is None and report.sup_norms[-1] > pot.beta + cfg.mbp_tol:
            report.mbp_violation_step = m
        try:
            report.energies.append(dg.discrete_energy(u, grid, cfg.eps, pot))
        except ValueError:
            report.energies.append(math.nan)
        for t in wanted.get(m, []):
            report.snapshots.append(Snapshot(t, m * cfg.dt, m, u.copy()))

    try:
        traj = integrate(stepper, u0, M, monitor)
        report.final = traj.final
        report.diverged_step = traj.diverged_step
    except IntegrationError as exc:
        report.domain_error_step = exc.step
        report.domain_error = str(exc.cause)
        report.final = prev[0]
    report.energy = dg.energy_report(report.energies, cfg.energy_rtol)
    return report
