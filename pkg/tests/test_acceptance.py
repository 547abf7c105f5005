"""Acceptance criteria 1-10.

Each ``check_N`` computes one criterion at its stated tolerance and returns a
:class:`Result`.  The pytest tests assert on those results; the summary hook
in ``conftest.py`` prints one PASS/FAIL line per criterion.  Running this file
as a script prints the same lines without pytest.
"""

from __future__ import annotations

import math
import os
import sys
import time
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
import pytest

from lrimbp import experiments as ex
from lrimbp.cli import convergence_csv, series_csv
from lrimbp.diagnostics import (
    convergence_rates, energy_bound_constant, floor_start, increment_bound,
)
from lrimbp.expops import Propagator, dense_expm, dense_expm_extended, dense_phi_action
from lrimbp.potential import compute_bounds, double_well, flory_huggins, stabilized_map
from lrimbp.schemes import SchemeKind, Stepper, integrate
from lrimbp.spatial import GridSpec, dense_laplacian, operator_inf_norm

TITLES = {
    1: "operator oracle equivalence",
    2: "semigroup contraction in the max norm",
    3: "step-size bounds and stabilized map",
    4: "temporal order at desk scale",
    5: "L2 error ordering on every row",
    6: "bound preservation at the certified ceilings",
    7: "energy decay",
    8: "scheme order on the scalar ODE",
    9: "per-step increment bound",
    10: "determinism across reruns and thread counts",
}


@dataclass
class Result:
    passed: bool
    detail: str
    parts: dict = field(default_factory=dict)  # name -> (passed, detail)

    @classmethod
    def from_parts(cls, parts, extra=""):
        ok = all(p for p, _ in parts.values())
        bad = [f"{k}: {d}" for k, (p, d) in parts.items() if not p]
        detail = "; ".join(bad) if bad else extra
        return cls(ok, detail, parts)


RESULTS: dict[int, Result] = {}


def record(n, result):
    RESULTS[n] = result
    return result


def summary_lines():
    lines = []
    for n in sorted(RESULTS):
        r = RESULTS[n]
        lines.append(f"criterion {n:2d} [{'PASS' if r.passed else 'FAIL'}] {TITLES[n]}: {r.detail}")
    return lines


def unit_grid(n, dim, bc):
    return GridSpec((n,) * dim, (1.0,) * dim, bc)


def rel_inf(a, b):
    return float(np.max(np.abs(a - b)) / max(np.max(np.abs(b)), 1e-300))


# --- 1 ----------------------------------------------------------------------

@lru_cache(None)
def check_1():
    t0 = time.perf_counter()
    worst, where, count = 0.0, None, 0
    rng = np.random.default_rng(1)
    for n in (4, 8, 16):
        for dim in (1, 2):
            for bc in ("neumann", "periodic"):
                g = unit_grid(n, dim, bc)
                L = dense_laplacian(g)
                u = rng.uniform(-1, 1, g.shape)
                for eps in (0.01, 1.0):
                    A = eps**2 * L
                    for t in (0.01, 0.3, 2.0):
                        p = Propagator(g, eps, t)
                        errs = [rel_inf(p.apply_exp(u).ravel(), dense_expm(A, t) @ u.ravel())]
                        for k in (1, 2):
                            errs.append(rel_inf(p.apply_phi(k, u).ravel(),
                                                dense_phi_action(A, t, k, u)))
                        count += 1
                        if max(errs) > worst:
                            worst, where = max(errs), (n, dim, bc, eps, t)
    elapsed = time.perf_counter() - t0
    parts = {
        "accuracy": (worst <= 1e-10, f"max rel err {worst:.2e} at {where}"),
        "runtime": (elapsed < 60, f"{elapsed:.1f} s"),
    }
    return record(1, Result.from_parts(parts, f"max rel err {worst:.2e} over {count} configs, "
                                              f"{elapsed:.1f} s"))


# --- 2 ----------------------------------------------------------------------

def _row_norm_excess(E):
    return float(np.max(np.sum(np.abs(E), axis=1)) - 1)


@lru_cache(None)
def check_2():
    # The exact norm is 1 whenever D_h has zero row sums.  The double-precision
    # Pade oracle carries about 1e-12 of squaring noise at gamma = 10, n = 16
    # in 2D, so the gate uses the extended-precision exponential; the double
    # reading is reported alongside.
    t0 = time.perf_counter()
    worst, where, worst_double = -math.inf, None, -math.inf
    for bc in ("neumann", "periodic"):
        for n in range(4, 17):
            for dim in (1, 2):
                D = dense_laplacian(unit_grid(n, dim, bc))
                for gamma in (0.1, 1.0, 10.0):
                    excess = _row_norm_excess(dense_expm_extended(D, gamma))
                    worst_double = max(worst_double, _row_norm_excess(dense_expm(D, gamma)))
                    if excess > worst:
                        worst, where = excess, (bc, n, dim, gamma)
    elapsed = time.perf_counter() - t0
    return record(2, Result(worst <= 1e-12,
                            f"max ||exp(gamma D_h)||_inf - 1 = {worst:.2e} at {where} "
                            f"(extended precision; double-precision Pade reads {worst_double:.2e}), "
                            f"{elapsed:.1f} s"))


# --- 3 ----------------------------------------------------------------------

@lru_cache(None)
def check_3():
    dw = compute_bounds(double_well())
    fh_pot = flory_huggins(0.8, 1.6)
    fh = compute_bounds(fh_pot)
    parts = {}

    def close(name, got, want, tol):
        parts[name] = (abs(got - want) <= tol, f"{got!r} vs {want} (tol {tol:g})")

    close("dw omega0", dw.omega0, 0.5, 1e-10)
    close("dw omega1", dw.omega1, 1.5, 1e-10)
    close("dw first ceiling", dw.dt_max_first, 0.5, 1e-10)
    close("dw second ceiling", dw.dt_max_second, 0.6, 1e-10)
    close("fh omega0", fh.omega0, 0.1247, 1e-3)
    close("fh omega1", fh.omega1, 13.1739, 1e-3)
    close("fh beta", fh.beta, 0.9575, 1e-3)
    close("fh first ceiling", fh.dt_max_first, 0.1247, 1e-3)
    close("fh second ceiling", fh.dt_max_second, 0.1705, 1e-3)

    rng = np.random.Generator(np.random.PCG64(2024))
    worst = 0.0
    for pot, b in ((double_well(), dw), (fh_pot, fh)):
        x = rng.uniform(-pot.beta, pot.beta, 10_000)
        x[:2] = (-pot.beta, pot.beta)
        omega = rng.uniform(0, b.omega0, 10_000)
        omega[omega == 0] = b.omega0
        omega[:2] = b.omega0
        y = np.array([stabilized_map(pot, w, xi) for w, xi in zip(omega, x)])
        worst = max(worst, float(np.max(np.abs(y) - pot.beta)))
    parts["stabilized map"] = (worst <= 1e-12, f"max |x + w f(x)| - beta = {worst:.2e} over 2x10^4 samples")
    return record(3, Result.from_parts(parts, "all constants and the stabilized map within tolerance"))


# --- 4, 5 -------------------------------------------------------------------

@lru_cache(None)
def wave_table(jobs=1):
    t0 = time.perf_counter()
    table = ex.run_convergence(ex.WaveConfig(jobs=jobs))
    return table, time.perf_counter() - t0


def _pre_floor_rates(rows):
    errs = [r.linf for r in rows]
    dts = [r.dt for r in rows]
    rates = convergence_rates(errs, dts)
    k = floor_start(errs, rates)
    return rates[1:k], k


@lru_cache(None)
def check_4():
    table, elapsed = wave_table()
    parts = {}
    for s in ("ETD1", "LRI1a", "LRI1b"):
        r = table.for_scheme(s)[-1].linf_rate
        parts[s] = (0.85 <= r <= 1.1, f"final Linf rate {r:.4f}")
    for s in ("LRI2", "ETDRK2"):
        rows = table.for_scheme(s)
        rates, k = _pre_floor_rates(rows)
        ok = bool(rates) and all(1.8 <= r <= 2.1 for r in rates)
        parts[s] = (ok, f"pre-floor Linf rates {[round(r, 4) for r in rates]}, "
                        f"floor from dt=T/{round(ex.WaveConfig().T / rows[k].dt) if k < len(rows) else '-'}")
    parts["runtime"] = (elapsed < 300, f"{elapsed:.1f} s")
    extra = ", ".join(f"{k} {d}" for k, (_, d) in parts.items())
    return record(4, Result.from_parts(parts, extra))


@lru_cache(None)
def check_5():
    table, _ = wave_table()
    parts = {}
    for chain in (("LRI1b", "LRI1a", "ETD1"), ("LRI2", "ETDRK2")):
        cols = [table.for_scheme(s) for s in chain]
        for rows in zip(*cols):
            l2 = [r.l2 for r in rows]
            ok = all(a < b for a, b in zip(l2, l2[1:]))
            tag = f"{' < '.join(chain)} at dt=T/{round(ex.WaveConfig().T / rows[0].dt)}"
            parts[tag] = (ok, " vs ".join(f"{v:.4e}" for v in l2))
    n_ok = sum(p for p, _ in parts.values())
    return record(5, Result.from_parts(parts, f"{n_ok}/{len(parts)} row comparisons hold"))


# --- 6, 7, 9 ----------------------------------------------------------------

COARSEN_CASES = [
    ("double-well", "LRI1a", 0.5),
    ("double-well", "LRI1b", 0.5),
    ("double-well", "LRI2", 0.6),
    ("flory-huggins", "LRI1a", 0.12),
    ("flory-huggins", "LRI1b", 0.12),
    ("flory-huggins", "LRI2", 0.17),
]


@lru_cache(None)
def coarsen_run(potential, scheme, dt):
    cfg = ex.CoarsenConfig(potential=potential, scheme=scheme, dt=dt, T=50.0,
                           h_denom=ex.DESK_COARSEN_H_DENOM, seed=20240101)
    t0 = time.perf_counter()
    rep = ex.run_coarsening(cfg)
    return rep, time.perf_counter() - t0


@lru_cache(None)
def check_6():
    parts, worst = {}, -math.inf
    for pot, scheme, dt in COARSEN_CASES:
        rep, elapsed = coarsen_run(pot, scheme, dt)
        tol = 1e-12 if pot == "double-well" else 1e-9
        excess = max(rep.sup_norms) - rep.beta
        worst = max(worst, excess)
        complete = len(rep.sup_norms) == rep.config.steps + 1
        ok = excess <= tol and complete and elapsed < 180
        parts[f"{pot}/{scheme}/dt={dt}"] = (
            ok, f"max sup - beta = {excess:.2e}, {len(rep.sup_norms) - 1} steps, {elapsed:.1f} s")
    return record(6, Result.from_parts(parts, f"6 runs, worst max sup - beta = {worst:.2e}"))


@lru_cache(None)
def check_7():
    parts = {}
    for pot, scheme, dt in COARSEN_CASES:
        rep, _ = coarsen_run(pot, scheme, dt)
        cfg = rep.config
        grid = cfg.grid()
        b = compute_bounds(cfg.make_potential())
        e = rep.energy
        C = energy_bound_constant(scheme, b, operator_inf_norm(grid, cfg.eps), grid.size, cfg.T)
        finite = all(math.isfinite(x) for x in e.energies)
        ok = finite and e.bounded_by_initial and e.monotone and e.max_energy <= e.initial + C
        parts[f"{pot}/{scheme}"] = (
            ok, f"E0={e.initial:.6g} Eend={e.energies[-1]:.6g}, {len(e.violations)} rises, "
                f"bound E0+{C:.3g}")
    return record(7, Result.from_parts(parts, "6 runs monotone, below E0 and below E0 + C"))


@lru_cache(None)
def check_9():
    parts = {}
    for pot, scheme, dt in COARSEN_CASES:
        rep, _ = coarsen_run(pot, scheme, dt)
        cfg = rep.config
        b = compute_bounds(cfg.make_potential())
        bound = increment_bound(scheme, b, operator_inf_norm(cfg.grid(), cfg.eps)) * dt
        worst = max(rep.increments)
        parts[f"{pot}/{scheme}"] = (worst <= bound + 1e-10, f"max {worst:.4g} <= {bound:.4g}")
    return record(9, Result.from_parts(parts, "; ".join(f"{k} {d}" for k, (_, d) in parts.items())))


# --- 8 ----------------------------------------------------------------------

@lru_cache(None)
def check_8():
    t0 = time.perf_counter()
    grid = GridSpec((3,), (1.0,), "periodic")
    pot = double_well()
    u0, T = 0.5, 1.0
    exact = 1.0 / math.sqrt(1.0 + 3.0 * math.exp(-2.0 * T))
    counts = [10 * 2**k for k in range(6)]
    parts = {}
    for kind in SchemeKind:
        errs = []
        for M in counts:
            st = Stepper(kind, grid, 0.0, pot, T / M)
            errs.append(abs(float(integrate(st, np.full(3, u0), M).final[0]) - exact))
        rates = convergence_rates(errs, [T / M for M in counts])[1:]
        ok = all(abs(r - kind.order) <= 0.05 for r in rates)
        parts[kind.label] = (ok, f"rates {[round(r, 4) for r in rates]}")
    elapsed = time.perf_counter() - t0
    parts["runtime"] = (elapsed < 1.0, f"{elapsed:.2f} s")
    return record(8, Result.from_parts(
        parts, ", ".join(f"{k} {d}" for k, (_, d) in parts.items())))


# --- 10 ---------------------------------------------------------------------

@lru_cache(None)
def check_10():
    parts = {}
    a = convergence_csv(wave_table(1)[0]).encode()
    b = convergence_csv(ex.run_convergence(ex.WaveConfig(jobs=4))).encode()
    parts["convergence jobs=1 vs jobs=4"] = (a == b, f"{len(a)} bytes")
    for pot, scheme, dt in COARSEN_CASES:
        rep, _ = coarsen_run(pot, scheme, dt)
        again = ex.run_coarsening(rep.config)
        same = (series_csv(rep) == series_csv(again)
                and rep.final.tobytes() == again.final.tobytes())
        parts[f"coarsen {pot}/{scheme}"] = (same, "series and final field identical" if same else "differs")
    return record(10, Result.from_parts(parts, "convergence CSV and 6 coarsening series byte-identical"))


# --- pytest -----------------------------------------------------------------

def _assert(result, *names):
    for name in names:
        ok, detail = result.parts[name]
        assert ok, f"{name}: {detail}"


def test_criterion_1_operator_oracle():
    r = check_1()
    assert r.passed, r.detail


def test_criterion_2_contraction():
    r = check_2()
    assert r.passed, r.detail


def test_criterion_3_double_well_first_order_constants():
    _assert(check_3(), "dw omega0", "dw omega1", "dw first ceiling")


def test_criterion_3_double_well_second_ceiling():
    # the enlarged ceiling delta * omega0 = (sqrt(58) - 4) / 6 = 0.60263..., stated as 0.6
    r = check_3()
    assert compute_bounds(double_well()).dt_max_second >= 0.6
    _assert(r, "dw second ceiling")


def test_criterion_3_flory_huggins():
    _assert(check_3(), "fh omega0", "fh omega1", "fh beta", "fh first ceiling", "fh second ceiling")


def test_criterion_3_stabilized_map():
    _assert(check_3(), "stabilized map")


@pytest.mark.slow
def test_criterion_4_first_order_rates():
    _assert(check_4(), "ETD1", "LRI1a", "LRI1b", "runtime")


@pytest.mark.slow
def test_criterion_4_second_order_rates():
    _assert(check_4(), "LRI2", "ETDRK2")


@pytest.mark.slow
def test_criterion_5_first_order_ordering():
    r = check_5()
    bad = {k: d for k, (ok, d) in r.parts.items() if k.startswith("LRI1b") and not ok}
    assert not bad, bad


@pytest.mark.slow
def test_criterion_5_second_order_ordering():
    r = check_5()
    bad = {k: d for k, (ok, d) in r.parts.items() if k.startswith("LRI2") and not ok}
    assert not bad, bad


@pytest.mark.slow
def test_criterion_6_bound_preservation():
    r = check_6()
    assert r.passed, r.detail


@pytest.mark.slow
def test_criterion_7_energy():
    r = check_7()
    assert r.passed, r.detail


def test_criterion_8_scalar_order():
    r = check_8()
    assert r.passed, r.detail


@pytest.mark.slow
def test_criterion_9_increment_bound():
    r = check_9()
    assert r.passed, r.detail


@pytest.mark.slow
def test_criterion_10_determinism():
    r = check_10()
    assert r.passed, r.detail


@pytest.mark.fullscale
@pytest.mark.skipif(os.environ.get("LRIMBP_FULL_SCALE") != "1",
                    reason="full-scale run (h = 1/2048) is opt-in via LRIMBP_FULL_SCALE=1")
def test_full_scale_lri1b_l2_magnitude():
    cfg = ex.WaveConfig(h_denom=ex.FULL_WAVE_H_DENOM, schemes=["LRI1b"], dt_divisors=[1024])
    row = ex.run_convergence(cfg).rows[0]
    assert 9.77e-4 / 2 <= row.l2 <= 9.77e-4 * 2, row.l2


CHECKS = [check_1, check_2, check_3, check_4, check_5, check_6, check_7, check_8, check_9, check_10]

if __name__ == "__main__":
    for chk in CHECKS:
        chk()
    for line in summary_lines():
        print(line)
    sys.exit(0 if all(r.passed for r in RESULTS.values()) else 1)
