"""
Discrete energy, norms, bound checks, observed rates and the a priori error
and energy bounds for the low regularity integrators.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .schemes import SchemeKind
from .spatial import apply_laplacian


def discrete_energy(u, grid, eps, potential):
    """sum_i F(U_i) - eps^2/2 U^T D_h U, with D_h U from the stencil."""
    u = grid.check_field(u)
    lap = apply_laplacian(grid, u)
    return float(np.sum(potential.F(u)) - 0.5 * eps**2 * np.sum(u * lap))


@dataclass
class EnergyReport:
    energies: list
    violations: list = field(default_factory=list)  # (step, increase)

    @property
    def initial(self):
        return self.energies[0]

    @property
    def max_energy(self):
        return max(self.energies)

    @property
    def monotone(self):
        return not self.violations

    @property
    def bounded_by_initial(self):
        return all(e <= self.initial for e in self.energies)


def energy_report(energies, rtol=1e-8):
    """Flag each step whose energy rises by more than ``rtol`` relative."""
    energies = [float(e) for e in energies]
    viol = []
    for m in range(1, len(energies)):
        inc = energies[m] - energies[m - 1]
        if inc > rtol * max(abs(energies[m - 1]), 1e-300):
            viol.append((m, inc))
    return EnergyReport(energies, viol)


@dataclass
class MBPReport:
    passed: bool
    max_abs: float
    argmax: tuple


def mbp_check(u, beta, tol=0.0):
    if tol < 0:
        raise ValueError("tol must be non-negative")
    a = np.abs(np.asarray(u, dtype=float))
    idx = np.unravel_index(int(np.argmax(a)), a.shape)
    m = float(a[idx])
    return MBPReport(m <= beta + tol, m, tuple(int(i) for i in idx))


def error_norms(u, v, grid):
    """(l2, linf) of u - v; l2 is weighted by the cell volume prod(h)."""
    u = grid.check_field(u)
    v = grid.check_field(v)
    d = np.abs(u - v)
    vol = float(np.prod(grid.h_axis))
    linf = float(np.max(d))
    if not 0 < linf < math.inf:
        return (linf if linf == 0 else math.nan), linf
    # scale by linf so huge but finite errors do not overflow the sum of squares
    return linf * math.sqrt(vol * float(np.sum((d / linf) ** 2))), linf


def convergence_rates(errors, dts):
    """log(e_{k-1}/e_k) / log(dt_{k-1}/dt_k); NaN where undefined.

    The returned list has the same length as ``errors`` with ``None`` first.
    """
    if len(errors) != len(dts) or len(errors) < 2:
        raise ValueError("need matching errors and dts of length >= 2")
    rates = [None]
    for k in range(1, len(errors)):
        e0, e1, d0, d1 = errors[k - 1], errors[k], dts[k - 1], dts[k]
        ok = all(math.isfinite(x) and x > 0 for x in (e0, e1, d0, d1)) and d0 != d1
        rates.append(math.log(e0 / e1) / math.log(d0 / d1) if ok else math.nan)
    return rates


def floor_start(errors, rates, residual=None, factor=5.0, rate_drop=1.5):
    """Index of the first row inside the error floor, or ``len(errors)``.

    A row is in the floor once its error is below ``factor * residual`` or
    the rate into it falls under ``rate_drop``.  ``residual`` defaults to
    the error of the finest row, the part that refinement no longer removes.
    """
    if residual is None:
        residual = errors[-1]
    for k in range(1, len(errors)):
        r = rates[k]
        if errors[k] < factor * residual or (r is not None and not r >= rate_drop):
            return k
    return len(errors)


@dataclass
class ConvergenceRow:
    scheme: str
    dt: float
    l2: float
    l2_rate: float | None
    linf: float
    linf_rate: float | None


@dataclass
class ConvergenceTable:
    rows: list = field(default_factory=list)
    uncertified: list = field(default_factory=list)  # (scheme, dt, ceiling)

    def for_scheme(self, scheme):
        return [r for r in self.rows if r.scheme == str(scheme)]

    def schemes(self):
        seen = []
        for r in self.rows:
            if r.scheme not in seen:
                seen.append(r.scheme)
        return seen


def increment_bound(kind, bounds, a_inf):
    """Per-unit-dt bound on ||U_{m+1} - U_m||_inf for the LRI schemes."""
    kind = SchemeKind.parse(kind)
    base = bounds.beta * a_inf + bounds.F0
    if kind in (SchemeKind.LRI1a, SchemeKind.LRI1b):
        return base
    if kind is SchemeKind.LRI2:
        return base + bounds.dt_max_second * bounds.F0 * bounds.F1
    raise ValueError(f"no increment bound for {kind}")


def energy_bound_constant(kind, bounds, a_inf, n_points, T):
    """C in E_h(U_m) <= E_h(U_0) + C, i.e. c N T (F0 + beta ||A||)."""
    c = increment_bound(kind, bounds, a_inf)
    return c * n_points * T * (bounds.F0 + bounds.beta * a_inf)


def theoretical_error_bound(scheme, bounds, a_inf_norm, t, dt):
    """A priori sup-norm error bound at time t for the LRI schemes.

    Order 1: ``C (exp(F1 t) - 1) dt`` with ``C = ((F0/F1 + beta) ||A|| + F0) / 2``.
    Order 2: ``C (exp(F4 t) - 1) dt^2`` with ``C = ((c1 + c2 + c3)/3 + c4/6) / F4``.
    """
    kind = SchemeKind.parse(scheme)
    if not kind.is_lri:
        raise ValueError(f"no a priori estimate for {kind}")
    if t < 0:
        raise ValueError("t must be non-negative")
    ceiling = bounds.ceiling(kind.order)
    if not 0 < dt <= ceiling * (1 + 1e-12):
        raise ValueError(f"dt={dt} outside the certified range (0, {ceiling}]")
    A = a_inf_norm
    b, F0, F1, F2 = bounds.beta, bounds.F0, bounds.F1, bounds.F2
    if t == 0:
        return 0.0
    if kind.order == 1:
        C = 0.5 * ((F0 / F1 + b) * A + F0)
        return C * math.expm1(F1 * t) * dt
    c1 = 0.5 * bounds.F1_tilde * ((3 * F0 + b * F1) * A + F0 * F1)
    c2 = 0.5 * F0**2 * bounds.F2_tilde
    c3 = F0 * (F1 + b * F2) * A
    c4 = 0.5 * (F0 + 3 * b * F1 + b**2 * F2) * A**2
    C = ((c1 + c2 + c3) / 3 + c4 / 6) / bounds.F4
    return C * math.expm1(bounds.F4 * t) * dt**2
