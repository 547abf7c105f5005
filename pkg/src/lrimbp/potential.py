"""
Reaction terms f, their derivatives and antiderivative, and the constants
that control the bound-preserving step size and the error estimates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable

import numpy as np


class PotentialDomainError(ValueError):
    """Evaluation outside the open interval on which f is defined."""


@dataclass(frozen=True, eq=False)
class Potential:
    """Nonlinearity ``f = -F'`` with bound ``beta`` satisfying f(beta) <= 0 <= f(-beta).

    ``validity`` is the open interval where f is defined; evaluations that
    come within ``guard`` of its ends raise :class:`PotentialDomainError`.
    """

    name: str
    beta: float
    f_: Callable
    df_: Callable
    d2f_: Callable
    F_: Callable
    validity: tuple[float, float] = (-math.inf, math.inf)
    guard: float = 0.0
    params: dict = field(default_factory=dict)

    def _check(self, x):
        x = np.asarray(x, dtype=float)
        lo, hi = self.validity
        if math.isfinite(lo) or math.isfinite(hi):
            bad = ~((x > lo + self.guard) & (x < hi - self.guard))
            if np.any(bad):
                worst = x[bad].flat[0] if x.ndim else float(x)
                raise PotentialDomainError(
                    f"{self.name}: value {worst!r} outside ({lo + self.guard}, {hi - self.guard})"
                )
        return x

    def f(self, x):
        return self.f_(self._check(x))

    def df(self, x):
        return self.df_(self._check(x))

    def d2f(self, x):
        return self.d2f_(self._check(x))

    def F(self, x):
        return self.F_(self._check(x))

    def label(self):
        if not self.params:
            return self.name
        inner = ",".join(f"{k}={v!r}" for k, v in self.params.items())
        return f"{self.name}({inner})"


def double_well():
    """f(u) = u - u^3, F(u) = (u^2 - 1)^2 / 4, beta = 1."""
    return Potential(
        name="double-well",
        beta=1.0,
        f_=lambda u: u - u**3,
        df_=lambda u: 1.0 - 3.0 * u**2,
        d2f_=lambda u: -6.0 * u,
        F_=lambda u: 0.25 * (u**2 - 1.0) ** 2,
    )


def _bisect(g, a, b, tol=1e-12):
    ga = g(a)
    for _ in range(200):
        m = 0.5 * (a + b)
        gm = g(m)
        if gm == 0 or b - a < tol:
            return m
        if (gm > 0) == (ga > 0):
            a, ga = m, gm
        else:
            b = m
    return 0.5 * (a + b)


def flory_huggins(theta=0.8, theta_c=1.6):
    """Logarithmic potential on (-1, 1); beta is the positive root of f."""
    theta, theta_c = float(theta), float(theta_c)
    if not 0 < theta < theta_c:
        raise ValueError(f"need 0 < theta < theta_c, got theta={theta}, theta_c={theta_c}")

    def f(u):
        return 0.5 * theta * np.log((1.0 - u) / (1.0 + u)) + theta_c * u

    def df(u):
        return theta_c - theta / (1.0 - u**2)

    def d2f(u):
        return -2.0 * theta * u / (1.0 - u**2) ** 2

    def F(u):
        return (0.5 * theta * ((1.0 + u) * np.log1p(u) + (1.0 - u) * np.log1p(-u))
                - 0.5 * theta_c * u**2)

    # f > 0 just right of 0 (f'(0) = theta_c - theta > 0) and f -> -inf at 1
    beta = _bisect(lambda u: float(f(u)), 1e-6, 1.0 - 1e-15)
    return Potential(
        name="flory-huggins",
        beta=beta,
        f_=f, df_=df, d2f_=d2f, F_=F,
        validity=(-1.0, 1.0),
        guard=1e-12,
        params={"theta": theta, "theta_c": theta_c},
    )


def _extremum(g, a, b, samples=100_001, maximize=False):
    """Global extremum of g on [a, b]: dense sampling, then ternary refinement."""
    sign = -1.0 if maximize else 1.0
    x = np.linspace(a, b, samples)
    y = sign * np.asarray(g(x), dtype=float)
    if not np.all(np.isfinite(y)):
        raise ArithmeticError("non-finite potential evaluation inside [-beta, beta]")
    i = int(np.argmin(y))
    lo, hi = x[max(i - 1, 0)], x[min(i + 1, samples - 1)]
    best_x, best_y = x[i], y[i]
    while hi - lo > 1e-13 * max(1.0, abs(lo)):
        m1 = lo + (hi - lo) / 3
        m2 = hi - (hi - lo) / 3
        if sign * g(m1) <= sign * g(m2):
            hi = m2
        else:
            lo = m1
    xm = 0.5 * (lo + hi)
    ym = sign * float(g(xm))
    if ym < best_y:
        best_x, best_y = xm, ym
    return float(sign * best_y), float(best_x)


@dataclass(frozen=True)
class StabilityBounds:
    """Step-size ceilings and constants entering the estimates.

    ``dt_max_second`` is the active second-order ceiling: ``delta * omega0``
    when f vanishes at both ends of the bound interval (``enlarged``), else
    ``delta0 * omega0``.  The generic value is kept in
    ``dt_max_second_generic``.  Quantities that need an upper bound on the
    step of the second-order scheme (F4, the F-tilde range, the increment
    bound) use the active ceiling.
    """

    beta: float
    omega0: float
    omega1: float
    delta: float | None
    delta0: float
    enlarged: bool
    dt_max_first: float
    dt_max_second: float
    dt_max_second_generic: float
    F0: float
    F1: float
    F2: float
    F3: float
    F1_tilde: float
    F2_tilde: float
    F4: float
    argmin_omega1: float

    def ceiling(self, order):
        return self.dt_max_first if order == 1 else self.dt_max_second

    def as_dict(self):
        return dict(self.__dict__)


@lru_cache(maxsize=64)
def compute_bounds(potential: Potential) -> StabilityBounds:
    b = potential.beta
    f, df, d2f = potential.f_, potential.df_, potential.d2f_

    min_df, _ = _extremum(df, -b, b)
    if not min_df < 0:
        raise ValueError(f"{potential.name}: min f' on [-beta, beta] must be negative")
    omega0 = float(-1.0 / min_df)
    min_ff, arg_ff = _extremum(lambda x: d2f(x) * f(x), -b, b)
    omega1 = -min_ff

    if omega1 > 0:
        a = omega0**2 * omega1
        delta = float((-1.0 + math.sqrt(1.0 + 7.0 * a)) / (2.0 * a))
        delta0 = min(1.0, delta)
    else:
        delta, delta0 = None, 1.0

    enlarged = (delta is not None and abs(float(f(b))) <= 1e-9 and abs(float(f(-b))) <= 1e-9)
    dt_generic = delta0 * omega0
    dt_second = delta * omega0 if enlarged else dt_generic

    F0 = _extremum(lambda x: np.abs(f(x)), -b, b, maximize=True)[0]
    F1 = _extremum(lambda x: np.abs(df(x)), -b, b, maximize=True)[0]
    F2 = _extremum(lambda x: np.abs(d2f(x)), -b, b, maximize=True)[0]
    F3 = _extremum(lambda x: np.abs(d2f(x) * f(x) + df(x) ** 2), -b, b, maximize=True)[0]

    r = b + dt_second * F0
    lo, hi = potential.validity
    if -r > lo + potential.guard and r < hi - potential.guard:
        F1t = _extremum(lambda x: np.abs(df(x)), -r, r, maximize=True)[0]
        F2t = _extremum(lambda x: np.abs(d2f(x)), -r, r, maximize=True)[0]
    else:
        # enlarged range leaves the domain of f: the estimate is vacuous
        F1t = F2t = math.inf

    return StabilityBounds(
        beta=b, omega0=omega0, omega1=omega1, delta=delta, delta0=delta0,
        enlarged=enlarged, dt_max_first=omega0, dt_max_second=dt_second,
        dt_max_second_generic=dt_generic,
        F0=F0, F1=F1, F2=F2, F3=F3, F1_tilde=F1t, F2_tilde=F2t,
        F4=F1 + 0.5 * dt_second * F3, argmin_omega1=arg_ff,
    )


def stabilized_map(potential, omega, x):
    """x + omega f(x); stays in [-beta, beta] for |x| <= beta, 0 < omega <= omega0."""
    bounds = compute_bounds(potential)
    if not 0 < omega <= bounds.omega0:
        raise ValueError(f"omega={omega} outside (0, {bounds.omega0}]")
    x = np.asarray(x, dtype=float)
    if np.any(np.abs(x) > potential.beta):
        raise ValueError("stabilized_map needs |x| <= beta")
    return x + omega * potential.f(x)
