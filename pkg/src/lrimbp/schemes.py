"""
One-step maps for the low regularity integrators and the ETD baselines.

All schemes advance ``du/dt = A u + f(u)`` with ``A = eps^2 D_h``:

LRI1a   ``E (u + dt f(u))``
LRI1b   ``E u + dt f(E u)``
LRI2    ``E u + dt/2 [E f(u) + f(E u)] + dt^2/2 E (f'(u) f(u))``
ETD1    ``E u + dt phi1(dt A) f(u)``
ETDRK2  predictor ``v = E u + dt phi1 f(u)``, then ``v + dt phi2 (f(v) - f(u))``

where ``E = exp(dt A)``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .expops import Propagator
from .potential import Potential, PotentialDomainError


class SchemeKind(enum.Enum):
    LRI1a = ("LRI1a", 1)
    LRI1b = ("LRI1b", 1)
    LRI2 = ("LRI2", 2)
    ETD1 = ("ETD1", 1)
    ETDRK2 = ("ETDRK2", 2)

    def __init__(self, label, order):
        self.label = label
        self.order = order

    @property
    def is_lri(self):
        return self.label.startswith("LRI")

    @classmethod
    def parse(cls, name):
        if isinstance(name, cls):
            return name
        for kind in cls:
            if kind.label.lower() == str(name).lower():
                return kind
        raise ValueError(f"unknown scheme {name!r}; expected one of {[k.label for k in cls]}")

    def __str__(self):
        return self.label


class IntegrationError(RuntimeError):
    """A step failed; ``step`` is the 1-based index of the failing step."""

    def __init__(self, step, cause):
        super().__init__(f"step {step} failed: {cause}")
        self.step = step
        self.cause = cause


def _lri1a(st, u):
    p = st.potential
    return st.prop.apply_exp(u + st.dt * p.f(u))


def _lri1b(st, u):
    p = st.potential
    v = st.prop.apply_exp(u)
    return v + st.dt * p.f(v)


def _lri2(st, u):
    p, dt = st.potential, st.dt
    fu = p.f(u)
    v = st.prop.apply_exp(u)
    # E is shared by u, f(u) and f'(u) f(u): one transform pair for all three
    w = st.prop.apply_exp(u + 0.5 * dt * fu + 0.5 * dt**2 * p.df(u) * fu)
    return w + 0.5 * dt * p.f(v)


def _etd1(st, u):
    prop, dt = st.prop, st.dt
    c = prop.exp_factor * prop.forward(u) + dt * prop.phi_factor(1) * prop.forward(st.potential.f(u))
    return prop.inverse(c)


def _etdrk2(st, u):
    prop, dt, p = st.prop, st.dt, st.potential
    fu = p.f(u)
    c = prop.exp_factor * prop.forward(u) + dt * prop.phi_factor(1) * prop.forward(fu)
    v = prop.inverse(c)
    c = c + dt * prop.phi_factor(2) * prop.forward(p.f(v) - fu)
    return prop.inverse(c)


_STEPS = {
    SchemeKind.LRI1a: _lri1a,
    SchemeKind.LRI1b: _lri1b,
    SchemeKind.LRI2: _lri2,
    SchemeKind.ETD1: _etd1,
    SchemeKind.ETDRK2: _etdrk2,
}


class Stepper:
    """Scheme + step size + cached propagator for one grid and potential."""

    def __init__(self, kind, grid, eps, potential: Potential, dt, method="fft", workers=1):
        if not dt > 0:
            raise ValueError(f"time step must be positive, got {dt}")
        self.kind = SchemeKind.parse(kind)
        self.grid = grid
        self.eps = float(eps)
        self.potential = potential
        self.dt = float(dt)
        self.prop = Propagator(grid, eps, dt, method=method, workers=workers)
        self._step = _STEPS[self.kind]

    def step(self, u):
        return self._step(self, self.grid.check_field(u))


def step_lri1a(stepper, u):
    return _lri1a(stepper, stepper.grid.check_field(u))


def step_lri1b(stepper, u):
    return _lri1b(stepper, stepper.grid.check_field(u))


def step_lri2(stepper, u):
    return _lri2(stepper, stepper.grid.check_field(u))


def step_etd1(stepper, u):
    return _etd1(stepper, stepper.grid.check_field(u))


def step_etdrk2(stepper, u):
    return _etdrk2(stepper, stepper.grid.check_field(u))


@dataclass
class Trajectory:
    final: np.ndarray
    steps_done: int
    diverged_step: int | None = None
    series: list = field(default_factory=list)

    @property
    def diverged(self):
        return self.diverged_step is not None


def integrate(stepper, u0, steps, monitor=None):
    """Advance ``steps`` steps from ``u0``.

    ``monitor(step, field)`` is called after every step (step is 1-based);
    non-None return values are collected in ``Trajectory.series``.  A
    non-finite iterate stops the run and sets ``diverged_step``; the last
    finite iterate is returned as ``final``.  A potential domain error is
    re-raised as :class:`IntegrationError` carrying the step index.
    """
    if int(steps) != steps or steps < 1:
        raise ValueError(f"steps must be a positive integer, got {steps}")
    u = stepper.grid.check_field(u0).copy()
    traj = Trajectory(final=u, steps_done=0)
    for m in range(1, int(steps) + 1):
        try:
            with np.errstate(over="ignore", invalid="ignore"):
                new = stepper.step(u)
        except PotentialDomainError as exc:
            raise IntegrationError(m, exc) from exc
        if not np.all(np.isfinite(new)):
            traj.diverged_step = m
            break
        u = new
        traj.final = u
        traj.steps_done = m
        if monitor is not None:
            rec = monitor(m, u)
            if rec is not None:
                traj.series.append(rec)
    return traj
