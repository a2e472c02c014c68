"""Scalar delay-equation demonstrations of breaking-point behavior.

Two constant-delay test equations isolate the dichotomy that motivates the
rest of the toolkit:

    retarded:  x'(t) = b x(t - tau)
    neutral:   x'(t) = a x'(t - tau) + b x(t - tau)

With polynomial history the method of steps integrates exactly (polynomial
in, polynomial out), so smoothness orders at breaking points are measured
without integrator noise: retarded solutions gain one derivative per
breaking point, while neutral solutions keep a derivative jump at every
one (scaled by |a| each step).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import DegreeOverflow, InvariantViolation, OutOfDomain

__all__ = ["DelayProblem", "BreakingPointLedger", "StepSolution",
           "solve_steps", "smoothing_profile"]

_JUMP_TOL = 1e-10


@dataclass(frozen=True)
class DelayProblem:
    """Constant-delay scalar problem with polynomial history on [-tau, 0].

    ``history`` holds ascending coefficients in the local variable
    u = t + tau (so history[0] is the value at t = -tau).
    """

    kind: str              # "retarded" | "neutral"
    a: float
    b: float
    tau: float
    history: tuple
    horizon: float

    def __post_init__(self):
        if self.kind not in ("retarded", "neutral"):
            raise InvariantViolation(f"kind must be retarded|neutral, got {self.kind!r}")
        if self.kind == "retarded" and self.a != 0.0:
            raise InvariantViolation("retarded problems must have a == 0")
        if not self.tau > 0:
            raise InvariantViolation(f"delay must be positive, got {self.tau}")
        steps = self.horizon / self.tau
        if not (self.horizon > 0 and abs(steps - round(steps)) < 1e-9):
            raise InvariantViolation(
                f"horizon {self.horizon} must be a positive integer multiple "
                f"of the delay {self.tau}")
        hist = tuple(float(c) for c in self.history)
        if not hist:
            hist = (0.0,)
        object.__setattr__(self, "history", hist)

    @property
    def n_steps(self) -> int:
        return int(round(self.horizon / self.tau))


def _poly_eval(coeffs, u, order=0):
    c = coeffs
    for _ in range(order):
        c = [j * c[j] for j in range(1, len(c))]
        if not c:
            return 0.0
    acc = 0.0
    for v in reversed(c):
        acc = acc * u + v
    return acc


def _poly_derivative(coeffs):
    return [j * coeffs[j] for j in range(1, len(coeffs))] or [0.0]


def _poly_integral(coeffs, constant):
    out = [constant]
    out.extend(c / (j + 1) for j, c in enumerate(coeffs))
    return out


@dataclass(frozen=True)
class BreakingPointLedger:
    """Per-breaking-point record of derivative jumps and smoothness.

    ``smoothness_order[k]`` is the highest m with the solution C^m at the
    point (math.inf when every derivative matches up to the polynomial
    degree); ``jump_in_derivative[k]`` is the first-derivative jump.
    """

    times: tuple
    jump_in_derivative: tuple
    smoothness_order: tuple


class StepSolution:
    """Piecewise-polynomial solution on [-tau, horizon]."""

    def __init__(self, problem: DelayProblem, steps: list):
        self.problem = problem
        self.steps = steps  # list of ascending-coefficient lists, one per step

    def _piece(self, t: float, side: str):
        tau = self.problem.tau
        if side == "left":
            k = math.ceil(t / tau - 1e-12) - 1
        else:
            k = math.floor(t / tau + 1e-12)
        if k < -1 or k >= len(self.steps):
            if -self.problem.tau <= t <= self.problem.horizon:
                k = min(max(k, -1), len(self.steps) - 1)
            else:
                raise OutOfDomain(
                    f"t={t} outside [-{tau}, {self.problem.horizon}]")
        coeffs = self.problem.history if k < 0 else self.steps[k]
        u = t - k * tau
        return coeffs, u

    def value(self, t: float, order: int = 0, side: str = "left") -> float:
        coeffs, u = self._piece(t, side)
        return _poly_eval(list(coeffs), u, order)

    def residual(self, t: float) -> float:
        """|x'(t) - a x'(t - tau) - b x(t - tau)| away from breaking points."""
        p = self.problem
        lhs = self.value(t, order=1)
        rhs = p.a * self.value(t - p.tau, order=1) + p.b * self.value(t - p.tau)
        return abs(lhs - rhs)


def solve_steps(problem: DelayProblem,
                max_degree: int = 16) -> tuple[StepSolution, BreakingPointLedger]:
    """Exact method of steps; returns the solution and its jump ledger."""
    tau = problem.tau
    prev = list(problem.history)
    value_at_right = _poly_eval(prev, tau)
    steps = []
    for _k in range(problem.n_steps):
        dprev = _poly_derivative(prev)
        rhs = [problem.b * c for c in prev]
        for j, c in enumerate(dprev):
            if j >= len(rhs):
                rhs.append(0.0)
            rhs[j] += problem.a * c
        cur = _poly_integral(rhs, value_at_right)
        while len(cur) > 1 and cur[-1] == 0.0:
            cur.pop()
        if len(cur) - 1 > max_degree:
            raise DegreeOverflow(
                f"step polynomial degree {len(cur)-1} exceeds {max_degree}")
        steps.append(cur)
        prev = cur
        value_at_right = _poly_eval(cur, tau)
    sol = StepSolution(problem, steps)

    times = []
    jumps = []
    orders = []
    pieces = [list(problem.history)] + steps
    for k in range(problem.n_steps):
        t_k = k * tau
        left, right = pieces[k], pieces[k + 1]
        max_ord = max(len(left), len(right))
        order = math.inf
        for m in range(max_ord + 1):
            lv = _poly_eval(left, tau, m)
            rv = _poly_eval(right, 0.0, m)
            if abs(rv - lv) > _JUMP_TOL * (1.0 + abs(lv) + abs(rv)):
                order = m - 1
                break
        times.append(t_k)
        jumps.append(_poly_eval(right, 0.0, 1) - _poly_eval(left, tau, 1))
        orders.append(order)
    return sol, BreakingPointLedger(tuple(times), tuple(jumps), tuple(orders))


def smoothing_profile(ledger: BreakingPointLedger) -> list:
    """Smoothness orders per breaking point (math.inf = no discontinuity)."""
    return list(ledger.smoothness_order)
