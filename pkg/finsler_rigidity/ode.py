"""
ODE Engine
Adaptive embedded Runge-Kutta stepping with exact step accounting,
and a fixed-step RK4 integrator used as an independent oracle
"""

import logging
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence

import numpy as np
from scipy.integrate import DOP853, RK45, OdeSolution
from scipy.interpolate import CubicHermiteSpline

from .errors import StepFailure

logger = logging.getLogger(__name__)

ADAPTIVE_METHODS = {'DOP853': DOP853, 'RK45': RK45}


@dataclass
class OdeStats:
    method: str
    rtol: float
    atol: float
    steps: int = 0
    rejected_steps: int = 0
    evaluations: int = 0
    pieces: int = 0

    def merge(self, other: 'OdeStats') -> 'OdeStats':
        return OdeStats(self.method, self.rtol, self.atol,
                        self.steps + other.steps,
                        self.rejected_steps + other.rejected_steps,
                        self.evaluations + other.evaluations,
                        self.pieces + other.pieces)

    def to_dict(self) -> dict:
        return {
            'method': self.method,
            'rtol': self.rtol,
            'atol': self.atol,
            'steps': self.steps,
            'rejected_steps': self.rejected_steps,
            'evaluations': self.evaluations,
            'pieces': self.pieces,
        }


@dataclass
class Trajectory:
    """Accepted step points of one solve and a dense interpolant"""
    ts: np.ndarray
    states: np.ndarray
    dense: Callable[[float], np.ndarray]
    stats: OdeStats

    @property
    def final(self) -> np.ndarray:
        return self.states[-1]


class OdeIntegrator:
    """Integrates z' = f(t, z) with a guard called after every accepted step"""

    def __init__(self, method: str = 'DOP853', rtol: float = 1e-9, atol: float = 1e-11,
                 rk4_steps: int = 400):
        if method not in ADAPTIVE_METHODS and method != 'RK4':
            raise ValueError(f"Unknown ODE method '{method}'")
        self.method = method
        self.rtol = rtol
        self.atol = atol
        self.rk4_steps = rk4_steps
        self.logger = logging.getLogger(__name__)

    def solve(self, fun: Callable[[float, np.ndarray], np.ndarray], t_span: Sequence[float],
              z0: Sequence[float], guard: Optional[Callable[[float, np.ndarray], None]] = None) -> Trajectory:
        z0 = np.asarray(z0, dtype=float)
        if self.method == 'RK4':
            return self._solve_rk4(fun, t_span, z0, guard)
        return self._solve_adaptive(fun, t_span, z0, guard)

    def _solve_adaptive(self, fun, t_span, z0, guard) -> Trajectory:
        solver_class = ADAPTIVE_METHODS[self.method]
        solver = solver_class(fun, t_span[0], z0, t_span[1], rtol=self.rtol, atol=self.atol)
        stats = OdeStats(self.method, self.rtol, self.atol, pieces=1)

        ts, states, interpolants = [solver.t], [solver.y.copy()], []
        while solver.status == 'running':
            before = solver.nfev
            message = solver.step()
            if solver.status == 'failed':
                raise StepFailure(f"ODE step failed at t={solver.t:.6g}: {message}", solver.y[:len(z0)])
            attempts = max(1, int(round((solver.nfev - before) / solver.n_stages)))
            stats.steps += 1
            stats.rejected_steps += attempts - 1
            interpolants.append(solver.dense_output())
            ts.append(solver.t)
            states.append(solver.y.copy())
            if guard is not None:
                guard(solver.t, solver.y)

        stats.evaluations = solver.nfev
        self.logger.debug(f"{self.method}: {stats.steps} steps, {stats.rejected_steps} rejected, "
                          f"{stats.evaluations} evaluations")
        ts = np.asarray(ts)
        dense = OdeSolution(ts, interpolants) if interpolants else (lambda t: z0.copy())
        return Trajectory(ts, np.asarray(states), dense, stats)

    def _solve_rk4(self, fun, t_span, z0, guard) -> Trajectory:
        t0, t1 = float(t_span[0]), float(t_span[1])
        h = (t1 - t0) / self.rk4_steps
        ts = t0 + h * np.arange(self.rk4_steps + 1)
        states = np.empty((self.rk4_steps + 1, len(z0)))
        slopes = np.empty_like(states)
        states[0] = z0
        for i in range(self.rk4_steps):
            t, z = ts[i], states[i]
            k1 = np.asarray(fun(t, z))
            k2 = np.asarray(fun(t + 0.5 * h, z + 0.5 * h * k1))
            k3 = np.asarray(fun(t + 0.5 * h, z + 0.5 * h * k2))
            k4 = np.asarray(fun(t + h, z + h * k3))
            slopes[i] = k1
            states[i + 1] = z + h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
            if guard is not None:
                guard(ts[i + 1], states[i + 1])
        slopes[-1] = fun(ts[-1], states[-1])

        stats = OdeStats('RK4', 0.0, 0.0, steps=self.rk4_steps,
                         evaluations=4 * self.rk4_steps + 1, pieces=1)
        spline = CubicHermiteSpline(ts, states, slopes, axis=0)
        return Trajectory(ts, states, spline, stats)


def merge_stats(stats: List[OdeStats]) -> OdeStats:
    total = stats[0]
    for other in stats[1:]:
        total = total.merge(other)
    return total
