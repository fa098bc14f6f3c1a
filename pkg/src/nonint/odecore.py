"""Adaptive integration, stroboscopic maps and Newton shooting.

The integrator is the Dormand-Prince 5(4) pair (Hairer, Norsett & Wanner,
vol. I, p. 178) with the PI step-size controller used in DOPRI5.  Dense
output is cubic Hermite on accepted steps.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import IntegrationError

_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_B = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_B_LOW = np.array([5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40])
_E = _B - _B_LOW

SAFETY = 0.9
PI_BETA = 0.04
FAC_MIN, FAC_MAX = 0.2, 10.0
MAX_STEPS = 200_000


@dataclass(frozen=True)
class VectorField:
    """Right-hand side ``dx/dt = eval(t, x)`` of fixed dimension."""

    dimension: int
    eval: Callable[[float, np.ndarray], np.ndarray]
    is_autonomous: bool = False

    def __call__(self, t, x):
        return np.asarray(self.eval(t, x), dtype=float)


@dataclass(frozen=True)
class Trajectory:
    """Accepted steps of an integration, with Hermite dense output."""

    times: np.ndarray
    states: np.ndarray
    derivatives: np.ndarray = field(repr=False)
    tolerance_used: float = math.nan

    @property
    def final(self) -> np.ndarray:
        return self.states[-1]

    def at(self, t) -> np.ndarray:
        """Interpolate the state at time(s) ``t`` inside the integrated span."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        lo, hi = self.times[0], self.times[-1]
        span = hi - lo
        if np.any(t < lo - 1e-12 * abs(span)) or np.any(t > hi + 1e-12 * abs(span)):
            raise ValueError("requested time outside the integrated span")
        i = np.clip(np.searchsorted(self.times, t, side="right") - 1, 0, len(self.times) - 2)
        t0, t1 = self.times[i], self.times[i + 1]
        h = t1 - t0
        s = ((t - t0) / h)[:, None]
        y0, y1 = self.states[i], self.states[i + 1]
        f0, f1 = self.derivatives[i] * h[:, None], self.derivatives[i + 1] * h[:, None]
        h00 = 2 * s**3 - 3 * s**2 + 1
        h10 = s**3 - 2 * s**2 + s
        h01 = -2 * s**3 + 3 * s**2
        h11 = s**3 - s**2
        return h00 * y0 + h10 * f0 + h01 * y1 + h11 * f1


def _stage_values(f, t, y, h, k1):
    k = [k1]
    for i in range(1, 7):
        yi = y + h * sum(a * kj for a, kj in zip(_A[i], k))
        k.append(np.asarray(f(t + _C[i] * h, yi), dtype=float))
    return k


def _initial_step(f, t0, y0, f0, tol, direction):
    sc = tol + tol * np.abs(y0)
    d0 = np.sqrt(np.mean((y0 / sc) ** 2))
    d1 = np.sqrt(np.mean((f0 / sc) ** 2))
    h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    y1 = y0 + direction * h0 * f0
    f1 = np.asarray(f(t0 + direction * h0, y1), dtype=float)
    d2 = np.sqrt(np.mean(((f1 - f0) / sc) ** 2)) / h0
    if max(d1, d2) <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** 0.2
    return min(100 * h0, h1)


def integrate(
    field, x0, t0: float, t1: float, tol: float = 1e-10, step: float | None = None, max_steps: int = MAX_STEPS
) -> Trajectory:
    """Integrate ``field`` from ``(t0, x0)`` to ``t1``.

    ``tol`` is used as both the absolute and the relative local error bound.
    Passing ``step`` switches to fixed steps of (at most) that size with no
    error control; this exists for convergence-order checks.

    Raises
    ------
    IntegrationError
        If the step size underflows or the step budget is exhausted.  The
        exception's ``trajectory`` holds everything accepted so far.
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    if not t1 > t0:
        raise ValueError("t1 must exceed t0")
    f = field
    y = np.array(x0, dtype=float)
    t = float(t0)
    fy = np.asarray(f(t, y), dtype=float)
    times, states, derivs = [t], [y.copy()], [fy.copy()]

    def partial():
        return Trajectory(np.array(times), np.array(states), np.array(derivs), tol)

    if step is not None:
        n = max(1, math.ceil((t1 - t0) / step))
        h = (t1 - t0) / n
        for i in range(n):
            k = _stage_values(f, t, y, h, fy)
            y = y + h * sum(b * kj for b, kj in zip(_B, k))
            t = t0 + (i + 1) * h
            fy = k[6] if i < n - 1 else np.asarray(f(t, y), dtype=float)
            times.append(t)
            states.append(y.copy())
            derivs.append(fy.copy())
        return partial()

    h = min(_initial_step(f, t, y, fy, tol, 1.0), t1 - t)
    err_old = 1e-4
    rejected = False
    for _ in range(max_steps):
        if t + h > t1:
            h = t1 - t
        if h < 1e-14 * max(1.0, abs(t)):
            raise IntegrationError(f"step size underflow at t={t:.17g}", partial())
        k = _stage_values(f, t, y, h, fy)
        y_new = y + h * sum(b * kj for b, kj in zip(_B, k))
        err_vec = h * sum(e * kj for e, kj in zip(_E, k))
        sc = tol + tol * np.maximum(np.abs(y), np.abs(y_new))
        err = math.sqrt(float(np.mean((err_vec / sc) ** 2)))
        if not math.isfinite(err):
            h *= FAC_MIN
            rejected = True
            continue
        if err <= 1.0:
            fac = SAFETY * err ** (PI_BETA * 0.75 - 0.2) * err_old**PI_BETA if err > 0 else FAC_MAX
            fac = min(FAC_MAX, max(FAC_MIN, fac))
            if rejected:
                fac = min(1.0, fac)
            t = t1 if t + h >= t1 else t + h
            y = y_new
            fy = k[6]
            times.append(t)
            states.append(y.copy())
            derivs.append(fy.copy())
            if t >= t1:
                return partial()
            err_old = max(err, 1e-4)
            h *= fac
            rejected = False
        else:
            h *= max(FAC_MIN, SAFETY * err ** -0.2)
            rejected = True
    raise IntegrationError("step budget exhausted", partial())


def forced_field(system, eps: float, phi0: float = 0.0) -> VectorField:
    """The forced planar field with the forcing phase started at ``phi0``."""
    nu = system.nu
    a = getattr(system, "a", None)
    if a is not None and hasattr(system, "delta"):
        beta, delta = system.beta, system.delta

        # Scalar Duffing right-hand side; avoids array dispatch in the hot loop.
        def rhs(t, x):
            x1, x2 = x
            return np.array([x2, a * x1 - x1**3 + eps * (beta * math.cos(nu * t + phi0) - delta * x2)])

        return VectorField(2, rhs, is_autonomous=eps == 0.0)

    def rhs(t, x):
        return system.hamiltonian_field(x) + eps * system.u(x, nu * t + phi0)

    return VectorField(2, rhs, is_autonomous=eps == 0.0)


def stroboscopic_map(system, eps: float, x0, phi0: float, tol: float = 1e-12) -> np.ndarray:
    """State after one forcing period ``2*pi/nu`` from ``(x0, phase=phi0)``."""
    if not system.nu > 0:
        raise ValueError("forcing frequency must be positive")
    traj = integrate(forced_field(system, eps, phi0), x0, 0.0, 2 * math.pi / system.nu, tol)
    return traj.final


@dataclass(frozen=True)
class ShootingResult:
    point: np.ndarray
    converged: bool
    residual: float
    iterations: int
    degenerate: bool
    condition: float


def newton_shoot_periodic(
    system,
    eps: float,
    guess,
    phi0: float,
    periods: int = 1,
    tol: float = 1e-9,
    max_iter: int = 25,
    ode_tol: float = 1e-13,
    max_steps: int = 20_000,
) -> ShootingResult:
    """Find a fixed point of the ``periods``-fold stroboscopic map at ``phi0``.

    The Jacobian of ``P**periods - id`` is taken by forward differences with
    step ``1e-6 * (1 + |y|)``.  A condition number above 1e12 marks the
    problem as degenerate (the whole unperturbed family is periodic); no
    Newton step is attempted then.  A converged point of an autonomous field
    is always flagged: the flow direction lies in the kernel.

    The map is evaluated with fixed steps, as many as an adaptive pilot run
    at ``ode_tol`` from ``guess`` needed (times 1.5).  A fixed mesh makes the
    map smooth in the initial point, which the finite-difference Jacobian
    relies on.
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    y = np.array(guess, dtype=float)
    if not np.all(np.isfinite(y)):
        raise ValueError("guess must be finite")
    period = 2 * math.pi * periods / system.nu
    vf = forced_field(system, eps, phi0)

    try:
        pilot = integrate(vf, y, 0.0, period, ode_tol, max_steps=max_steps)
    except IntegrationError:
        return ShootingResult(y, False, math.inf, 0, False, math.nan)
    fixed_step = period / math.ceil(1.5 * (len(pilot.times) - 1))

    def residual_map(z):
        with np.errstate(over="ignore", invalid="ignore"):
            end = integrate(vf, z, 0.0, period, ode_tol, step=fixed_step).final
        return end - z if np.all(np.isfinite(end)) else np.full_like(z, np.inf)

    g = residual_map(y)
    cond = math.nan
    for it in range(max_iter + 1):
        res = float(np.linalg.norm(g))
        if not math.isfinite(res):
            return ShootingResult(y, False, res, it, False, cond)
        h = 1e-6 * (1.0 + float(np.linalg.norm(y)))
        jac = np.empty((y.size, y.size))
        for j in range(y.size):
            yj = y.copy()
            yj[j] += h
            jac[:, j] = (residual_map(yj) - g) / h
        if not np.all(np.isfinite(jac)):
            return ShootingResult(y, False, res, it, False, cond)
        cond = float(np.linalg.cond(jac))
        # An autonomous flow maps f(y) to f(P(y)), so at a periodic point f(y)
        # spans the kernel of DP - I exactly, whatever the differenced estimate says.
        degenerate = cond > 1e12 or (vf.is_autonomous and res < tol)
        if res < tol:
            return ShootingResult(y, True, res, it, degenerate, cond)
        if degenerate or it == max_iter:
            return ShootingResult(y, False, res, it, degenerate, cond)
        delta = np.linalg.solve(jac, -g)
        # Backtrack so a bad linearisation cannot throw the iterate away.
        lam = 1.0
        while lam > 1e-4:
            trial = y + lam * delta
            g_trial = residual_map(trial)
            if np.linalg.norm(g_trial) < res:
                break
            lam *= 0.5
        else:
            return ShootingResult(y, False, res, it + 1, degenerate, cond)
        y, g = trial, g_trial
    return ShootingResult(y, False, float(np.linalg.norm(g)), max_iter, False, cond)
