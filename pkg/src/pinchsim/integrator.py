"""Adaptive Dormand-Prince 5(4) integrator with dense uniform-grid output.

Explicit embedded pair (the classic "ode45" coefficients) with a PI
step-size controller and a free 4th-order interpolant, so state samples
land on an exact uniform grid regardless of the internally chosen steps.
The piecewise-linear device corners are handled purely by error control:
steps straddling a corner get rejected and shrunk until the local error
estimate passes, which keeps the integrator free of event logic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

# Butcher tableau, 5th-order weights, embedded error weights and the
# dense-output quartic coefficients of the Dormand-Prince 5(4) pair.
_C = (0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0)
_A = (
    (),
    (1.0 / 5.0,),
    (3.0 / 40.0, 9.0 / 40.0),
    (44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0),
    (19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0),
    (9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0),
    (35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0),
)
_E = np.array([71.0 / 57600.0, 0.0, -71.0 / 16695.0, 71.0 / 1920.0,
               -17253.0 / 339200.0, 22.0 / 525.0, -1.0 / 40.0])
_D = np.array([-12715105075.0 / 11282082432.0, 0.0, 87487479700.0 / 32700410799.0,
               -10690763975.0 / 1880347072.0, 701980252875.0 / 199316789632.0,
               -1453857185.0 / 822651844.0, 69997945.0 / 29380423.0])

_A_ROWS = tuple(np.array(row) for row in _A)

_SAFETY = 0.9
_BETA = 0.04                  # PI stabilization exponent
_EXPO1 = 0.2 - 0.75 * _BETA
_MAX_GROWTH = 10.0            # per-step limits on step-size change
_MAX_SHRINK = 0.2


class IntegrationError(RuntimeError):
    """Raised when a solve cannot continue (step exhaustion, non-finite state)."""

    def __init__(self, message: str, time: float):
        super().__init__(f"{message} (at t = {time!r})")
        self.time = time


@dataclass(frozen=True)
class IntegratorSettings:
    """Error-control knobs for the adaptive solver."""

    rel_tol: float = 1e-8
    abs_tol: float = 1e-10
    max_step: float = math.inf
    initial_step: Optional[float] = None
    max_steps: int = 10_000_000

    def __post_init__(self):
        if not (0.0 < self.rel_tol < 1.0):
            raise ValueError("rel_tol must lie in (0, 1)")
        if self.abs_tol <= 0.0:
            raise ValueError("abs_tol must be > 0")
        if self.max_step <= 0.0:
            raise ValueError("max_step must be > 0")
        if self.max_steps < 1:
            raise ValueError("max_steps must be >= 1")


@dataclass
class Trajectory:
    """Uniformly sampled solution: times, state rows and the drive waveform."""

    t: np.ndarray
    states: np.ndarray
    excitation: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.t = np.asarray(self.t, dtype=float)
        self.states = np.asarray(self.states, dtype=float)
        self.excitation = np.asarray(self.excitation, dtype=float)
        if len(self.t) != len(self.states) or len(self.t) != len(self.excitation):
            raise ValueError("t, states and excitation must have equal length")

    def __len__(self):
        return len(self.t)

    @property
    def samples_per_period(self) -> int:
        return int(self.meta["samples_per_period"])

    @property
    def periods(self) -> int:
        return (len(self.t) - 1) // self.samples_per_period

    def state_column(self, index: int) -> np.ndarray:
        return self.states[:, index]


def _initial_step(rhs, t0, s0, f0, direction, rel_tol, abs_tol, max_step):
    # Hairer-style starting step from the first two derivative samples.
    scale = abs_tol + rel_tol * np.abs(s0)
    d0 = math.sqrt(float(np.mean((s0 / scale) ** 2)))
    d1 = math.sqrt(float(np.mean((f0 / scale) ** 2)))
    h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    h0 = min(h0, max_step)
    s1 = s0 + h0 * direction * f0
    f1 = rhs(t0 + h0 * direction, s1)
    d2 = math.sqrt(float(np.mean(((f1 - f0) / scale) ** 2))) / h0
    if max(d1, d2) <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** 0.2
    return min(100.0 * h0, h1, max_step)


def integrate(
    rhs: Callable[[float, np.ndarray], np.ndarray],
    s0,
    t_span,
    samples_per_period: int = 1024,
    period: Optional[float] = None,
    excitation: Optional[Callable] = None,
    settings: Optional[IntegratorSettings] = None,
    meta: Optional[dict] = None,
) -> Trajectory:
    """Integrate rhs(t, s) over t_span onto a uniform per-period grid.

    Parameters
    ----------
    rhs: callable
        Derivative function returning an array of the same shape as the state.
    s0: array-like
        Initial state.
    t_span: (float, float)
        Ordered integration window. Its length must be an integer number of
        periods (within roundoff) so the grid tiles exactly.
    samples_per_period: int
        Number of uniform output samples per period, at least 64.
    period: float, optional
        Output grid period; defaults to the whole span.
    excitation: callable, optional
        Drive waveform g(t) evaluated on the output grid (zeros if omitted).
    settings: IntegratorSettings, optional
    meta: dict, optional
        Extra metadata merged into the returned trajectory.

    Raises ``IntegrationError`` on step exhaustion or non-finite states.
    """
    settings = settings or IntegratorSettings()
    t0, t1 = float(t_span[0]), float(t_span[1])
    if not t1 > t0:
        raise ValueError("t_span must be ordered and non-empty")
    if samples_per_period < 64:
        raise ValueError("samples_per_period must be >= 64")
    span = t1 - t0
    if period is None:
        period = span
    n_periods = span / period
    n_periods_i = round(n_periods)
    if n_periods_i < 1 or abs(n_periods - n_periods_i) > 1e-9 * max(1.0, n_periods):
        raise ValueError("t_span length must be an integer number of periods")
    n_out = n_periods_i * samples_per_period
    # Building the grid from indices keeps it exactly uniform and monotone.
    t_grid = t0 + (span / n_out) * np.arange(n_out + 1)
    t_grid[-1] = t1

    s0 = np.asarray(s0, dtype=float)
    if s0.ndim != 1:
        raise ValueError("state must be a 1-D vector")
    n = s0.size
    out = np.empty((n_out + 1, n))
    out[0] = s0

    rel_tol, abs_tol = settings.rel_tol, settings.abs_tol
    max_step = settings.max_step
    t = t0
    y = s0.copy()
    f0 = rhs(t, y)
    if not np.all(np.isfinite(f0)):
        raise IntegrationError("non-finite derivative at the initial state", t)
    h = settings.initial_step or _initial_step(rhs, t, y, f0, 1.0, rel_tol, abs_tol, max_step)
    h = min(h, max_step, span)

    K = np.empty((7, n))
    K[0] = f0
    fac_old = 1e-4
    n_attempts = 0
    idx = 1  # next output slot to fill

    while t < t1:
        if n_attempts >= settings.max_steps:
            raise IntegrationError(
                f"step budget of {settings.max_steps} exhausted", t)
        n_attempts += 1
        h = min(h, t1 - t)
        if h < 1e-14 * max(1.0, abs(t)):
            raise IntegrationError("step size underflow (problem too stiff or discontinuous)", t)

        for i in range(1, 6):
            K[i] = rhs(t + _C[i] * h, y + h * (_A_ROWS[i] @ K[:i]))
        y_new = y + h * (_A_ROWS[6] @ K[:6])
        t_new = t + h
        K[6] = rhs(t_new, y_new)

        finite = np.all(np.isfinite(y_new)) and np.all(np.isfinite(K[6]))
        if finite:
            err_vec = h * (_E @ K)
            scale = abs_tol + rel_tol * np.maximum(np.abs(y), np.abs(y_new))
            err = math.sqrt(float(np.mean((err_vec / scale) ** 2)))
        else:
            err = math.inf

        if err <= 1.0:
            # accepted: fill any grid points inside (t, t_new] from the
            # quartic interpolant, then advance with the FSAL derivative
            if idx <= n_out and t_grid[idx] <= t_new:
                dy = y_new - y
                r1 = y
                r2 = dy
                r3 = h * K[0] - dy
                r4 = dy - h * K[6] - r3
                r5 = h * (_D @ K)
                while idx <= n_out and t_grid[idx] <= t_new:
                    theta = (t_grid[idx] - t) / h
                    out[idx] = r1 + theta * (r2 + (1.0 - theta) * (r3 + theta * (r4 + (1.0 - theta) * r5)))
                    idx += 1
            y, t = y_new, t_new
            K[0] = K[6]
            fac11 = err ** _EXPO1
            fac = fac11 / (fac_old ** _BETA)
            fac = max(1.0 / _MAX_GROWTH, min(1.0 / _MAX_SHRINK, fac / _SAFETY))
            h = min(h / fac, max_step)
            fac_old = max(err, 1e-4)
        elif not finite:
            h *= 0.5
        else:
            fac11 = err ** _EXPO1
            h = h / min(1.0 / _MAX_SHRINK, fac11 / _SAFETY)

    out[n_out] = y  # the last accepted step always lands exactly on t1
    if idx <= n_out:
        # interior points at t1 already covered; defensive fill for roundoff
        for j in range(idx, n_out):
            out[j] = y
    if excitation is not None:
        drive = np.asarray(excitation(t_grid), dtype=float)
    else:
        drive = np.zeros_like(t_grid)
    info = {
        "samples_per_period": samples_per_period,
        "period": period,
        "rel_tol": rel_tol,
        "abs_tol": abs_tol,
        "max_step": max_step,
        "steps_attempted": n_attempts,
    }
    if meta:
        info.update(meta)
    return Trajectory(t=t_grid, states=out, excitation=drive, meta=info)


def simulate(cfg, periods: int, samples_per_period: int = 1024,
             s0=None, settings: Optional[IntegratorSettings] = None,
             t0: float = 0.0) -> Trajectory:
    """Integrate a circuit config for a whole number of drive periods.

    The right-hand side, period and drive waveform are derived from the
    config (any of SeriesConfig / ParallelConfig / DimensionalConfig);
    the initial state defaults to rest (zeros).
    """
    from .circuits import make_rhs  # local import keeps module deps one-way

    if periods < 1:
        raise ValueError("periods must be >= 1")
    rhs = make_rhs(cfg)
    if s0 is None:
        s0 = np.zeros(cfg.dim)
    period = cfg.period
    traj = integrate(
        rhs,
        s0,
        (t0, t0 + periods * period),
        samples_per_period=samples_per_period,
        period=period,
        excitation=cfg.excitation,
        settings=settings,
        meta={"config": cfg, "omega_n": getattr(cfg, "omega_n", getattr(cfg, "omega", None))},
    )
    return traj
