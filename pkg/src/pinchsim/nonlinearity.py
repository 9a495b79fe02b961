"""Switching nonlinearities used by the resonator models.

The dimensionless device law f(x) comes in four flavors: a hard zero
(``none``), a one-sided diode ramp (``single_diode``), an odd dead-zone
ramp built from two opposed diodes (``anti_parallel``) and a smooth odd
cubic (``cubic``). The piecewise kinds are exact, continuous at the
breakpoints x = +/-1 and are evaluated without any corner smoothing.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

KINDS = ("none", "single_diode", "anti_parallel", "cubic")


@dataclass(frozen=True)
class Nonlinearity:
    """Dimensionless switching law f(x).

    Parameters
    ----------
    kind: str
        One of ``none``, ``single_diode``, ``anti_parallel``, ``cubic``.
    a: float
        Slope of the conducting branch (ratio of series resistance to
        device on-resistance). Used by the diode kinds, must be >= 0.
    k: float
        Cubic coefficient, used by the ``cubic`` kind only, must be >= 0.
    """

    kind: str
    a: float = 1.0
    k: float = 1.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown nonlinearity kind {self.kind!r}, expected one of {KINDS}")
        if self.a < 0:
            raise ValueError("slope a must be >= 0")
        if self.k < 0:
            raise ValueError("cubic coefficient k must be >= 0")

    @classmethod
    def none(cls) -> "Nonlinearity":
        return cls("none")

    @classmethod
    def single_diode(cls, a: float = 1.0) -> "Nonlinearity":
        return cls("single_diode", a=a)

    @classmethod
    def anti_parallel(cls, a: float = 1.0) -> "Nonlinearity":
        return cls("anti_parallel", a=a)

    @classmethod
    def cubic(cls, k: float = 1.0) -> "Nonlinearity":
        return cls("cubic", k=k)

    @property
    def odd(self) -> bool:
        return self.kind in ("none", "anti_parallel", "cubic")

    def __call__(self, x):
        """Evaluate f(x). Accepts scalars or numpy arrays."""
        if np.isscalar(x) or isinstance(x, float):
            return self.scalar()(float(x))
        x = np.asarray(x, dtype=float)
        if self.kind == "none":
            return np.zeros_like(x)
        if self.kind == "single_diode":
            return np.where(x >= 1.0, self.a * (x - 1.0), 0.0)
        if self.kind == "anti_parallel":
            return np.where(x >= 1.0, self.a * (x - 1.0),
                            np.where(x <= -1.0, self.a * (x + 1.0), 0.0))
        return self.k * x ** 3

    def scalar(self):
        """Return a plain float->float evaluator (fast path for ODE right-hand sides)."""
        if self.kind == "none":
            return lambda x: 0.0
        a = self.a
        if self.kind == "single_diode":
            return lambda x: a * (x - 1.0) if x >= 1.0 else 0.0
        if self.kind == "anti_parallel":
            def f(x, a=a):
                if x >= 1.0:
                    return a * (x - 1.0)
                if x <= -1.0:
                    return a * (x + 1.0)
                return 0.0
            return f
        k = self.k
        return lambda x: k * x * x * x


def evaluate(nl: Nonlinearity, x):
    """Functional alias for ``nl(x)``."""
    return nl(x)


def diode_current(v_d: float, v_gamma: float, r_d: float, antiparallel: bool = False) -> float:
    """Dimensional current through the switching device.

    Single diode: (v_d - v_gamma) / r_d once v_d reaches the switch-on
    voltage, zero below it. Anti-parallel pair: same ramp mirrored with
    odd symmetry, zero inside the dead zone |v_d| < v_gamma.

    Raises ``ValueError`` for non-positive ``v_gamma`` or ``r_d``.
    """
    if v_gamma <= 0:
        raise ValueError("switch-on voltage v_gamma must be positive")
    if r_d <= 0:
        raise ValueError("on-resistance r_d must be positive")
    if v_d >= v_gamma:
        return (v_d - v_gamma) / r_d
    if antiparallel and v_d <= -v_gamma:
        return (v_d + v_gamma) / r_d
    return 0.0


def invert(nl: Nonlinearity, y: float, x_hint: float = 0.0) -> float:
    """Solve y = f(z) for z on the active branch.

    Used by the reduced parallel model where the fast state is slaved to
    the algebraic constraint. For the diode kinds the dead zone makes the
    inverse set-valued at y = 0; the hint (current slow-state value) picks
    the quasi-static point, clamped to the dead zone:

    * ``anti_parallel``: z = y/a + 1 for y > 0, z = y/a - 1 for y < 0,
      otherwise z = clamp(x_hint, -1, 1).
    * ``single_diode``: z = y/a + 1 for y > 0; y <= 0 collapses onto the
      dead zone z = min(x_hint, 1) (negative y has no preimage and is
      treated as dead, see the reduced-model notes).
    * ``cubic``: exact odd cube root.

    ``none`` is not invertible and raises ``ValueError``.
    """
    if nl.kind == "none":
        raise ValueError("f = 0 has no invertible branch; use the full model")
    if nl.kind == "cubic":
        return math.copysign(abs(y / nl.k) ** (1.0 / 3.0), y)
    a = nl.a
    if a == 0:
        raise ValueError("zero-slope diode branch is not invertible")
    if nl.kind == "single_diode":
        if y > 0.0:
            return y / a + 1.0
        return min(x_hint, 1.0)
    if y > 0.0:
        return y / a + 1.0
    if y < 0.0:
        return y / a - 1.0
    return min(1.0, max(-1.0, x_hint))
