"""State-space models of the nonlinear series and parallel resonators.

All dimensionless models share the drive g(t) = A + B*sin(omega_n * t)
and the state convention (x, y[, z]) = (capacitor voltage, scaled
inductor current[, scaled device coordinate]). The dimensional models
use SI units and map onto the dimensionless ones through ``normalize``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .nonlinearity import Nonlinearity, diode_current, invert


@dataclass(frozen=True)
class SeriesConfig:
    """Dimensionless series resonator parameters.

    A, B: drive offset and amplitude; b: damping/coupling ratio
    (R^2*C/L); omega_n: normalized drive frequency; nl: device law.
    """

    A: float
    B: float
    b: float
    omega_n: float
    nl: Nonlinearity = field(default_factory=Nonlinearity.none)

    def __post_init__(self):
        if self.b <= 0:
            raise ValueError("b must be > 0")
        if self.omega_n <= 0:
            raise ValueError("omega_n must be > 0")
        if self.B < 0:
            raise ValueError("B must be >= 0")

    @property
    def period(self) -> float:
        return 2.0 * math.pi / self.omega_n

    @property
    def dim(self) -> int:
        return 2

    def excitation(self, t):
        return excitation(self, t)


@dataclass(frozen=True)
class ParallelConfig:
    """Dimensionless parallel resonator parameters.

    epsilon is the parasitic-to-main capacitance ratio; epsilon = 0
    selects the reduced (slaved fast state) model.
    """

    A: float
    B: float
    b: float
    omega_n: float
    nl: Nonlinearity = field(default_factory=Nonlinearity.none)
    epsilon: float = 0.01

    def __post_init__(self):
        if self.b <= 0:
            raise ValueError("b must be > 0")
        if self.omega_n <= 0:
            raise ValueError("omega_n must be > 0")
        if self.B < 0:
            raise ValueError("B must be >= 0")
        if self.epsilon < 0:
            raise ValueError("epsilon must be >= 0")

    @property
    def period(self) -> float:
        return 2.0 * math.pi / self.omega_n

    @property
    def reduced(self) -> bool:
        return self.epsilon == 0.0

    @property
    def dim(self) -> int:
        return 2 if self.reduced else 3

    def excitation(self, t):
        return excitation(self, t)


@dataclass(frozen=True)
class DimensionalConfig:
    """Physical component values for either resonator topology.

    Units: ohms, henries, farads, volts, rad/s. ``diode`` selects the
    device ("single" or "anti_parallel"); ``c_p`` only matters for the
    parallel topology.
    """

    r: float
    l: float
    c: float
    r_d: float
    v_gamma: float
    v_dc: float
    v_a: float
    omega: float
    topology: str = "series"
    diode: str = "single"
    c_p: float = 0.0

    def __post_init__(self):
        for name in ("r", "l", "c", "r_d", "v_gamma", "omega"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be strictly positive")
        if self.c_p < 0:
            raise ValueError("c_p must be >= 0")
        if self.topology not in ("series", "parallel"):
            raise ValueError("topology must be 'series' or 'parallel'")
        if self.diode not in ("single", "anti_parallel"):
            raise ValueError("diode must be 'single' or 'anti_parallel'")

    @property
    def period(self) -> float:
        return 2.0 * math.pi / self.omega

    @property
    def dim(self) -> int:
        return 2 if self.topology == "series" else 3

    def excitation(self, t):
        return self.v_dc + self.v_a * np.sin(self.omega * np.asarray(t, dtype=float)) \
            if not np.isscalar(t) else self.v_dc + self.v_a * math.sin(self.omega * t)


@dataclass(frozen=True)
class Normalization:
    """Result of converting a dimensional configuration to dimensionless form."""

    config: SeriesConfig | ParallelConfig
    omega_r: float
    bandwidth: float
    time_scale: float       # seconds of physical time per dimensionless time unit (R*C)
    voltage_scale: float    # volts per unit of x or g (v_gamma)
    current_scale: float    # amperes per unit of y (v_gamma / R)


def excitation(cfg, t):
    """Drive waveform g(t) = A + B*sin(omega_n * t); scalar or array ``t``."""
    if np.isscalar(t) or isinstance(t, float):
        return cfg.A + cfg.B * math.sin(cfg.omega_n * t)
    t = np.asarray(t, dtype=float)
    return cfg.A + cfg.B * np.sin(cfg.omega_n * t)


def series_rhs(cfg: SeriesConfig, t: float, s) -> np.ndarray:
    """Time derivative of (x, y) for the series resonator."""
    x, y = s[0], s[1]
    g = cfg.A + cfg.B * math.sin(cfg.omega_n * t)
    return np.array((y - cfg.nl(x), cfg.b * (g - y - x)))


def parallel_rhs(cfg: ParallelConfig, t: float, s) -> np.ndarray:
    """Time derivative of (x, y, z) for the full parallel resonator (epsilon > 0)."""
    if cfg.epsilon <= 0:
        raise ValueError("epsilon must be > 0 for the full model; use parallel_reduced_rhs")
    x, y, z = s[0], s[1], s[2]
    g = cfg.A + cfg.B * math.sin(cfg.omega_n * t)
    return np.array((g - x - y, cfg.b * (x - z), (y - cfg.nl(z)) / cfg.epsilon))


def parallel_reduced_rhs(cfg: ParallelConfig, t: float, s) -> np.ndarray:
    """Time derivative of (x, y) for the reduced parallel model (epsilon -> 0).

    The fast state is slaved to y = f(z); z is recovered branch-wise via
    ``nonlinearity.invert`` with the dead zone resolved from x.
    """
    x, y = s[0], s[1]
    g = cfg.A + cfg.B * math.sin(cfg.omega_n * t)
    z = invert(cfg.nl, y, x_hint=x)
    return np.array((g - x - y, cfg.b * (x - z)))


def make_rhs(cfg):
    """Build a fast closure rhs(t, s) -> ndarray for any config type.

    Dispatches on the config class; for ``ParallelConfig`` the reduced
    model is selected automatically when epsilon == 0.
    """
    if isinstance(cfg, DimensionalConfig):
        return _make_dimensional_rhs(cfg)
    sin = math.sin
    A, B, b, wn = cfg.A, cfg.B, cfg.b, cfg.omega_n
    f = cfg.nl.scalar()
    if isinstance(cfg, SeriesConfig):
        def rhs(t, s):
            x = s[0]
            y = s[1]
            g = A + B * sin(wn * t)
            return np.array((y - f(x), b * (g - y - x)))
        return rhs
    if not isinstance(cfg, ParallelConfig):
        raise TypeError(f"unsupported config type {type(cfg)!r}")
    if cfg.reduced:
        nl = cfg.nl
        if nl.kind == "none":
            raise ValueError("reduced parallel model needs an invertible nonlinearity")
        inv = invert

        def rhs(t, s):
            x = s[0]
            y = s[1]
            g = A + B * sin(wn * t)
            z = inv(nl, y, x_hint=x)
            return np.array((g - x - y, b * (x - z)))
        return rhs
    eps = cfg.epsilon

    def rhs(t, s):
        x = s[0]
        y = s[1]
        z = s[2]
        g = A + B * sin(wn * t)
        return np.array((g - x - y, b * (x - z), (y - f(z)) / eps))
    return rhs


def _make_dimensional_rhs(d: DimensionalConfig):
    sin = math.sin
    anti = d.diode == "anti_parallel"
    r, l, c, r_d, vg = d.r, d.l, d.c, d.r_d, d.v_gamma
    vdc, va, w = d.v_dc, d.v_a, d.omega
    if d.topology == "series":
        def rhs(t, s):
            v_c = s[0]
            i_l = s[1]
            v_in = vdc + va * sin(w * t)
            i_f = diode_current(v_c, vg, r_d, anti)
            return np.array(((i_l - i_f) / c, (v_in - r * i_l - v_c) / l))
        return rhs
    if d.c_p <= 0:
        raise ValueError("parallel dimensional model needs c_p > 0")
    c_p = d.c_p

    def rhs(t, s):
        v_c = s[0]
        i_l = s[1]
        v_cp = s[2]
        v_in = vdc + va * sin(w * t)
        i_f = diode_current(v_cp, vg, r_d, anti)
        return np.array(((v_in - v_c - i_l * r) / (r * c),
                         (v_c - v_cp) / l,
                         (i_l - i_f) / c_p))
    return rhs


def normalize(d: DimensionalConfig) -> Normalization:
    """Convert physical component values to the dimensionless parameter set.

    Returns the dimensionless config together with the resonance frequency
    1/sqrt(L*C), the bandwidth R/L and the scale factors of the variable
    map (x = v_C/v_gamma, y = R*i_L/v_gamma, t_n = t/(R*C)).

    The normalized frequency is computed as omega*R*C and cross-checked
    against the equivalent form omega * BW / omega_r^2; a relative
    mismatch above 1e-12 indicates corrupted inputs and raises.
    """
    a = d.r / d.r_d
    b = d.r * d.r * d.c / d.l
    big_a = d.v_dc / d.v_gamma
    big_b = d.v_a / d.v_gamma
    omega_n = d.omega * d.r * d.c
    omega_r = 1.0 / math.sqrt(d.l * d.c)
    bandwidth = d.r / d.l
    alt = d.omega * bandwidth / (omega_r * omega_r)
    if abs(alt - omega_n) > 1e-12 * abs(omega_n):
        raise ValueError(
            f"normalized-frequency identity violated: omega*R*C={omega_n!r} "
            f"vs omega*BW/omega_r^2={alt!r}")
    nl_kind = "single_diode" if d.diode == "single" else "anti_parallel"
    nl = Nonlinearity(nl_kind, a=a)
    if d.topology == "series":
        cfg = SeriesConfig(A=big_a, B=big_b, b=b, omega_n=omega_n, nl=nl)
    else:
        cfg = ParallelConfig(A=big_a, B=big_b, b=b, omega_n=omega_n, nl=nl,
                             epsilon=d.c_p / d.c)
    return Normalization(
        config=cfg,
        omega_r=omega_r,
        bandwidth=bandwidth,
        time_scale=d.r * d.c,
        voltage_scale=d.v_gamma,
        current_scale=d.v_gamma / d.r,
    )


def dimensionless_states(d: DimensionalConfig, states: np.ndarray) -> np.ndarray:
    """Map dimensional state columns (v_C, i_L[, v_Cp]) onto (x, y[, z])."""
    states = np.asarray(states, dtype=float)
    out = np.empty_like(states)
    out[..., 0] = states[..., 0] / d.v_gamma
    out[..., 1] = states[..., 1] * d.r / d.v_gamma
    if states.shape[-1] > 2:
        out[..., 2] = states[..., 2] / d.v_gamma
    return out
