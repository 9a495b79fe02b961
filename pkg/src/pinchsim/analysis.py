"""Loop geometry and spectral analysis of steady-state trajectories.

Turns a settled trajectory into a closed drive-vs-current Lissajous
polyline, finds its transversal self-intersections (pinch points),
splits it into lobes and measures their areas, extracts the harmonic
spectrum relative to the sine drive and evaluates the harmonic
phase-shift observability criterion.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .integrator import Trajectory

TWO_PI = 2.0 * math.pi


class SteadyStateError(RuntimeError):
    """Trajectory has not settled onto a periodic orbit within tolerance."""


class PhaseCriterionUndefined(RuntimeError):
    """The pinch-generating harmonic is too weak for a phase verdict."""


@dataclass
class LissajousLoop:
    """Closed polyline (u, w) over exactly one steady-state period.

    ``points[0] == points[-1]`` exactly; ``t`` carries the curve
    parameter of every vertex with t[-1] = t[0] + period.
    """

    points: np.ndarray
    t: np.ndarray
    period: float
    closure_residual: float = 0.0
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=float)
        self.t = np.asarray(self.t, dtype=float)
        if self.points.ndim != 2 or self.points.shape[1] != 2:
            raise ValueError("points must be an (n, 2) array")
        if len(self.points) != len(self.t):
            raise ValueError("points and t must have equal length")
        if len(self.points) < 257:
            raise ValueError("a loop needs at least 256 segments")

    @property
    def u(self) -> np.ndarray:
        return self.points[:, 0]

    @property
    def w(self) -> np.ndarray:
        return self.points[:, 1]

    def diameter(self) -> float:
        lo = self.points.min(axis=0)
        hi = self.points.max(axis=0)
        return float(math.hypot(hi[0] - lo[0], hi[1] - lo[1]))


@dataclass(frozen=True)
class PinchPoint:
    """Transversal self-intersection: one location, two curve parameters."""

    location: tuple
    t1: float
    t2: float
    tangent_gap: float
    crossings: int = 1


@dataclass
class HarmonicSpectrum:
    """Per-harmonic amplitude and phase, sine-referenced to the drive."""

    omega_n: float
    amplitude: np.ndarray
    phase: np.ndarray

    @property
    def orders(self) -> np.ndarray:
        return np.arange(len(self.amplitude))


@dataclass
class PinchReport:
    """Bundle of loop diagnostics produced by the analysis pipeline."""

    pinch_points: list
    lobe_areas: list
    total_area: float
    signed_areas: list
    spectrum: Optional[HarmonicSpectrum]
    harmonic_order: Optional[int]
    phase_margin: Optional[float]
    phase_observable: Optional[bool]
    phase_undefined_reason: Optional[str]
    parameters: dict

    @property
    def pinch_count(self) -> int:
        return len(self.pinch_points)


def steady_loop(traj: Trajectory, discard_periods: int, check_periods: int = 2,
                tol: float = 1e-6) -> LissajousLoop:
    """Extract the final steady-state period of a trajectory as a closed loop.

    Drops the first ``discard_periods`` periods, then demands that every
    adjacent pair among the last ``check_periods + 1`` periods agrees
    pointwise to ``tol`` of each state component's range. Raises
    ``SteadyStateError`` when the orbit has not settled (integrate more
    periods or discard more).
    """
    spp = traj.samples_per_period
    n_p = traj.periods
    if check_periods < 1:
        raise ValueError("check_periods must be >= 1")
    if n_p < discard_periods + check_periods + 1:
        raise ValueError(
            f"trajectory spans {n_p} periods; need at least "
            f"{discard_periods + check_periods + 1}")
    states = traj.states
    n = len(states)
    ranges = states[discard_periods * spp:].max(axis=0) - states[discard_periods * spp:].min(axis=0)
    ranges = np.where(ranges > 0, ranges, 1.0)
    residual = 0.0
    for c in range(1, check_periods + 1):
        cur = states[n - c * spp - 1: n - (c - 1) * spp]
        prev = states[n - (c + 1) * spp - 1: n - c * spp]
        d = np.max(np.abs(cur - prev) / ranges)
        residual = max(residual, float(d))
    if residual > tol:
        raise SteadyStateError(
            f"periodicity residual {residual:.3e} exceeds tolerance {tol:.3e}; "
            "integrate longer or discard more periods")
    u = traj.excitation[-spp - 1:].copy()
    w = traj.states[-spp - 1:, 1].copy() if traj.states.shape[1] > 1 else traj.states[-spp - 1:, 0].copy()
    t = traj.t[-spp - 1:].copy()
    closure = float(math.hypot(u[-1] - u[0], w[-1] - w[0]))
    u[-1] = u[0]
    w[-1] = w[0]
    return LissajousLoop(
        points=np.column_stack([u, w]),
        t=t,
        period=float(traj.meta["period"]),
        closure_residual=closure,
        meta={"periodicity_residual": residual},
    )


def loop_from_points(u, w, t=None, period: Optional[float] = None,
                     closure_tol_rel: float = 1e-2, meta: Optional[dict] = None) -> LissajousLoop:
    """Build a closed loop from raw ordered samples, closing the polyline.

    Consecutive duplicate points are dropped. If the trace does not end
    at its starting point the gap must stay below ``closure_tol_rel`` of
    the loop diameter, otherwise a ValueError is raised; the start point
    is then appended to close the polyline.
    """
    u = np.asarray(u, dtype=float)
    w = np.asarray(w, dtype=float)
    if t is None:
        t = np.arange(len(u), dtype=float)
    t = np.asarray(t, dtype=float)
    keep = np.ones(len(u), dtype=bool)
    keep[1:] = (np.diff(u) != 0) | (np.diff(w) != 0)
    dropped = int(len(u) - keep.sum())
    u, w, t = u[keep], w[keep], t[keep]
    lo_u, hi_u = u.min(), u.max()
    lo_w, hi_w = w.min(), w.max()
    diag = math.hypot(hi_u - lo_u, hi_w - lo_w)
    if diag == 0.0:
        raise ValueError("degenerate trace: zero diameter")
    gap = math.hypot(u[-1] - u[0], w[-1] - w[0])
    if gap > closure_tol_rel * diag:
        raise ValueError(
            f"trace is not closed: endpoint gap {gap:.3g} exceeds "
            f"{closure_tol_rel:.3g} of the loop diameter {diag:.3g}")
    dt = float(np.median(np.diff(t))) if len(t) > 1 else 1.0
    if gap > 0.0:
        u = np.append(u, u[0])
        w = np.append(w, w[0])
        t = np.append(t, t[-1] + dt)
    else:
        u[-1] = u[0]
        w[-1] = w[0]
    if period is None:
        period = float(t[-1] - t[0])
    info = {"deduplicated": dropped, "closure_gap": gap}
    if meta:
        info.update(meta)
    return LissajousLoop(points=np.column_stack([u, w]), t=t, period=period,
                         closure_residual=gap, meta=info)


def _segment_intersections(points: np.ndarray, t: np.ndarray, min_gap: int = 2):
    """All transversal crossings between non-adjacent segments of a closed polyline.

    Returns arrays (xy, tau1, tau2, gap_angle) for every crossing pair;
    segment pairs closer than ``min_gap`` indices along the cyclic chain
    are skipped so sampling noise at shared endpoints never counts.
    """
    p = points[:-1]
    q = points[1:]
    m = len(p)
    i_idx, j_idx = np.triu_indices(m, k=min_gap + 1)
    # cyclic adjacency: also drop pairs that wrap around the closure point
    wrap = (m - (j_idx - i_idx)) <= min_gap
    i_idx, j_idx = i_idx[~wrap], j_idx[~wrap]

    # bounding-box prefilter
    lo = np.minimum(p, q)
    hi = np.maximum(p, q)
    ok = ((lo[i_idx, 0] <= hi[j_idx, 0]) & (lo[j_idx, 0] <= hi[i_idx, 0]) &
          (lo[i_idx, 1] <= hi[j_idx, 1]) & (lo[j_idx, 1] <= hi[i_idx, 1]))
    i_idx, j_idx = i_idx[ok], j_idx[ok]
    if len(i_idx) == 0:
        return (np.empty((0, 2)), np.empty(0), np.empty(0), np.empty(0))

    r = q[i_idx] - p[i_idx]
    s = q[j_idx] - p[j_idx]
    d = p[j_idx] - p[i_idx]
    denom = r[:, 0] * s[:, 1] - r[:, 1] * s[:, 0]
    nz = denom != 0.0
    i_idx, j_idx, r, s, d, denom = (a[nz] for a in (i_idx, j_idx, r, s, d, denom))
    t_par = (d[:, 0] * s[:, 1] - d[:, 1] * s[:, 0]) / denom
    u_par = (d[:, 0] * r[:, 1] - d[:, 1] * r[:, 0]) / denom
    hit = (t_par >= 0.0) & (t_par <= 1.0) & (u_par >= 0.0) & (u_par <= 1.0)
    if not np.any(hit):
        return (np.empty((0, 2)), np.empty(0), np.empty(0), np.empty(0))
    i_idx, j_idx, r, s, t_par, u_par = (a[hit] for a in (i_idx, j_idx, r, s, t_par, u_par))
    xy = p[i_idx] + t_par[:, None] * r
    dt_i = t[i_idx + 1] - t[i_idx]
    dt_j = t[j_idx + 1] - t[j_idx]
    tau1 = t[i_idx] + t_par * dt_i
    tau2 = t[j_idx] + u_par * dt_j
    cross = r[:, 0] * s[:, 1] - r[:, 1] * s[:, 0]
    dot = r[:, 0] * s[:, 0] + r[:, 1] * s[:, 1]
    ang = np.abs(np.arctan2(np.abs(cross), dot))
    gap = np.minimum(ang, math.pi - ang)
    return xy, tau1, tau2, gap


def find_pinch_points(loop: LissajousLoop, cluster_radius: Optional[float] = None,
                      angle_tol: float = 1e-2,
                      separation: Optional[float] = None) -> list:
    """Locate the pinch points (transversal self-intersections) of a loop.

    Every non-adjacent segment pair is tested exactly; crossings are
    clustered within ``cluster_radius`` (default 1e-3 of the loop
    diameter) and a cluster qualifies as a pinch when it carries two
    distinct curve passes separated by more than ``separation`` in the
    curve parameter and a tangent-direction gap above ``angle_tol``.
    """
    diam = loop.diameter()
    if diam == 0.0:
        raise ValueError("degenerate loop: zero diameter")
    if cluster_radius is None:
        cluster_radius = 1e-3 * diam
    dt = loop.period / (len(loop.points) - 1)
    if separation is None:
        separation = 3.0 * dt
    xy, tau1, tau2, gap = _segment_intersections(loop.points, loop.t)
    if len(xy) == 0:
        return []

    # single-linkage clustering of crossing locations
    order = np.argsort(xy[:, 0], kind="stable")
    labels = -np.ones(len(xy), dtype=int)
    n_clusters = 0
    for k in order:
        if labels[k] >= 0:
            continue
        stack = [k]
        labels[k] = n_clusters
        while stack:
            c = stack.pop()
            near = np.where((labels < 0) &
                            (np.abs(xy[:, 0] - xy[c, 0]) <= cluster_radius) &
                            (np.abs(xy[:, 1] - xy[c, 1]) <= cluster_radius))[0]
            for nb in near:
                if math.hypot(xy[nb, 0] - xy[c, 0], xy[nb, 1] - xy[c, 1]) <= cluster_radius:
                    labels[nb] = n_clusters
                    stack.append(nb)
        n_clusters += 1

    period = loop.period
    pinches = []
    for cl in range(n_clusters):
        members = np.where(labels == cl)[0]
        taus = np.concatenate([tau1[members], tau2[members]])
        # group parameters into distinct passes (cyclic in the period)
        rel = np.sort((taus - loop.t[0]) % period)
        groups = [[rel[0]]]
        for v in rel[1:]:
            if v - groups[-1][-1] <= separation:
                groups[-1].append(v)
            else:
                groups.append([v])
        if len(groups) > 1 and (period - groups[-1][-1] + groups[0][0]) <= separation:
            groups[0] = groups.pop() + groups[0]
        if len(groups) < 2:
            continue
        max_gap = float(gap[members].max())
        if max_gap <= angle_tol:
            continue
        centers = sorted(float(np.mean(g)) for g in groups)
        loc = xy[members].mean(axis=0)
        pinches.append(PinchPoint(
            location=(float(loc[0]), float(loc[1])),
            t1=loop.t[0] + centers[0],
            t2=loop.t[0] + centers[1],
            tangent_gap=max_gap,
            crossings=len(members),
        ))
    pinches.sort(key=lambda pp: pp.t1)
    return pinches


def shoelace_area(points: np.ndarray) -> float:
    """Signed area of a closed polygon (positive for counter-clockwise)."""
    x = points[:, 0]
    y = points[:, 1]
    return 0.5 * float(np.sum(x[:-1] * y[1:] - x[1:] * y[:-1]))


def split_lobes(loop: LissajousLoop, pinches: Sequence[PinchPoint]) -> list:
    """Split a closed self-intersecting polyline into simple sub-loops.

    Vertices are inserted at every pinch passage (both snapped to the
    pinch location so sub-loops close exactly); walking the curve with a
    stack peels off a lobe whenever a pinch is revisited. Returns a list
    of closed vertex arrays ordered by curve parameter.
    """
    if not pinches:
        return [loop.points.copy()]
    period = loop.period
    t0 = loop.t[0]
    n_seg = len(loop.points) - 1
    t_rel = loop.t - t0
    lo_u, hi_u = loop.u.min(), loop.u.max()
    lo_w, hi_w = loop.w.min(), loop.w.max()
    pad = 1e-6 * math.hypot(hi_u - lo_u, hi_w - lo_w)
    for pp in pinches:
        x, y = pp.location
        if not (lo_u - pad <= x <= hi_u + pad and lo_w - pad <= y <= hi_w + pad):
            raise ValueError("pinch point does not belong to this loop")

    # cut list: (relative parameter, pinch id, snapped location)
    cuts = []
    for pid, pp in enumerate(pinches):
        for tau in (pp.t1, pp.t2):
            cuts.append(((tau - t0) % period, pid, np.asarray(pp.location, dtype=float)))
    cuts.sort(key=lambda c: c[0])

    # start the walk in the widest cut-free parameter gap so no cut
    # straddles the seam of the cyclic traversal
    gaps = [(cuts[0][0] + period - cuts[-1][0], len(cuts) - 1)]
    for k in range(1, len(cuts)):
        gaps.append((cuts[k][0] - cuts[k - 1][0], k - 1))
    width, after = max(gaps)
    start_rel = (cuts[after][0] + width / 2.0) % period
    base = int(np.searchsorted(t_rel, start_rel)) % n_seg

    # assign cuts to their containing original segment
    seg_cuts: dict = {}
    for rel_c, pid, xy in cuts:
        i = int(np.searchsorted(t_rel, rel_c, side="right")) - 1
        i = min(max(i, 0), n_seg - 1)
        seg_cuts.setdefault(i, []).append((rel_c, pid, xy))
    for lst in seg_cuts.values():
        lst.sort(key=lambda c: c[0])

    # rotated vertex walk with labeled pinch vertices spliced in; rel values
    # are kept in the original parameterization for ordering the lobes
    verts = [(loop.points[base].copy(), None, float(t_rel[base]))]
    for step in range(n_seg):
        i = (base + step) % n_seg
        for rel_c, pid, xy in seg_cuts.get(i, ()):
            verts.append((xy.copy(), pid, float(rel_c)))
        nxt = i + 1
        verts.append((loop.points[nxt % n_seg].copy(), None, float(t_rel[nxt % n_seg])))

    lobes = []
    path = []        # (xy, pid, rel)
    open_pids: dict = {}
    for xy, pid, rel in verts:
        if pid is not None and pid in open_pids:
            at = open_pids[pid]
            piece = [p[0] for p in path[at:]] + [xy]
            key = min(p[2] for p in path[at:])
            lobes.append((key, np.vstack(piece)))
            # peel the piece off; pinches first seen inside it are consumed
            path = path[:at + 1]
            open_pids = {k: v for k, v in open_pids.items() if v <= at}
            continue
        path.append((xy, pid, rel))
        if pid is not None:
            open_pids[pid] = len(path) - 1
    remainder = np.vstack([p[0] for p in path])
    lobes.append((min(p[2] for p in path), remainder))
    lobes.sort(key=lambda lr: lr[0])
    return [arr for _, arr in lobes]


def lobe_areas(loop: LissajousLoop, pinches: Sequence[PinchPoint]) -> list:
    """Absolute area of every lobe, ordered by curve parameter."""
    return [abs(shoelace_area(piece)) for piece in split_lobes(loop, pinches)]


def signed_lobe_areas(loop: LissajousLoop, pinches: Sequence[PinchPoint]) -> list:
    """Signed (orientation-carrying) lobe areas, ordered by curve parameter."""
    return [shoelace_area(piece) for piece in split_lobes(loop, pinches)]


def _wrap_phase(phi: float) -> float:
    out = math.fmod(phi + math.pi, TWO_PI)
    if out < 0:
        out += TWO_PI
    out -= math.pi
    if out == -math.pi:
        out = math.pi
    return out


def spectrum_of_samples(samples: np.ndarray, n_periods: int, omega_n: float,
                        t_start: float, k_max: int) -> HarmonicSpectrum:
    """DFT harmonics of a uniformly sampled signal spanning whole periods.

    ``samples`` must cover exactly ``n_periods`` periods half-open (the
    repeated endpoint removed). Harmonic k is read at bin k*n_periods;
    phases are converted to the sin(omega_n * t) convention of the drive,
    with t measured on the same absolute axis as ``t_start``.
    """
    y = np.asarray(samples, dtype=float)
    n = len(y)
    if n_periods < 1 or n % n_periods != 0:
        raise ValueError("sample count must be a whole multiple of the period count")
    if k_max < 1:
        raise ValueError("k_max must be >= 1")
    if k_max * n_periods > n // 2:
        raise ValueError("k_max exceeds the Nyquist harmonic for this grid")
    spec = np.fft.rfft(y)
    amps = np.empty(k_max + 1)
    phases = np.empty(k_max + 1)
    amps[0] = abs(spec[0].real) / n
    phases[0] = 0.0
    for k in range(1, k_max + 1):
        c = spec[k * n_periods]
        amps[k] = 2.0 * abs(c) / n
        raw = math.atan2(c.imag, c.real)
        # sin-referenced phase of harmonic k at absolute time origin
        phases[k] = _wrap_phase(raw + math.pi / 2.0 - k * omega_n * t_start)
    return HarmonicSpectrum(omega_n=omega_n, amplitude=amps, phase=phases)


def spectrum(traj: Trajectory, k_max: int = 10, periods: Optional[int] = None) -> HarmonicSpectrum:
    """Harmonic content of the trajectory's current-like coordinate.

    Uses a rectangular window over the last ``periods`` whole drive
    periods (default: every period after the first quarter, at least 4).
    Rejects windows under four periods, where residual transients and
    leakage would corrupt the phases.
    """
    spp = traj.samples_per_period
    omega_n = TWO_PI / float(traj.meta["period"])
    n_p = traj.periods
    if periods is None:
        periods = min(n_p - max(1, n_p // 4), n_p)
        periods = max(periods, 4)
    if periods < 4:
        raise ValueError("spectrum needs at least 4 whole periods of steady state")
    if periods > n_p:
        raise ValueError(f"trajectory has {n_p} periods, {periods} requested")
    col = 1 if traj.states.shape[1] > 1 else 0
    n = periods * spp
    y = traj.states[len(traj.states) - n - 1: len(traj.states) - 1, col]
    t_start = traj.t[len(traj.t) - n - 1]
    return spectrum_of_samples(y, periods, omega_n, t_start, k_max)


def spectrum_of_loop(loop: LissajousLoop, k_max: int = 10, samples: int = 4096) -> HarmonicSpectrum:
    """Harmonic content of a single closed loop period (w coordinate).

    The loop is resampled onto a uniform parameter grid first, so
    ingested traces with uneven timestamps stay leakage-free.
    """
    omega_n = TWO_PI / loop.period
    t_rel = loop.t - loop.t[0]
    grid = np.linspace(0.0, loop.period, samples + 1)[:-1]
    w = np.interp(grid, t_rel, loop.w)
    return spectrum_of_samples(w, 1, omega_n, float(loop.t[0]), k_max)


def phase_criterion(spec: HarmonicSpectrum, pinch_order: int) -> tuple:
    """Observability verdict for the pinch-generating harmonic.

    Computes the time-shift-invariant phase gap dphi = wrap(phi_k - k*phi_1)
    between harmonic k = ``pinch_order`` (2 for single-pinch loops, 3 for
    double-pinch ones) and the fundamental. The pinch is observable when
    |dphi| < pi/2; the returned margin is pi/2 - |dphi|.
    """
    if pinch_order not in (2, 3):
        raise ValueError("pinch_order must be 2 or 3")
    if pinch_order >= len(spec.amplitude):
        raise ValueError("spectrum does not include the requested harmonic")
    a1 = spec.amplitude[1]
    if a1 <= 0.0:
        raise PhaseCriterionUndefined("fundamental amplitude vanishes")
    ak = spec.amplitude[pinch_order]
    if ak < 1e-9 * a1:
        raise PhaseCriterionUndefined(
            f"harmonic {pinch_order} amplitude below 1e-9 of the fundamental")
    dphi = _wrap_phase(spec.phase[pinch_order] - pinch_order * spec.phase[1])
    margin = math.pi / 2.0 - abs(dphi)
    return margin, margin > 0.0


def pinch_count(p: int, q: int) -> int:
    """Self-intersection count q(p-1) + p(q-1) of a p:q Lissajous figure.

    Only defined for coprime positive integers.
    """
    if p < 1 or q < 1:
        raise ValueError("p and q must be >= 1")
    if math.gcd(p, q) != 1:
        raise ValueError("p and q must be coprime")
    return q * (p - 1) + p * (q - 1)
