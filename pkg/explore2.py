"""Check spectral pinch-existence margins against geometry; explore parallel model."""
import math
import time

import numpy as np

from pinchsim.nonlinearity import Nonlinearity
from pinchsim.circuits import SeriesConfig, ParallelConfig
from pinchsim.integrator import simulate, IntegratorSettings
from pinchsim.analysis import steady_loop, find_pinch_points, lobe_areas, spectrum


def margin2(spec):
    a1, p1 = spec.amplitude[1], spec.phase[1]
    a2, p2 = spec.amplitude[2], spec.phase[2]
    denom = 2.0 * a2 * math.cos(p2)
    if denom == 0:
        return -math.inf
    ratio = a1 * math.sin(p1) / denom
    if abs(ratio) <= 1.0:
        return math.pi / 2 - abs(math.asin(ratio))
    return -(abs(ratio) - 1.0)


def margin3(spec):
    a1, p1 = spec.amplitude[1], spec.phase[1]
    a3, p3 = spec.amplitude[3], spec.phase[3]
    denom = a3 * math.sin(p3)
    if denom == 0:
        return -math.inf
    r = a1 * math.sin(p1) / denom
    if -1.0 < r < 3.0:
        c2 = (3.0 - r) / 4.0
        th = math.acos(math.sqrt(c2))
        return min(th, math.pi / 2 - th)
    return -min(abs(r - 3.0), abs(r + 1.0)) / 4.0


def report(tag, cfg, periods=20, discard=12, spp=1024, settings=None):
    t0 = time.perf_counter()
    traj = simulate(cfg, periods=periods, samples_per_period=spp, settings=settings)
    el = time.perf_counter() - t0
    loop = steady_loop(traj, discard_periods=discard)
    pinches = find_pinch_points(loop)
    areas = lobe_areas(loop, pinches)
    spec = spectrum(traj, k_max=8, periods=8)
    m2, m3 = margin2(spec), margin3(spec)
    agree = (len(pinches) == 0) or (m2 > 0 if len(pinches) == 1 else m3 > 0)
    print(f"{tag}: pinch={len(pinches)} total={sum(areas):.5f} m2={m2:+.4f} m3={m3:+.4f} "
          f"agree={agree} steps={traj.meta['steps_attempted']} dt={el:.2f}s")
    return len(pinches), sum(areas), m2, m3


print("=== series single diode ===")
for a in (0.5, 1.0, 2.0):
    report(f"a={a} wn=0.1", SeriesConfig(1, 2, 0.2, 0.1, Nonlinearity.single_diode(a)))
for wn in (0.05, 0.1, 0.2):
    report(f"a=1 wn={wn}", SeriesConfig(1, 2, 0.2, wn, Nonlinearity.single_diode(1.0)))

print("=== series anti-parallel A=0 ===")
for wn in (0.05, 0.1, 0.2):
    report(f"wn={wn}", SeriesConfig(0, 2, 0.2, wn, Nonlinearity.anti_parallel(1.0)))

print("=== parallel single diode eps=0.01 (fig4 grids) ===")
st = IntegratorSettings(max_step=0.005)
for a in (0.5, 1.0, 2.0):
    report(f"a={a} wn=0.1", ParallelConfig(1, 2, 0.2, 0.1, Nonlinearity.single_diode(a), 0.01),
           periods=14, discard=6, settings=st)
for wn in (0.05, 0.2):
    report(f"a=1 wn={wn}", ParallelConfig(1, 2, 0.2, wn, Nonlinearity.single_diode(1.0), 0.01),
           periods=14, discard=6, settings=st)

print("=== parallel reduced (eps=0) ===")
for a in (0.5, 1.0, 2.0):
    report(f"red a={a} wn=0.1", ParallelConfig(1, 2, 0.2, 0.1, Nonlinearity.single_diode(a), 0.0),
           periods=14, discard=6)
