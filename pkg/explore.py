"""Exploration script (not part of the package): verify circuit behavior numerically."""
import math
import time

import numpy as np

from pinchsim.nonlinearity import Nonlinearity
from pinchsim.circuits import SeriesConfig, ParallelConfig
from pinchsim.integrator import simulate, IntegratorSettings
from pinchsim.analysis import (steady_loop, find_pinch_points, lobe_areas, spectrum,
                               phase_criterion, split_lobes)


def run_series(a=1.0, wn=0.1, A=1.0, B=2.0, b=0.2, kind="single_diode",
               periods=20, discard=12, spp=1024, rtol=1e-8):
    nl = Nonlinearity(kind, a=a)
    cfg = SeriesConfig(A=A, B=B, b=b, omega_n=wn, nl=nl)
    t0 = time.perf_counter()
    traj = simulate(cfg, periods=periods, samples_per_period=spp,
                    settings=IntegratorSettings(rel_tol=rtol, abs_tol=rtol * 1e-2))
    el = time.perf_counter() - t0
    loop = steady_loop(traj, discard_periods=discard)
    pinches = find_pinch_points(loop)
    areas = lobe_areas(loop, pinches)
    spec = spectrum(traj, k_max=8, periods=8)
    return traj, loop, pinches, areas, spec, el


print("=== fig2(a): series single diode, a sweep at wn=0.1 ===")
for a in (0.5, 1.0, 2.0):
    traj, loop, pinches, areas, spec, el = run_series(a=a)
    order = 2
    try:
        margin, obs = phase_criterion(spec, order)
    except Exception as e:
        margin, obs = None, str(e)
    print(f"a={a}: pinches={len(pinches)} total_area={sum(areas):.5f} areas={[f'{x:.4f}' for x in areas]}"
          f" steps={traj.meta['steps_attempted']} dt={el:.2f}s")
    print(f"   phases k1={spec.phase[1]:+.4f} k2={spec.phase[2]:+.4f} k3={spec.phase[3]:+.4f}"
          f" amps={[f'{x:.4f}' for x in spec.amplitude[:5]]}")
    print(f"   dphi2={((spec.phase[2]-2*spec.phase[1]+math.pi)%(2*math.pi))-math.pi:+.4f} margin={margin} obs={obs}")
    if pinches:
        for pp in pinches:
            print(f"   pinch at {pp.location} t1={pp.t1:.3f} t2={pp.t2:.3f} gap={pp.tangent_gap:.4f} n={pp.crossings}")

print("=== fig2(b): series single diode, wn sweep at a=1 ===")
for wn in (0.05, 0.1, 0.2):
    traj, loop, pinches, areas, spec, el = run_series(wn=wn)
    try:
        margin, obs = phase_criterion(spec, 2)
    except Exception as e:
        margin, obs = None, str(e)
    dphi = ((spec.phase[2] - 2 * spec.phase[1] + math.pi) % (2 * math.pi)) - math.pi
    print(f"wn={wn}: pinches={len(pinches)} total_area={sum(areas):.5f} dphi2={dphi:+.4f} obs={obs} dt={el:.2f}s")

print("=== fig2(c/d): series anti-parallel, A=0 ===")
for wn in (0.05, 0.1, 0.2):
    traj, loop, pinches, areas, spec, el = run_series(a=1.0, wn=wn, A=0.0, kind="anti_parallel")
    try:
        margin, obs = phase_criterion(spec, 3)
    except Exception as e:
        margin, obs = None, str(e)
    dphi = ((spec.phase[3] - 3 * spec.phase[1] + math.pi) % (2 * math.pi)) - math.pi
    evens = max(spec.amplitude[2], spec.amplitude[4])
    print(f"wn={wn}: pinches={len(pinches)} areas={[f'{x:.4f}' for x in areas]} dphi3={dphi:+.4f} obs={obs}"
          f" even/fund={evens/spec.amplitude[1]:.2e} dt={el:.2f}s")
    for pp in pinches:
        print(f"   pinch at ({pp.location[0]:+.5f},{pp.location[1]:+.5f}) gap={pp.tangent_gap:.4f}")
