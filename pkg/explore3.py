"""Which parallel-circuit loop plane shows area decreasing in a?"""
import math

import numpy as np

from pinchsim.nonlinearity import Nonlinearity
from pinchsim.circuits import ParallelConfig
from pinchsim.integrator import simulate, IntegratorSettings
from pinchsim.analysis import steady_loop


def even_odd_area(points, rows=2048):
    """Even-odd filled area of a closed polyline: exact-in-x scanline, discrete in y."""
    pts = np.asarray(points, dtype=float)
    x0, y0 = pts[:-1, 0], pts[:-1, 1]
    x1, y1 = pts[1:, 0], pts[1:, 1]
    ylo, yhi = pts[:, 1].min(), pts[:, 1].max()
    dy = (yhi - ylo) / rows
    area = 0.0
    for r in range(rows):
        yr = ylo + (r + 0.5) * dy
        m = ((y0 <= yr) & (y1 > yr)) | ((y1 <= yr) & (y0 > yr))
        if not m.any():
            continue
        xc = x0[m] + (yr - y0[m]) * (x1[m] - x0[m]) / (y1[m] - y0[m])
        xc.sort()
        area += np.sum(xc[1::2] - xc[0::2]) * dy
    return float(area)


st = IntegratorSettings(max_step=0.005)
print("reduced model (eps=0):")
for wn in (0.05, 0.1, 0.2):
    for a in (0.5, 1.0, 2.0):
        cfg = ParallelConfig(1, 2, 0.2, wn, Nonlinearity.single_diode(a), 0.0)
        traj = simulate(cfg, periods=16, samples_per_period=1024)
        spp = 1024
        g = traj.excitation[-spp-1:]
        x = traj.states[-spp-1:, 0]
        y = traj.states[-spp-1:, 1]
        a_y = even_odd_area(np.column_stack([g, y]))
        a_i = even_odd_area(np.column_stack([g, g - x]))
        print(f"  wn={wn} a={a}: area(g,y)={a_y:.4f}  area(g,i_in)={a_i:.4f}")
