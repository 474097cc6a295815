"""
Scattering by a circle: comparison with the Mie series
======================================================

Plane wave k = 10 on a PEC circle of radius 0.5, TM and TE.  Errors are
measured against the Mie series outside a 3h band around the boundary.
"""

from pathlib import Path

import numpy as np

from ulgf.analytic import mie_scattered, mie_solution
from ulgf.config import load_config
from ulgf.driver import incident_wave, run_convergence
from ulgf.recon import total_field

CONFIGS = Path(__file__).resolve().parent.parent / "configs"

for pol in ("tm", "te"):
    cfg = load_config(CONFIGS / f"circle_{pol}.json")
    table = run_convergence(cfg, [64, 128, 256], reference="analytic", keep_levels=True)
    print(f"\n{pol.upper()}   N        h     err_max   order")
    for n, h, e, o in zip(table.n, table.h, table.err_max, table.order_max):
        print(f"    {n:5d}  {h:.4f}  {e:.3e}   {'' if o is None else f'{o:.2f}'}")

# the finest TM level, sampled on the ring r = 1
cfg = load_config(CONFIGS / "circle_tm.json")
level = run_convergence(cfg, [128, 256], keep_levels=True).levels[-1]
xy = level.scattered.coords()
ring = np.abs(np.hypot(xy[..., 0], xy[..., 1]) - 1.0) < level.h / 2
exact = mie_scattered(mie_solution(incident_wave(cfg), 0.5), xy[ring])
print(f"\nr = 1 ring: {ring.sum()} nodes, max |u - u_mie| = {np.abs(level.scattered.values[ring] - exact).max():.2e}")

try:
    import matplotlib.pyplot as plt
except ImportError:
    plt = None
if plt is not None:
    tot = total_field(level.scattered, incident_wave(cfg), level.cut)
    ext = [xy[..., 0].min(), xy[..., 0].max(), xy[..., 1].min(), xy[..., 1].max()]
    plt.imshow(np.abs(tot.values), origin="lower", extent=ext, cmap="viridis")
    plt.colorbar(label="|u|")
    plt.title("circle, TM, total field")
    plt.savefig("circle_tm_total.png", dpi=120)
    print("wrote circle_tm_total.png")
