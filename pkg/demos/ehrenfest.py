"""Centroid of a vortex superposition against a classical electron.

psi_00 + psi_10 has its centroid off the axis; it follows the cyclotron
orbit of a classical electron seeded with the same position and kinetic
momentum.  With the opposite vortex charge the centroid stays put.

    python3 demos/ehrenfest.py [output_dir]
"""

import math
import sys
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from evortex import CartesianGrid, make_context
from evortex.evolution import centroid_tracks, make_offaxis

out = Path(sys.argv[1] if len(sys.argv) > 1 else "demo_output")
out.mkdir(parents=True, exist_ok=True)

ctx = make_context(B=2.0, E=2000.0)
grid = CartesianGrid(128, 128, 5 * ctx.w_m)
zs = np.linspace(0, math.pi * ctx.z_m, 41)

fig, ax = plt.subplots(figsize=(4, 4))
for ell, style in ((1, "-"), (-1, "--")):
    q, c = centroid_tracks(make_offaxis(ell, 0, 1.0, ctx), grid, zs)
    dev = np.max(np.hypot(*(q - c).T)) / ctx.w_m
    print(f"l={ell:+d}: max |quantum - classical| = {dev:.2e} w_m")
    ax.plot(q[:, 0] / ctx.w_m, q[:, 1] / ctx.w_m, "o", ms=3, label=f"quantum, l={ell:+d}")
    ax.plot(c[:, 0] / ctx.w_m, c[:, 1] / ctx.w_m, style, label=f"classical, l={ell:+d}")
ax.set_aspect("equal")
ax.set_xlabel("x / w_m")
ax.set_ylabel("y / w_m")
ax.legend(fontsize=7)
fig.tight_layout()
fig.savefig(out / "ehrenfest.png", dpi=120)
print(f"wrote {out / 'ehrenfest.png'}")
