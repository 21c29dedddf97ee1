"""Cross-checking the analytic phases with a numerical propagator.

The Crank-Nicolson propagator never sees the dispersion formula; it only
knows the transverse Hamiltonian.  Its eigenphase for a Landau mode should
converge to the analytic shift at second order in the step.

    python3 demos/propagator_oracle.py
"""

from evortex import ModeSpec, make_context
from evortex.propagator import PropagatorConfig, eigenphase_convergence, stationarity
from evortex.evolution import SuperpositionSpec

ctx = make_context(B=2.0, E=2000.0)
cfg = PropagatorConfig(nr=1024, r_max=8 * ctx.w_m, dz=ctx.z_m / 1024)

for ell, n in [(1, 0), (-1, 0), (2, 1)]:
    res = eigenphase_convergence(ModeSpec.landau(ell, n), ctx, cfg, ctx.z_m / 4, halvings=2)
    rates = ", ".join(f"{r * ctx.z_m:.6f}" for r in res["rates"])
    print(f"l={ell:+d} n={n}: rate*z_m for dz, dz/2, dz/4 = {rates}; analytic {res['dkz'] * ctx.z_m:+.6f}")
    print(f"          successive-difference ratio {res['ratios'][0]:.3f} (second order -> 4)")

corr = stationarity(SuperpositionSpec([ModeSpec.landau(1, 0)], ctx), cfg, ctx.z_m)
print(f"Landau (1,0) density correlation after one z_m: {corr:.10f}")
