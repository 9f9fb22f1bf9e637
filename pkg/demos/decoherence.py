"""Weak-limit decoherence of an off-diagonal Gaussian state.

A continuum state with a Gaussian energy profile is paired against a constant
off-diagonal observable.  The expectation value decays to the equilibrium
value, while the state itself keeps oscillating.

Run with ``python3 demos/decoherence.py``.
"""
import numpy as np

from pointerbasis import config as C
from pointerbasis import decay_scan, dyadic_suprema, equilibrium_state, evolve_state

cfg = C.load_config(C.default_config_path("gaussian_offdiagonal"))
rho, O = C.build_state(cfg), C.build_observable(cfg)

scan = decay_scan(rho, O, np.geomspace(0.05, 25.0, 12), mode="filon")
print(f"equilibrium value (rho_*|O) = {scan.equilibrium_value:.3e}")
print(f"{'t':>8}  {'|<O>(t) - (rho_*|O)|':>22}")
for t, d in zip(scan.times, scan.deficits):
    print(f"{t:8.3f}  {d:22.3e}")

print("dyadic suprema over [T, 2T], [2T, 4T], ...:", dyadic_suprema(rho, O, 1.0, levels=4))

star = equilibrium_state(rho)
print("the state does not converge strongly: max |rho(25) - rho(0)| =",
      f"{evolve_state(rho, 25.0).max_abs_difference(rho):.3f}")
print("the equilibrium part is stationary:   max |rho_*(25) - rho_*| =",
      f"{evolve_state(star, 25.0).max_abs_difference(star):.1e}")
