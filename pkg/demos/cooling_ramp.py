"""Walk through one cooling ramp and a small data collapse.

Run with ``python demos/cooling_ramp.py``; takes a few seconds.
"""

import math

import numpy as np

from kitaev_cooling import BathSpec, ChainModel, RampProtocol, evolve_all, thermal_excitation_density
from kitaev_cooling import analytic, scaling
from kitaev_cooling.sweep import run_point

bath = BathSpec(gamma=0.01)
chain = ChainModel(J=1.0, Delta=1.0, mu=-1.0, L=4000)

# 1. One linear ramp from T_i = 15 to zero.  Early on E follows the thermal
#    value; below the crossover it freezes.
vg = 0.1
T_star = analytic.crossover_Ti(bath, chain, vg)
traj = evolve_all(chain, bath, RampProtocol(T_i=15.0, v=vg * bath.gamma), samples=7)
print(f"v/gamma = {vg}, crossover T* = {T_star:.4f}")
print("      T          E       E_th")
for T, _, E in traj:
    print(f"{T:7.3f}  {E:.6f}  {thermal_excitation_density(chain, T):.6f}")

# 2. Final densities over a few initial temperatures and rates, rescaled by
#    powers of gamma/v.  Curves at small v/gamma sit on top of each other.
records = [run_point(chain, bath, T_i, g) for g in (0.01, 0.1) for T_i in np.geomspace(1e-3, 10, 9)]
ds = scaling.rescale_Ti_collapse(records, crossover=analytic.crossover_scaled(bath))
print(f"\ncollapse quality {scaling.collapse_quality(ds):.3f}")
c1, c2 = analytic.c1_constant(bath), analytic.c2_constant(chain)
print(f"low-T asymptote c2 = {c2:.4f}, plateau c1 = {c1:.5f}, crossover c1/c2 = {c1 / c2:.3f}")
for fam in ds.families:
    print(f"v/gamma={fam.key:g}: plateau {fam.y[-1]:.5f}, slope at small T~ {np.polyfit(np.log(fam.x[:3]), np.log(fam.y[:3]), 1)[0]:.3f}")

# 3. Continuum prediction for comparison (exactly homogeneous in T_i and gamma/v).
print(f"\ncontinuum E(T_i=1, v/gamma=0.1) = {analytic.excitation_continuum(0.0, 1.0, 10.0, chain, bath):.6f}")
print(f"simulated  E(T_i=1, v/gamma=0.1) = {run_point(chain, bath, 1.0, 0.1).E_final:.6f}")
print(f"sqrt(v/gamma) * c1 = {math.sqrt(0.1) * c1:.6f}")
