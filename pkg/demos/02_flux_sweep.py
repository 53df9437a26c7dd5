# %% [markdown]
# # Ground-state energy against flux
#
# The rotating-lump construction costs alpha^2/2 per particle.  The true
# ground state barely moves with flux at strong coupling: the lump's tail is
# all that feels the flux, and it is exponentially small.

# %%
import numpy as np

from ring_crystal import SolverConfig
from ring_crystal.harness import flux_sweep

table = flux_sweep(5.0, list(np.linspace(0, 0.5, 5)), SolverConfig(n_points=128), jobs=1)
for r in table.records:
    print(f"alpha={r.alpha:.3f}  eps={r.eps_numeric:+.10f}  rotating lump={r.eps_wilczek:+.10f}"
          f"  plane wave={r.eps_uniform_best:+.10f}")
print("smallest margin to the rotating lump:", table.wilczek_margin())

# %% [markdown]
# At weak coupling the plane wave is the ground state, but only while it is
# stable: alpha^2 < 1/4 - lam/(2 pi).  At lam = 1 that edge is near 0.30.

# %%
weak = flux_sweep(1.0, [0.0, 0.2, 0.4], SolverConfig(n_points=64), jobs=1)
for r in weak.records:
    print(f"alpha={r.alpha:.2f}  eps={r.eps_numeric:+.10f}  plane wave={r.eps_uniform_best:+.10f}")
