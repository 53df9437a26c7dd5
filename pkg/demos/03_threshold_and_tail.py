# %% [markdown]
# # Lump formation and the shape of the lump
#
# Below lam = pi/2 the zero-flux ground state is flat; above it a lump forms.
# Deep in the lump phase the width goes like 1/lam and the amplitude at the
# far side of the ring like sqrt(lam) exp(-pi lam / 2).

# %%
import math

from ring_crystal import SolverConfig
from ring_crystal.harness import lump_scaling_scan, threshold_scan

res = threshold_scan([1.2, 1.5, 1.6, 2.0], SolverConfig(n_points=128, dtau=1e-2), lambda_tol=0.05)
for lam, c in res.contrasts.items():
    print(f"lam={lam:.4f}  contrast={c:.2e}")
print(f"threshold estimate {res.lambda_c_estimate:.4f} vs pi/2 = {math.pi / 2:.4f}")

# %%
rep = lump_scaling_scan([4.0, 6.0, 8.0], SolverConfig())
for lam, w, a in zip(rep.lambdas, rep.fwhm, rep.antipode):
    print(f"lam={lam:.0f}  fwhm={w:.5f}  lam*fwhm={lam * w:.5f}  antipode={a:.3e}")
print(f"tail slope {rep.slope:.4f} (-pi/2 = {-math.pi / 2:.4f}), prefactor {math.exp(rep.intercept):.3f}")
