# %% [markdown]
# # The stationary half-flux state
#
# At flux 1/2 the twisted-frame ground state is a Jacobi cn profile.  Its
# modulus follows from the normalization; energy and chemical potential are
# closed-form.  We build it, check it, and let the solver find it from noise.

# %%
from ring_crystal import RingProblem, SolverConfig, half_flux_state, imaginary_time_ground_state
from ring_crystal.analytic import modulus_residual

lam = 5.0
rec, twisted = half_flux_state(lam, 256)
print(f"k = {rec.modulus.k:.15f}, kc = {rec.modulus.kc:.6e}")
print(f"modulus residual {modulus_residual(rec.modulus, lam):.1e}, norm {twisted.norm():.15f}")
print(f"mu = {rec.mu:.12f}, eps = {rec.eps:.12f}")

# %% [markdown]
# cn changes sign at phi = pi, which is what the half-flux boundary phase
# needs.  The density is a single lump with an exact node on the far side.

# %%
state = imaginary_time_ground_state(RingProblem(lam, 0.5), SolverConfig())
print(f"solver eps = {state.eps:.12f}  (difference {state.eps - rec.eps:.1e})")
print(f"residual {state.residual:.1e} after {state.iterations} steps")
print("density max/min:", state.field.density.max(), state.field.density.min())
