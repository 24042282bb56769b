# %% [markdown]
# # Designing decoherence-free states
#
# A two-ion Bell state is insensitive to a uniform magnetic field when both kets have
# the same total magnetic quantum number. Among those states we want the one whose
# kets differ most in their quadrupole shift.
#
# Refers to the `dfsramsey.physics` and `dfsramsey.states` modules.

# %%
# %pip install dfsramsey

# %%
import dfsramsey.physics as physics
import dfsramsey.states as states

# %% [markdown]
# Sublevel factors of the D5/2 manifold; they sum to zero.

# %%
levels = physics.ZeemanLevel(5, 5).manifold()
{str(level): physics.quadrupole_geometric_factor(level) for level in levels}

# %% [markdown]
# All decoherence-free states of the manifold, ordered by quadrupole sensitivity.
# `gradient_coefficient` multiplies the shift from a magnetic field gradient along the
# crystal.

# %%
table = states.design_dfs_states(5)
table.head(10)

# %% [markdown]
# The probe state and its ion-swapped partner: same quadrupole response, opposite
# gradient response.

# %%
for spec in (states.psi1(), states.psi2()):
    print(spec, spec.quadrupole_factor_sum(), states.is_decoherence_free(spec))
