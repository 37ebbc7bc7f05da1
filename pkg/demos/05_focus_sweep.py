# %% [markdown]
# # Moving the slab away from the focus
#
# The slab and cavity move together. The lattice stays locked to the
# surface, so the particle keeps its height above the slab and its
# coupling, while the trap softens as the tweezer intensity drops.

# %%
import numpy as np

from nanolev import dynamics, fields, protocols, quantities as q

model = fields.FieldModel(fields.TweezerSpec(power=0.150))
particle = q.ParticleSpec(71.5e-9)
gas = q.GasSpec(150.0, 300.0)

d = np.linspace(0.0, 5e-6, 11)
rec = protocols.sweep_focus(model, particle, d, spot_check=[0.0, 1e-6], gas=gas,
                            sim=dynamics.SimParams(20e-9, 0.2, seed=4, record_stride=10))

print(" d [um]  gap [nm]  G_z/2pi [MHz/nm]  f_z [kHz]  Var_z [nm^2]")
for n, dist in enumerate(d):
    print(f"{dist * 1e6:6.1f}  {rec.surface_gap[n] * 1e9:8.1f}  "
          f"{abs(rec.G_per_axis[n, 2]) / (2 * np.pi) / 1e15:16.4f}  "
          f"{rec.omegas[n, 2] / (2 * np.pi) / 1e3:9.1f}  {rec.variances[n, 2] * 1e18:12.2f}")

# %%
for dist, var in rec.simulated_variances.items():
    n = int(np.argmin(np.abs(d - dist)))
    print(f"simulated at {dist * 1e6:.1f} um: Var_z / equipartition = {var[2] / rec.variances[n, 2]:.3f}")
