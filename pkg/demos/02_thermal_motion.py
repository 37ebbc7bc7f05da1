# %% [markdown]
# # Thermal motion and its spectrum
#
# Half a second of Langevin dynamics at 1.5 mbar, then a Welch spectrum
# and a Lorentzian fit of the axial peak.

# %%
import time

import numpy as np

from nanolev import dynamics, fields, quantities as q, spectral

model = fields.FieldModel(fields.TweezerSpec(power=0.150))
particle = q.ParticleSpec(71.5e-9)
gas = q.GasSpec(150.0, 300.0)
lin = dynamics.linearize(model, particle)

sim = dynamics.SimParams(dt=20e-9, duration=0.5, seed=1, record_stride=10)
t0 = time.perf_counter()
traj = dynamics.simulate(model, particle, gas, sim)
print(f"{len(traj)} samples in {time.perf_counter() - t0:.1f} s, escaped={traj.escaped}")

# %% [markdown]
# Equipartition: each axis carries kT/2. The lattice is slightly
# anharmonic, so the sampled variances sit a couple of percent above the
# harmonic value.

# %%
var = np.var(traj.positions, axis=0)
harm = q.KB * gas.temperature / (particle.mass * np.array(lin.omegas) ** 2)
for ax, v, h in zip("xyz", var, harm):
    print(f"{ax}: Var = {v:.3e} m^2, harmonic {h:.3e}, ratio {v / h:.3f}")

# %%
psd = spectral.welch(traj.positions[:, 2], traj.dt, segment_length=1 << 14)
fz = lin.frequencies_hz[2]
fit = spectral.fit_lorentzian(psd, (fz - 30e3, fz + 30e3))
print(f"fit f0 {fit.f0 / 1e3:.2f} kHz (linearized {fz / 1e3:.2f})")
print(f"fit gamma/2pi {fit.gamma / (2 * np.pi):.0f} Hz (gas {q.gas_damping(gas, particle) / (2 * np.pi):.0f})")
print(f"area * m W0^2 / kT = {fit.area * particle.mass * fit.omega0 ** 2 / (q.KB * 300):.3f}")

# %% [markdown]
# At 1.5 mbar the line is broadened by the thermal spread of the
# anharmonic frequency. At 15 mbar collisions dominate and the fitted
# width tracks the gas damping.

# %%
dense = q.GasSpec(1500.0, 300.0)
tr = dynamics.simulate(model, particle, dense, dynamics.SimParams(20e-9, 0.2, seed=3, record_stride=10))
fit = spectral.fit_lorentzian(spectral.welch(tr.positions[:, 2], tr.dt, segment_length=1 << 14),
                              (fz - 60e3, fz + 60e3))
print(f"15 mbar: gamma/2pi {fit.gamma / (2 * np.pi):.0f} Hz vs gas {q.gas_damping(dense, particle) / (2 * np.pi):.0f} Hz")
