# %% [markdown]
# # Trap and coupling at the operating point
#
# A 71.5 nm silica sphere sits in a 150 mW tweezer focused 380 nm above a
# reflecting slab. The reflection builds a standing wave, and the first
# antinode is also where the evanescent cavity field is strongest.

# %%
import numpy as np

from nanolev import dynamics, fields, protocols, quantities as q, readout

model = fields.FieldModel(fields.TweezerSpec(power=0.150))
particle = q.ParticleSpec(71.5e-9)
gas = q.GasSpec(150.0, 300.0)

print(f"mass          {particle.mass:.4e} kg")
print(f"polarizability {particle.polarizability:.4e} C m^2/V")
print(f"gas damping   {q.gas_damping(gas, particle) / (2 * np.pi):.1f} Hz")

# %% [markdown]
# Lattice sites are spaced by half the trap wavelength. The standing wave
# stiffens the axial direction far beyond the bare tweezer.

# %%
sites = np.asarray(fields.trap_sites(model, 3))
print("sites [nm]:", np.round(sites * 1e9, 1))

lin = dynamics.linearize(model, particle)
bare = dynamics.linearize(fields.without_reflector(model), particle)
for name, l in (("with slab", lin), ("bare tweezer", bare)):
    fx, fy, fz = l.frequencies_hz
    print(f"{name:13s} f_x {fx / 1e3:6.1f}  f_y {fy / 1e3:6.1f}  f_z {fz / 1e3:6.1f} kHz")

# %% [markdown]
# The cavity resonance shift falls off exponentially with height, so its
# gradient at the first site sets the dispersive coupling.

# %%
G = fields.coupling_gradient(model, lin.equilibrium)
print(f"G_z/2pi = {abs(G[2]) / (2 * np.pi) * 1e-9 / 1e6:.2f} MHz/nm")

rep = protocols.merit(model, particle, gas, n_cav=800, gamma_m=2 * np.pi * 1e3)
print(f"g0/2pi         {rep.g0 / (2 * np.pi):.0f} Hz")
print(f"z_zpf          {rep.z_zpf:.3e} m")
print(f"C_q            {rep.C_q:.2e}")
print(f"feedback limit eta > {protocols.FEEDBACK_LIMIT:.3f} (needs C_q >> 1; here {rep.cooling_possible=})")
print(f"force noise    {rep.force_noise:.2e} N/rtHz at the recoil-limited linewidth")

probe, chain = readout.ProbeSpec(260e-9), readout.DetectionChain()
S = readout.imprecision_psd(probe, chain, abs(G[2]), model.cavity_mode)
print(f"imprecision    {np.sqrt(S):.2e} m/rtHz with eta = {chain.eta_total:.2f}")
print(f"n_cav          {readout.intracavity_photons(probe, model.cavity_mode):.0f}")
