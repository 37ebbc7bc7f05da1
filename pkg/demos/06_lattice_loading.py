# %% [markdown]
# # Loading different lattice sites
#
# With the standing wave off, the particle rests at the bare focus. The
# slab is displaced, the standing wave returns and the particle slides
# into the nearest site. Sites further from the slab couple much less.

# %%
import numpy as np

from nanolev import fields, protocols, quantities as q

model = fields.FieldModel(fields.TweezerSpec(power=0.150))
particle = q.ParticleSpec(71.5e-9)
lam = model.tweezer.wavelength

offsets = np.linspace(0, 1.2e-6, 25)
last = None
for off in offsets:
    r = protocols.load_site(model, particle, off)
    mark = "  <- step" if last is not None and r.final_site_index != last else ""
    print(f"offset {off * 1e9:6.0f} nm  site {r.final_site_index}  g0_z/2pi {r.g0_z / (2 * np.pi):8.1f} Hz{mark}")
    last = r.final_site_index

print("expected steps at", [round((lam / 4 + n * lam / 2) * 1e9) for n in range(3)], "nm")
