# %% [markdown]
# # Matching observed trap frequencies
#
# The two beam waists and the slab reflectivity are tuned so that the
# first site reproduces a set of measured frequencies.

# %%
import numpy as np

from nanolev import fields, protocols, quantities as q
from nanolev.errors import FitFailed

template = fields.FieldModel(fields.TweezerSpec(power=0.150))
particle = q.ParticleSpec(71.5e-9)

target = np.array([280.3e3, 228.3e3, 444.9e3])
fitted, residual = protocols.fit_model(template, particle, target)
f = protocols.model_frequencies(fitted, particle)
print(f"waists {fitted.tweezer.waist_x * 1e9:.0f} / {fitted.tweezer.waist_y * 1e9:.0f} nm, "
      f"reflectivity {fitted.reflector.amplitude_reflectivity:.4f}, residual {residual:.1e}")
for ax, t, g in zip("xyz", target, f):
    print(f"  f_{ax}: target {t / 1e3:.1f} kHz, model {g / 1e3:.3f} kHz")

# %% [markdown]
# An axial frequency below the lateral ones cannot be reached while the
# standing wave is present.

# %%
try:
    protocols.fit_model(template, particle, [280.3e3, 228.3e3, 150e3])
except FitFailed as exc:
    print("infeasible:", exc)
