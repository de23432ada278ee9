"""Two LP11 modes, one coupler and the intensity patterns they make.

Run with ``python demos/01_mode_calculus.py``.
"""
# %% [markdown]
# A state of the two-mode link is a pair of complex amplitudes over
# (LP11a, LP11b).  Passive elements are matrices; loss shows up as a drop in
# the tracked norm rather than as a separate bookkeeping number.

# %%
import numpy as np

from qlink.modes import (
    ModeState, apply, attenuator, balanced_splitter, compose, coupler_50_50,
    phase_bank, render_intensity,
)

s = 1 / np.sqrt(2)
lp_plus = ModeState([s, s])
oam_plus = apply(phase_bank([0, np.pi / 2]), lp_plus)
print("OAM+ amplitudes:", np.round(oam_plus.amplitudes, 6))

# %% [markdown]
# Two symmetric couplers in a row swap the ports: a Mach-Zehnder with zero
# phase difference sends everything to the cross output.

# %%
mzi = compose([coupler_50_50(), coupler_50_50()])
print("MZI output powers:", np.round(apply(mzi, ModeState([1, 0])).probabilities, 12))
print("trimmed coupler == 2-port DFT:", np.allclose(balanced_splitter(2).matrix,
                                                    np.array([[1, 1], [1, -1]]) / np.sqrt(2)))

lossy = apply(attenuator(10 ** (-3.25 / 20), dim=2), lp_plus)
print(f"after a 3.25 dB lantern pass the norm is {lossy.norm_tracked:.4f}")

# %% [markdown]
# Intensity maps: LP modes have a straight nodal line, the OAM superposition
# is a ring.  A coarse ASCII rendering is enough to see it.

# %%
def ascii_map(state, n=21):
    g = render_intensity(state, resolution=n, extent=2.2)
    shades = " .:-=+*#%@"
    return "\n".join("".join(shades[min(int(v * 9.999), 9)] for v in row) for row in g.values)


for name, st in [("LP11a", ModeState([1, 0])), ("LP+", lp_plus), ("OAM+", oam_plus)]:
    print(f"\n{name}\n{ascii_map(st)}")
