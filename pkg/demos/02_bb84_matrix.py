"""The BB84 probability matrix of the lantern link, back-to-back and over 500 m.

Run with ``python demos/02_bb84_matrix.py``; a few seconds.
"""
# %% [markdown]
# The presets carry the measured device numbers.  The mode-overlap
# visibility is solved on load so the analytic matched-basis probability hits
# the preset's target; the Monte Carlo matrix then scatters around it.

# %%
import numpy as np

from qlink.config import load_preset
from qlink.protocol import BB84_LABELS, probability_matrix

for name, gates in [("paper_b2b", 400_000), ("paper_500m", 400_000)]:
    cfg = load_preset(name).architecture()
    pm = probability_matrix(cfg, gates, seed=1)
    print(f"\n{name}: visibility {cfg.visibility:.4f}, {gates} gates per cell")
    print(" " * 10 + "".join(f"{lab:>11}" for lab in BB84_LABELS))
    for lab, row in zip(BB84_LABELS, pm.estimate):
        print(f"{lab:>10}" + "".join(f"{p:11.4f}" for p in row))
    print(f"mean diagonal {pm.mean_diagonal:.4f} +- {pm.sd_diagonal:.4f}; "
          f"cross-basis mean {pm.cross_basis_cells().mean():.4f}")

# %% [markdown]
# Rows are normalized within the measured basis, so each half-row sums to one.

# %%
print("half-row sums:", np.round(pm.estimate[:, :2].sum(axis=1), 6), np.round(pm.estimate[:, 2:].sum(axis=1), 6))
