# %% [markdown]
# # Comparing against the shipped reference curves
#
# The package ships the published curve coordinates for the two figures as
# `drcn/data/reference.csv`. `compute_figure` recomputes curves at the same
# abscissas and `figure_checks` applies the regression thresholds.
# Only the cheap simultaneous scheme is computed here; `drcn figure fig4`
# runs everything.

# %%
import numpy as np

from drcn import figures, load_reference

ref = load_reference("fig4")
sorted(ref.curves)

# %%
cols = figures.compute_figure("fig4", schemes=("sim",), ref=ref)
for c in figures.figure_checks("fig4", cols, ref):
    print("PASS" if c.passed else "FAIL", c.label, c.detail)

# %% [markdown]
# ## Deviation table
#
# Deviations are computed minus published, one row per reference point.

# %%
rows = figures.deviation_table(cols, ref)
dev = np.array([r["deviation"] for r in rows])
print(len(rows), dev.min(), dev.max())

# %% [markdown]
# ## Plot script
#
# Figures are written as CSV plus a gnuplot script; the sum-capacity upper
# bound is drawn from the reference data only.

# %%
print(figures.gnuplot_script("fig4", {"cf2": "fig4_cf2.csv"}, "fig4_reference.csv", ref))
