# %% [markdown]
# # Separated uplink and downlink phases
#
# The second scheme spends a fraction `tau` of the time on the uplink and the
# rest on the downlink. In the uplink both users cooperate over the D2D link
# (a cooperative MAC); in the downlink user 1 forwards to user 2 and user 2
# compresses what it hears (a cooperative BC).

# %%
from drcn import (
    MacPowerSplit, SepOuterPoint, baseline_no_cooperation, bc_c_optimize, mac_c_optimize,
    mac_c_rate_at, optimize_sep, sep_rate_at, validate_config,
)

# %% [markdown]
# ## Building blocks
#
# Each inner problem can be solved on its own. The MAC search is a refined
# grid over four powers; the BC split is solved by monotone crossings.

# %%
split = MacPowerSplit(p21=50, p31=25, pc1=25, p12=50, p32=25, pc2=25)
print(mac_c_rate_at(0.15, 1.0, 0.5, split))
print(mac_c_optimize(0.15, 1.0, 0.5, 100, 100).value)
print(bc_c_optimize(0.5, 1.0, 2.0, 100, 100, 100).argmax)

# %% [markdown]
# ## The full nested search
#
# `optimize_sep` searches the uplink powers on an outer grid and `tau` for
# each of them. The D2D link never hurts: the baseline without cooperation
# is a feasible allocation of the cooperative scheme.

# %%
cfg = validate_config(0.5, 1.0, 2.0, 1.0, 1.0, 1.0)
sep = optimize_sep(cfg)
base = baseline_no_cooperation(cfg)
print(sep.value, sep.argmax)
print(base.value)
assert sep_rate_at(cfg, sep.argmax) == sep.value

# %% [markdown]
# ## Compress-forward exponent
#
# `cf_exponent=3` uses `|h3|**3` in the compress-forward gain instead of the
# dimensionally consistent `h3**2`. Both variants are available.

# %%
for e in (2, 3):
    print(e, optimize_sep(cfg, cf_exponent=e).value)
