# %% [markdown]
# # Simultaneous uplink and downlink with a relaying user
#
# Two users talk to a base station (BS) in both directions. User 1 has the
# stronger link (gain `h2`), user 2 the weaker one (`h1`), and the users
# share a device-to-device link with gain `h3`. The simultaneous scheme
# splits time into three phases:
#
# * `alpha`: two-way exchange between user 1 and the BS,
# * `beta`: two-way exchange between user 2 and the BS,
# * `gamma`: two-way relaying of user 2's traffic through user 1.
#
# The symmetric rate is the rate every one of the four messages gets.

# %%
import numpy as np

from drcn import TimeShare, harmonic_two_way_rate, optimize_sim, sim_components, sim_rate_at
from drcn import validate_config

cfg = validate_config(h1=0.15, h2=1.0, h3=1.0, P1=100, P2=100, P3=100)
cfg

# %% [markdown]
# ## Rates at a fixed time share
#
# `sim_components` returns the four constraint terms; the symmetric rate is
# their minimum. Splitting time evenly between phase 1 and the relaying
# phase already gives a quarter of `log2(100.5)` here.

# %%
ts = TimeShare(0.5, 0.0, 0.5)
print(sim_components(cfg, ts))
print(sim_rate_at(cfg, ts), np.log2(100.5) / 4)

# %% [markdown]
# ## Optimised time share
#
# `optimize_sim` searches the whole simplex with a deterministic refined
# grid. The argmax re-evaluates to the reported value exactly.

# %%
res = optimize_sim(cfg)
print(res.value, res.argmax, res.converged, res.evaluations)
assert sim_rate_at(cfg, res.argmax) == res.value

# %% [markdown]
# ## Without the relay
#
# With `h3 = 0` the relaying phase is useless, and with equal powers the best
# split of phases 1 and 2 has a closed form: half the harmonic mean of the two
# direct-link capacities.

# %%
flat = cfg.replace(h3=0.0)
print(optimize_sim(flat, relay_phase=False).value, harmonic_two_way_rate(flat))

# %% [markdown]
# ## Sweeping the D2D gain
#
# The rate climbs from the harmonic value to the relaying plateau as `h3`
# grows.

# %%
for h3 in np.logspace(-2, 1, 7):
    print(f"h3 = {h3:7.3f}  R_sim = {optimize_sim(cfg.replace(h3=h3)).value:.5f}")
