"""Simultaneous uplink/downlink: two two-way phases plus one two-way relaying phase.

Phase 1 (fraction ``alpha``) is a two-way exchange between user 1 and the BS,
phase 2 (``beta``) between user 2 and the BS, and phase 3 (``gamma``) relays
between user 2 and the BS through user 1 with compute-and-forward. User 1 is
silent in phase 2, so it transmits at ``P1 / (1 - beta)``; user 2 likewise at
``P2 / (1 - alpha)``.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .model import DomainError, NetworkConfig, _c, _c_plus, capacity
from .optimizer import SearchDomain, SearchResult, Simplex, refine_grid_max

SIMPLEX_SLACK = 1e-12


class UnsupportedConfigError(ValueError):
    pass


@dataclass(frozen=True)
class TimeShare:
    alpha: float
    beta: float
    gamma: float

    def __post_init__(self):
        for name in ("alpha", "beta", "gamma"):
            v = getattr(self, name)
            if not (np.isfinite(v) and 0.0 <= v <= 1.0):
                raise DomainError(f"{name} must lie in [0, 1], got {v!r}")
        if abs(self.alpha + self.beta + self.gamma - 1.0) > SIMPLEX_SLACK:
            raise DomainError(
                f"time shares must sum to 1, got {self.alpha + self.beta + self.gamma!r}"
            )

    @classmethod
    def from_alpha_beta(cls, alpha: float, beta: float) -> "TimeShare":
        return cls(float(alpha), float(beta), max(0.0, 1.0 - alpha - beta))


@dataclass(frozen=True)
class SimRateComponents:
    r13_bar: float
    r31_bar: float
    ru2_bar: float
    ru3_bar: float
    rb_bar: float

    @property
    def symmetric_rate(self) -> float:
        return min(self.r13_bar, self.r31_bar, self.rb_bar + self.ru3_bar, self.rb_bar + self.ru2_bar)


def _components(g1, g2, g3, P1, P2, P3, a, b, c):
    """Vectorised per-phase rates; ``g*`` are squared gains, ``a, b, c`` the time shares.

    A zero denominator only occurs when the matching phase fraction is zero,
    so the product is defined as 0 there.
    """
    a, b, c = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (a, b, c)))
    abar = 1.0 - a
    bbar = 1.0 - b
    safe_abar = np.where(abar > 0, abar, 1.0)
    safe_bbar = np.where(bbar > 0, bbar, 1.0)
    p1 = P1 / safe_bbar
    p2 = P2 / safe_abar
    r13 = a * _c(g2 * P3)
    r31 = np.where(bbar > 0, a * _c(g2 * p1), 0.0)
    ru2 = np.where(abar > 0, b * _c(g1 * p2), 0.0)
    ru3 = b * _c(g1 * P3)
    relay = np.minimum(
        np.minimum(_c_plus(g3 * p2 - 0.5), _c_plus(g2 * P3 - 0.5)),
        np.minimum(_c(g2 * p1), _c(g3 * p1)),
    )
    rb = np.where((abar > 0) & (bbar > 0), c * relay, 0.0)
    return r13, r31, ru2, ru3, rb


def _symmetric(g1, g2, g3, P1, P2, P3, a, b, c):
    r13, r31, ru2, ru3, rb = _components(g1, g2, g3, P1, P2, P3, a, b, c)
    return np.minimum(np.minimum(r13, r31), np.minimum(rb + ru3, rb + ru2))


def sim_components(cfg: NetworkConfig, ts: TimeShare) -> SimRateComponents:
    """Per-phase rate bounds for the time share ``ts``."""
    if not isinstance(ts, TimeShare):
        ts = TimeShare(*ts)
    vals = _components(*cfg.gains_squared, cfg.P1, cfg.P2, cfg.P3, ts.alpha, ts.beta, ts.gamma)
    return SimRateComponents(*(float(v) for v in vals))


def sim_rate_at(cfg: NetworkConfig, ts: TimeShare) -> float:
    """Symmetric rate supported by the time share ``ts``."""
    if not isinstance(ts, TimeShare):
        ts = TimeShare(*ts)
    return float(_symmetric(*cfg.gains_squared, cfg.P1, cfg.P2, cfg.P3, ts.alpha, ts.beta, ts.gamma))


def optimize_sim(
    cfg: NetworkConfig,
    tol: float = 1e-3,
    *,
    relay_phase: bool = True,
    points: int = 17,
    rounds: int = 5,
    shrink: float = 4.0,
) -> SearchResult:
    """Maximise the symmetric rate over all time shares.

    The search runs over ``(alpha, beta)`` with ``alpha + beta <= 1`` and
    ``gamma`` the remainder. With ``relay_phase=False`` ``gamma`` is pinned
    to 0 and only ``alpha`` is searched. The returned ``argmax`` is a
    :class:`TimeShare` and ``sim_rate_at(cfg, argmax) == value`` exactly.
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    g1, g2, g3 = cfg.gains_squared
    args = (g1, g2, g3, cfg.P1, cfg.P2, cfg.P3)

    if relay_phase:
        domain = SearchDomain([Simplex(2, 1.0)])

        def objective(x):
            a, b = x[:, 0], x[:, 1]
            return _symmetric(*args, a, b, np.maximum(0.0, 1.0 - a - b))

        to_ts = lambda p: TimeShare.from_alpha_beta(p[0], p[1])
    else:
        domain = SearchDomain([Simplex(2, 1.0, equality=True)])

        def objective(x):
            return _symmetric(*args, x[:, 0], x[:, 1], 0.0)

        to_ts = lambda p: TimeShare(p[0], p[1], 0.0)

    res = refine_grid_max(
        objective, domain, points, rounds, shrink,
        tol=tol, max_rounds=rounds + 6, vectorized=True,
    )
    ts = to_ts(res.argmax)
    return replace(res, argmax=ts, value=sim_rate_at(cfg, ts))


def harmonic_two_way_rate(cfg: NetworkConfig) -> float:
    """Closed-form symmetric rate of phases 1 and 2 alone at equal powers.

    With ``gamma = 0`` and all budgets equal to ``P3``, the best split of time
    between the two two-way phases gives ``C1 * C2 / (C1 + C2)``, half the
    harmonic mean of the two direct-link capacities.
    """
    if not (cfg.P1 == cfg.P3 and cfg.P2 == cfg.P3):
        raise UnsupportedConfigError("the harmonic closed form needs P1 == P2 == P3")
    c1 = capacity(cfg.h1 ** 2 * cfg.P3)
    c2 = capacity(cfg.h2 ** 2 * cfg.P3)
    if c1 + c2 == 0:
        return 0.0
    return c1 * c2 / (c1 + c2)
