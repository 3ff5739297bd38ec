"""Separate uplink/downlink: a cooperative MAC phase followed by a cooperative BC phase.

The uplink fraction ``tau`` runs the cooperative multiple-access scheme (each
user splits its power into a cooperation signal for the other user, a direct
signal and a share of a common signal). The remaining ``1 - tau`` runs the
cooperative broadcast scheme (user 1 decodes and forwards, user 2 compresses
and forwards). The symmetric rate is the smaller of the two time-weighted
symmetric rates.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .model import DomainError, NetworkConfig, _c
from .optimizer import Box, SearchDomain, SearchResult, Simplex, refine_grid_max, refine_grid_max_many

_SLACK = 1e-12

# (points per dim, rounds, shrink) for the grid searches. The downlink problem
# is solved by bisection instead (see _bc_bisect). The inner MAC search
# is 4-D and runs once per distinct outer (p1u, p2u), so it gets a lean grid
# with gentle shrinking. Every tau point costs a downlink search and every
# outer point a full tau search, so both stay coarse and refine more rounds.
MAC_PROFILE = (7, 9, 2.0)
TAU_PROFILE = (9, 6, 3.0)
OUTER_PROFILE = (9, 6, 3.0)


@dataclass(frozen=True)
class MacPowerSplit:
    """Uplink powers: cooperation ``p21``/``p12``, direct ``p31``/``p32``, common ``pc1``/``pc2``."""

    p21: float
    p31: float
    pc1: float
    p12: float
    p32: float
    pc2: float

    def __post_init__(self):
        for name, v in vars(self).items():
            if not (np.isfinite(v) and v >= -_SLACK):
                raise DomainError(f"{name} must be a nonnegative power, got {v!r}")

    @property
    def user1_total(self) -> float:
        return self.p21 + self.p31 + self.pc1

    @property
    def user2_total(self) -> float:
        return self.p12 + self.p32 + self.pc2


@dataclass(frozen=True)
class BcPowerSplit:
    """Downlink powers: BS common ``pc3``, user-2 superposition ``p23``, user-1 ``p13``; user-2 compress power ``p2``."""

    pc3: float
    p23: float
    p13: float
    p2: float

    def __post_init__(self):
        for name, v in vars(self).items():
            if not (np.isfinite(v) and v >= -_SLACK):
                raise DomainError(f"{name} must be a nonnegative power, got {v!r}")

    @property
    def bs_total(self) -> float:
        return self.pc3 + self.p23 + self.p13


@dataclass(frozen=True)
class SepOuterPoint:
    """Uplink time fraction ``tau`` and uplink powers ``p1u <= P1``, ``p2u <= P2``."""

    tau: float
    p1u: float
    p2u: float

    def check(self, cfg: NetworkConfig) -> None:
        if not (0.0 <= self.tau <= 1.0):
            raise DomainError(f"tau must lie in [0, 1], got {self.tau!r}")
        if not (-_SLACK <= self.p1u <= cfg.P1 + _SLACK):
            raise DomainError(f"p1u must lie in [0, P1], got {self.p1u!r}")
        if not (-_SLACK <= self.p2u <= cfg.P2 + _SLACK):
            raise DomainError(f"p2u must lie in [0, P2], got {self.p2u!r}")

    def downlink_powers(self, cfg: NetworkConfig) -> tuple[float, float]:
        """User powers left for the downlink phase, ``(P - tau * pu) / (1 - tau)``."""
        tbar = 1.0 - self.tau
        if tbar <= 0:
            return 0.0, 0.0
        p1d = max(0.0, (cfg.P1 - self.tau * self.p1u) / tbar)
        p2d = max(0.0, (cfg.P2 - self.tau * self.p2u) / tbar)
        return p1d, p2d


def _within(total, budget):
    return total <= budget + _SLACK * max(1.0, budget)


def _mac_rate(g1, g2, g3, B1, B2, p21, pc1, p12, pc2, p31, p32):
    A1 = _c(g3 * p21 / (1.0 + g3 * p31))
    A2 = _c(g3 * p12 / (1.0 + g3 * p32))
    r1 = A1 + _c(g2 * p31)
    r2 = A2 + _c(g1 * p32)
    sum1 = _c(g2 * B1 + g1 * B2 + 2.0 * np.sqrt(g1 * g2 * pc1 * pc2))
    sum2 = _c(g2 * p31 + g1 * p32) + A1 + A2
    return np.minimum(np.minimum(r1, r2), 0.5 * np.minimum(sum1, sum2))


def _h3_power(h3, cf_exponent):
    if cf_exponent not in (2, 3):
        raise ValueError(f"cf_exponent must be 2 or 3, got {cf_exponent!r}")
    return abs(h3) ** cf_exponent


def _bc_rate(g1, g2, g3, h3e, P1, pc3, p23, p13, p2):
    r1 = _c(g2 * p13 + g1 * h3e * p13 * p2 / (1.0 + g3 * p2 + (g1 + g2) * p13))
    r21 = _c((g1 * (pc3 + p23) + g3 * P1 + 2.0 * np.sqrt(g1 * g3 * p23 * P1)) / (1.0 + g1 * p13))
    r22 = _c(g2 * pc3 / (1.0 + g2 * p13))
    return np.minimum(np.minimum(r1, r21), r22)


def mac_c_rate_at(h1, h2, h3, split: MacPowerSplit, budget1=None, budget2=None) -> float:
    """Symmetric uplink rate of the cooperative MAC for a given power split.

    The first sum-rate term uses the full budgets; they default to the
    per-user totals of ``split``.
    """
    B1 = split.user1_total if budget1 is None else float(budget1)
    B2 = split.user2_total if budget2 is None else float(budget2)
    if not (_within(split.user1_total, B1) and _within(split.user2_total, B2)):
        raise DomainError("MAC power split exceeds the user budgets")
    s = split
    return float(_mac_rate(h1 ** 2, h2 ** 2, h3 ** 2, B1, B2,
                           s.p21, s.pc1, s.p12, s.pc2, s.p31, s.p32))


def bc_c_rate_at(h1, h2, h3, relay_power, split: BcPowerSplit, cf_exponent: int = 2,
                 bs_budget=None, p2_budget=None) -> float:
    """Symmetric downlink rate of the cooperative BC for a given power split.

    ``relay_power`` is user 1's forwarding power. ``cf_exponent`` is the power
    of ``|h3|`` in the compress-forward gain term (2 by default, 3 to follow
    the formula as originally published).
    """
    h3e = _h3_power(h3, cf_exponent)
    if bs_budget is not None and not _within(split.bs_total, float(bs_budget)):
        raise DomainError("BC power split exceeds the BS budget")
    if p2_budget is not None and not _within(split.p2, float(p2_budget)):
        raise DomainError("compress-forward power exceeds user 2's budget")
    if relay_power < 0:
        raise DomainError("relay power must be nonnegative")
    s = split
    return float(_bc_rate(h1 ** 2, h2 ** 2, h3 ** 2, h3e, float(relay_power),
                          s.pc3, s.p23, s.p13, s.p2))


class _Memo(dict):
    """Plain dict cache of inner search results, flushed when it grows large."""

    def __init__(self, limit):
        super().__init__()
        self.limit = limit

    def store(self, key, value):
        if len(self) >= self.limit:
            self.clear()
        self[key] = value


_MAC_MEMO = _Memo(50_000)
_BC_MEMO = _Memo(200_000)


def _solve_mac(g1, g2, g3, B1s, B2s, tol) -> list[SearchResult]:
    keys = [(g1, g2, g3, float(b1), float(b2), tol) for b1, b2 in zip(B1s, B2s)]
    found = {k: _MAC_MEMO[k] for k in keys if k in _MAC_MEMO}
    todo = sorted(set(keys) - found.keys())
    if todo:
        b1 = np.array([k[3] for k in todo])
        b2 = np.array([k[4] for k in todo])
        domains = [SearchDomain([Simplex(2, k[3]), Simplex(2, k[4])]) for k in todo]

        def objective(x, index):
            B1, B2 = b1[index], b2[index]
            p21, pc1, p12, pc2 = x.T
            p31 = np.maximum(0.0, B1 - p21 - pc1)
            p32 = np.maximum(0.0, B2 - p12 - pc2)
            return _mac_rate(g1, g2, g3, B1, B2, p21, pc1, p12, pc2, p31, p32)

        n, rounds, shrink = MAC_PROFILE
        for k, res in zip(todo, refine_grid_max_many(objective, domains, n, rounds, shrink,
                                                      tol=tol, max_rounds=rounds + 4)):
            _MAC_MEMO.store(k, res)
            found[k] = res
    return [found[k] for k in keys]


_BISECT_STEPS = 52


def _bc_split(g1, g2, g3, P1, p13, rest):
    """Best ``pc3`` in ``[0, rest]`` at fixed ``p13`` and the resulting ``min(R21, R22)``.

    With ``p23 = rest - pc3``, R21 falls and R22 rises as ``pc3`` grows, so
    the maximiser of their minimum is the crossing point. Writing
    ``u = sqrt(p23)`` turns the crossing into the quadratic
    ``a u**2 + b L u + (b K - a rest) = 0`` with ``a = g2 / (1 + g2 p13)``,
    ``b = 1 / (1 + g1 p13)``, ``K = g1 rest + g3 P1``, ``L = 2 sqrt(g1 g3 P1)``.
    If R22 stays below R21 everywhere, all of ``rest`` goes to ``pc3``.
    """
    a = g2 / (1.0 + g2 * p13)
    b = 1.0 / (1.0 + g1 * p13)
    K = g1 * rest + g3 * P1
    L = 2.0 * np.sqrt(g1 * g3 * P1)
    c0 = b * K - a * rest
    cross = (a > 0) & (c0 < 0)
    safe_a = np.where(cross, a, 1.0)
    disc = np.maximum((b * L) ** 2 - 4.0 * safe_a * c0, 0.0)
    u = (-b * L + np.sqrt(disc)) / (2.0 * safe_a)
    p23 = np.where(cross, np.clip(u * u, 0.0, rest), 0.0)
    pc3 = rest - p23
    r21 = _c((g1 * rest + g3 * P1 + 2.0 * np.sqrt(g1 * g3 * p23 * P1)) / (1.0 + g1 * p13))
    r22 = _c(g2 * pc3 / (1.0 + g2 * p13))
    return pc3, np.minimum(r21, r22)


def _bc_bisect(g1, g2, g3, h3e, P1, p2, S):
    """BC optimum, exact up to rounding, for arrays of problems.

    R1 only depends on ``p13`` and grows with it, while the best
    ``min(R21, R22)`` at fixed ``p13`` shrinks with it, so the optimal
    ``p13`` is again a crossing point. Returns ``(value, pc3, p23, p13, width)``.
    """
    S = np.asarray(S, dtype=float)
    P1 = np.asarray(P1, dtype=float)
    p2 = np.asarray(p2, dtype=float)

    def r1(p13):
        return _c(g2 * p13 + g1 * h3e * p13 * p2 / (1.0 + g3 * p2 + (g1 + g2) * p13))

    lo = np.zeros_like(S)
    hi = S.copy()
    for _ in range(_BISECT_STEPS):
        mid = 0.5 * (lo + hi)
        up = r1(mid) < _bc_split(g1, g2, g3, P1, mid, np.maximum(S - mid, 0.0))[1]
        lo = np.where(up, mid, lo)
        hi = np.where(up, hi, mid)
    best = None
    for p13 in (lo, hi):
        rest = np.maximum(S - p13, 0.0)
        pc3 = _bc_split(g1, g2, g3, P1, p13, rest)[0]
        p23 = np.maximum(rest - pc3, 0.0)
        v = _bc_rate(g1, g2, g3, h3e, P1, pc3, p23, p13, p2)
        if best is None:
            best = [v, pc3, p23, p13]
        else:
            take = v >= best[0]
            best = [np.where(take, new, old) for new, old in zip((v, pc3, p23, p13), best)]
    return (*best, hi - lo)


# Rate evaluations per BC solve.
_BC_EVALS = _BISECT_STEPS + 2


def _solve_bc(g1, g2, g3, h3e, P1s, p2s, Ss, tol) -> list[SearchResult]:
    # tol is part of the signature for symmetry with the grid solvers; bisection
    # runs to floating-point resolution regardless.
    keys = [(g1, g2, g3, h3e, float(a), float(b), float(c)) for a, b, c in zip(P1s, p2s, Ss)]
    found = {k: _BC_MEMO[k] for k in keys if k in _BC_MEMO}
    todo = sorted(set(keys) - found.keys())
    if todo:
        P1 = np.array([k[4] for k in todo])
        p2 = np.array([k[5] for k in todo])
        S = np.array([k[6] for k in todo])
        value, pc3, p23, p13, width = _bc_bisect(g1, g2, g3, h3e, P1, p2, S)
        for j, k in enumerate(todo):
            res = SearchResult(value=float(value[j]),
                               argmax=(float(pc3[j]), float(p23[j]), float(p13[j])),
                               evaluations=_BC_EVALS, converged=True,
                               resolution=(float(width[j]),) * 3)
            _BC_MEMO.store(k, res)
            found[k] = res
    return [found[k] for k in keys]


def clear_caches() -> None:
    _MAC_MEMO.clear()
    _BC_MEMO.clear()


def mac_c_optimize(h1, h2, h3, budget1, budget2, tol: float = 1e-3) -> SearchResult:
    """Best symmetric uplink rate of the cooperative MAC.

    Each user spends its whole budget (the direct power is the remainder), so
    the search is over ``(p21, pc1, p12, pc2)``.
    """
    B1, B2 = float(budget1), float(budget2)
    if B1 < 0 or B2 < 0:
        raise DomainError("budgets must be nonnegative")
    res = _solve_mac(float(h1) ** 2, float(h2) ** 2, float(h3) ** 2, [B1], [B2], float(tol))[0]
    p21, pc1, p12, pc2 = res.argmax
    split = MacPowerSplit(p21=p21, p31=max(0.0, B1 - p21 - pc1), pc1=pc1,
                          p12=p12, p32=max(0.0, B2 - p12 - pc2), pc2=pc2)
    return replace(res, argmax=split, value=mac_c_rate_at(h1, h2, h3, split, B1, B2))


def bc_c_optimize(h1, h2, h3, relay_power, p2_budget, bs_budget, tol: float = 1e-3,
                  cf_exponent: int = 2) -> SearchResult:
    """Best symmetric downlink rate of the cooperative BC.

    The compress-forward power sits at its budget (the only term it enters
    grows with it) and the BS spends its whole budget. The remaining split of
    ``(pc3, p23, p13)`` is found from monotone crossings: at fixed ``p13``
    the best ``pc3`` balances R21 (falling in ``pc3``) against R22 (rising)
    in closed form, and that level falls in ``p13`` while R1 rises, so
    ``p13`` is found by bisection. ``tol`` is accepted for interface symmetry; the result is exact up
    to floating-point rounding.
    """
    P1, p2, S = float(relay_power), float(p2_budget), float(bs_budget)
    if min(P1, p2, S) < 0:
        raise DomainError("powers and budgets must be nonnegative")
    h3e = _h3_power(h3, cf_exponent)
    res = _solve_bc(float(h1) ** 2, float(h2) ** 2, float(h3) ** 2, h3e, [P1], [p2], [S], float(tol))[0]
    pc3, p23, p13 = res.argmax
    split = BcPowerSplit(pc3=pc3, p23=p23, p13=p13, p2=p2)
    value = bc_c_rate_at(h1, h2, h3, P1, split, cf_exponent, S, p2)
    return replace(res, argmax=split, value=value)


def _downlink_powers(P1, P2, tau, p1u, p2u):
    tbar = 1.0 - tau
    safe = np.where(tbar > 0, tbar, 1.0)
    p1d = np.where(tbar > 0, np.maximum(0.0, (P1 - tau * p1u) / safe), 0.0)
    p2d = np.where(tbar > 0, np.maximum(0.0, (P2 - tau * p2u) / safe), 0.0)
    return p1d, p2d


def _sep_batch(cfg, tau, p1u, p2u, tol, cf_exponent, cooperation):
    """Uplink and downlink symmetric rates (0 where tau is 0 or 1) for arrays of outer points."""
    tau, p1u, p2u = (np.asarray(v, dtype=float).reshape(-1) for v in (tau, p1u, p2u))
    inner = tol / 4
    h3 = cfg.h3 if cooperation else 0.0
    g1, g2, g3 = cfg.h1 ** 2, cfg.h2 ** 2, h3 ** 2
    h3e = _h3_power(h3, cf_exponent)
    live = (tau > 0.0) & (tau < 1.0)
    ru = np.zeros(tau.shape)
    rd = np.zeros(tau.shape)
    ul = [None] * tau.size
    dl = [None] * tau.size
    idx = np.flatnonzero(live)
    if idx.size:
        macs = _solve_mac(g1, g2, g3, p1u[idx], p2u[idx], inner)
        p1d, p2d = _downlink_powers(cfg.P1, cfg.P2, tau[idx], p1u[idx], p2u[idx])
        if not cooperation:
            p1d = np.zeros_like(p1d)
            p2d = np.zeros_like(p2d)
        bcs = _solve_bc(g1, g2, g3, h3e, p1d, p2d, cfg.P3 / (1.0 - tau[idx]), inner)
        for j, i in enumerate(idx):
            ru[i], rd[i] = macs[j].value, bcs[j].value
            ul[i], dl[i] = macs[j], bcs[j]
    rate = np.where(live, np.minimum(tau * ru, (1.0 - tau) * rd), 0.0)
    return rate, ul, dl


def sep_phases(cfg: NetworkConfig, pt: SepOuterPoint, tol: float = 5e-3, cf_exponent: int = 2,
               cooperation: bool = True) -> tuple[SearchResult, SearchResult] | None:
    """Inner uplink and downlink optimisations behind :func:`sep_rate_at`.

    Returns ``None`` at ``tau`` in {0, 1}, where one direction gets no time.
    With ``cooperation=False`` the D2D link is ignored and neither user
    forwards anything in the downlink.
    """
    pt.check(cfg)
    if pt.tau <= 0.0 or pt.tau >= 1.0:
        return None
    h3 = cfg.h3 if cooperation else 0.0
    p1d, p2d = _downlink_powers(cfg.P1, cfg.P2, pt.tau, pt.p1u, pt.p2u)
    if not cooperation:
        p1d = p2d = 0.0
    ul = mac_c_optimize(cfg.h1, cfg.h2, h3, pt.p1u, pt.p2u, tol / 4)
    dl = bc_c_optimize(cfg.h1, cfg.h2, h3, float(p1d), float(p2d), cfg.P3 / (1.0 - pt.tau),
                       tol / 4, cf_exponent)
    return ul, dl


def sep_rate_at(cfg: NetworkConfig, pt: SepOuterPoint, tol: float = 5e-3, cf_exponent: int = 2,
                cooperation: bool = True) -> float:
    """Symmetric rate ``min(tau * R_up, (1 - tau) * R_down)`` at one outer point."""
    pt.check(cfg)
    rate, _, _ = _sep_batch(cfg, pt.tau, pt.p1u, pt.p2u, tol, cf_exponent, cooperation)
    return float(rate[0])


def _best_tau(cfg, p1u, p2u, tol, cf_exponent, cooperation) -> list[SearchResult]:
    """Batched 1-D search over ``tau`` for each outer power pair."""
    domains = [SearchDomain([Box(0.0, 1.0)])] * len(p1u)

    def objective(t, index):
        return _sep_batch(cfg, t[:, 0], p1u[index], p2u[index], tol, cf_exponent, cooperation)[0]

    n, rounds, shrink = TAU_PROFILE
    return refine_grid_max_many(objective, domains, n, rounds, shrink, tol=tol / 4,
                                max_rounds=rounds + 3)


def optimize_sep(cfg: NetworkConfig, tol: float = 5e-3, cf_exponent: int = 2,
                 cooperation: bool = True) -> SearchResult:
    """Maximise the separated-UL/DL symmetric rate over ``(tau, p1u, p2u)``.

    The outer refined grid runs over the uplink powers ``(p1u, p2u)``; each
    outer point gets its own refined search over ``tau``. Splitting ``tau``
    out follows the ridge ``tau * R_up = (1 - tau) * R_down`` far better than
    a joint 3-D grid. ``details`` of the result holds the inner uplink and
    downlink searches at the optimum under ``"uplink"`` and ``"downlink"``.
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    _h3_power(cfg.h3, cf_exponent)
    domain = SearchDomain([Box(0.0, cfg.P1), Box(0.0, cfg.P2)])
    taus = {}

    def objective(x):
        found = _best_tau(cfg, x[:, 0], x[:, 1], tol, cf_exponent, cooperation)
        for p, r in zip(map(tuple, x), found):
            taus[p] = r
        return np.array([r.value for r in found])

    n, rounds, shrink = OUTER_PROFILE
    res = refine_grid_max(objective, domain, n, rounds, shrink, tol=tol,
                          max_rounds=rounds + 3, vectorized=True)
    p1u, p2u = res.argmax
    inner = taus[(p1u, p2u)]
    pt = SepOuterPoint(float(inner.argmax[0]), float(p1u), float(p2u))
    value = sep_rate_at(cfg, pt, tol, cf_exponent, cooperation)
    phases = sep_phases(cfg, pt, tol, cf_exponent, cooperation)
    details = {} if phases is None else {"uplink": phases[0], "downlink": phases[1]}
    return replace(
        res, argmax=pt, value=value, details=details,
        evaluations=res.evaluations + sum(r.evaluations for r in taus.values()),
        converged=res.converged and inner.converged,
        resolution=tuple(inner.resolution) + tuple(res.resolution),
    )


def baseline_no_cooperation(cfg: NetworkConfig, tol: float = 5e-3) -> SearchResult:
    """Separated UL/DL with the D2D link switched off: a plain MAC/BC time share."""
    return optimize_sep(cfg.replace(h3=0.0), tol, cf_exponent=2, cooperation=False)
