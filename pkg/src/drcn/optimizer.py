"""Deterministic refined-grid maximisation over boxes and simplex groups.

The objectives in this package are minima of several monotone rate terms, so
they are piecewise smooth with kinks wherever the active term changes. A
shrinking uniform grid handles that without gradients, and the result is
reproducible bit for bit.

:func:`refine_grid_max_many` runs the same search on a batch of problems whose
domains share one layout (for example the same simplex with different
budgets). Every problem follows exactly the path it would follow alone, so a
batched run and a loop of :func:`refine_grid_max` calls agree bit for bit.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Callable, Sequence

import numpy as np

MAX_DIM = 6
_FEAS_SLACK = 1e-12


class SearchError(RuntimeError):
    """The objective returned a non-finite value."""

    def __init__(self, message, point=None):
        super().__init__(message)
        self.point = point


class UnsupportedDomainError(ValueError):
    pass


@dataclass(frozen=True)
class Box:
    lo: float
    hi: float

    @property
    def size(self) -> int:
        return 1


@dataclass(frozen=True)
class Simplex:
    """``size`` nonnegative coordinates whose sum is ``<= bound`` (or ``== bound``).

    With ``equality=True`` the last coordinate of the group is not gridded; it
    is set to the remainder ``bound - sum(others)``.
    """

    size: int
    bound: float
    equality: bool = False


@dataclass(frozen=True)
class SearchDomain:
    parts: tuple

    def __init__(self, parts: Sequence[Box | Simplex]):
        parts = tuple(parts)
        for p in parts:
            if isinstance(p, Box):
                if not (np.isfinite(p.lo) and np.isfinite(p.hi)) or p.lo > p.hi:
                    raise UnsupportedDomainError(f"bad box bounds {p}")
            elif isinstance(p, Simplex):
                if p.size < 1 or not np.isfinite(p.bound) or p.bound < 0:
                    raise UnsupportedDomainError(f"bad simplex group {p}")
                if p.equality and p.size < 2:
                    raise UnsupportedDomainError("an equality simplex group needs at least 2 coordinates")
            else:
                raise TypeError(f"unknown domain part {p!r}")
        object.__setattr__(self, "parts", parts)
        if self.dim > MAX_DIM:
            raise UnsupportedDomainError(f"dimension {self.dim} exceeds the supported maximum {MAX_DIM}")
        if self.dim == 0:
            raise UnsupportedDomainError("empty search domain")

    @property
    def dim(self) -> int:
        return sum(p.size for p in self.parts)

    @property
    def layout(self) -> tuple:
        return tuple((type(p).__name__, p.size, getattr(p, "equality", False)) for p in self.parts)

    def bounds(self) -> tuple[np.ndarray, np.ndarray]:
        lo, hi = [], []
        for p in self.parts:
            if isinstance(p, Box):
                lo.append(p.lo)
                hi.append(p.hi)
            else:
                lo += [0.0] * p.size
                hi += [p.bound] * p.size
        return np.array(lo, dtype=float), np.array(hi, dtype=float)

    def feasible(self, points: np.ndarray) -> np.ndarray:
        """Row mask of points inside the domain (up to a 1e-12 slack)."""
        points = np.atleast_2d(np.asarray(points, dtype=float))
        ok = np.ones(len(points), dtype=bool)
        j = 0
        for p in self.parts:
            block = points[:, j:j + p.size]
            if isinstance(p, Box):
                ok &= (block[:, 0] >= p.lo - _FEAS_SLACK) & (block[:, 0] <= p.hi + _FEAS_SLACK)
            else:
                tol = _FEAS_SLACK * max(1.0, p.bound)
                ok &= np.all(block >= -tol, axis=1)
                total = block.sum(axis=1)
                ok &= total <= p.bound + tol
                if p.equality:
                    ok &= total >= p.bound - tol
            j += p.size
        return ok


@dataclass(frozen=True)
class SearchResult:
    """Outcome of a maximisation.

    ``argmax`` is a coordinate tuple from the engine; the scheme modules swap
    it for a typed allocation. ``value`` is always the objective re-evaluated
    at ``argmax``.
    """

    value: float
    argmax: Any
    evaluations: int
    converged: bool
    resolution: tuple
    history: tuple = field(default=(), repr=False)
    details: dict = field(default_factory=dict, repr=False, compare=False)


def _product(blocks: list[np.ndarray]) -> np.ndarray:
    # Earlier blocks vary slowest, so rows come out in lexicographic order.
    out = blocks[0]
    for b in blocks[1:]:
        out = np.hstack([np.repeat(out, len(b), axis=0), np.tile(b, (len(out), 1))])
    return out


class _Layout:
    """Which coordinates are gridded and how simplex groups map onto them."""

    def __init__(self, domain: SearchDomain, n: int):
        self.dim = domain.dim
        self.gridded = []
        self.groups = []  # (start, size, equality)
        blocks = []
        j = 0
        unit = np.linspace(0.0, 1.0, n)
        for p in domain.parts:
            if isinstance(p, Box):
                self.gridded.append(j)
                blocks.append(unit[:, None])
            else:
                free = p.size - 1 if p.equality else p.size
                self.gridded += list(range(j, j + free))
                mesh = np.meshgrid(*([unit] * free), indexing="ij")
                blocks.append(np.stack(mesh, axis=-1).reshape(-1, free))
                self.groups.append((j, p.size, p.equality))
            j += p.size
        self.gridded = np.array(self.gridded)
        self.frac = _product(blocks)

    def bounds(self, domains):
        lo = np.array([d.bounds()[0] for d in domains])
        hi = np.array([d.bounds()[1] for d in domains])
        simplex_bounds = np.array(
            [[p.bound for p in d.parts if isinstance(p, Simplex)] for d in domains]
        ).reshape(len(domains), -1)
        return lo, hi, simplex_bounds

    def points(self, wlo, width, lo, hi, sbounds):
        """Grid points ``(K, m, dim)`` and a feasibility mask ``(K, m)``."""
        K = wlo.shape[0]
        m = self.frac.shape[0]
        g = self.gridded
        if len(g) == self.dim:
            # Windows start inside the domain, so only rounding can overshoot hi.
            pts = wlo[:, None, :] + self.frac[None, :, :] * width[:, None, :]
            np.minimum(pts, hi[:, None, :], out=pts)
        else:
            pts = np.zeros((K, m, self.dim))
            grid = wlo[:, None, :] + self.frac[None, :, :] * width[:, None, :]
            pts[:, :, g] = np.minimum(grid, hi[:, None, g])
        ok = np.ones((K, m), dtype=bool)
        for gi, (start, size, equality) in enumerate(self.groups):
            bound = sbounds[:, gi][:, None]
            tol = _FEAS_SLACK * np.maximum(1.0, bound)
            stop = start + size - 1 if equality else start + size
            total = pts[:, :, start].copy()
            for c in range(start + 1, stop):
                total += pts[:, :, c]
            if equality:
                rest = bound - total
                ok &= rest >= -tol
                pts[:, :, start + size - 1] = np.minimum(np.maximum(rest, 0.0), bound)
            else:
                ok &= total <= bound + tol
        return pts, ok


def _call(objective, points, index):
    vals = np.asarray(objective(points, index), dtype=float).reshape(-1)
    if vals.shape[0] != points.shape[0]:
        raise SearchError("objective returned the wrong number of values")
    bad = ~np.isfinite(vals)
    if np.any(bad):
        pt = tuple(float(v) for v in points[np.argmax(bad)])
        raise SearchError(f"objective is not finite at {pt}", point=pt)
    return vals


def refine_grid_max_many(
    objective: Callable,
    domains: Sequence[SearchDomain],
    initial_points_per_dim: int = 17,
    rounds: int = 5,
    shrink: float = 4.0,
    *,
    tol: float = 0.0,
    max_rounds: int | None = None,
) -> list[SearchResult]:
    """Run :func:`refine_grid_max` on several problems at once.

    ``objective(points, index)`` receives an ``(N, dim)`` array of feasible
    points and the problem index of each row, and returns ``N`` values. All
    domains must share one layout.
    """
    n = int(initial_points_per_dim)
    if n < 3:
        raise ValueError("initial_points_per_dim must be >= 3")
    if rounds < 1:
        raise ValueError("rounds must be >= 1")
    if not shrink > 1:
        raise ValueError("shrink must be > 1")
    domains = list(domains)
    if not domains:
        return []
    if len({d.layout for d in domains}) != 1:
        raise UnsupportedDomainError("batched domains must share one layout")
    max_rounds = rounds if max_rounds is None else max(rounds, int(max_rounds))

    lay = _Layout(domains[0], n)
    g = lay.gridded
    K = len(domains)
    lo, hi, sbounds = lay.bounds(domains)
    wlo = lo[:, g].copy()
    width = hi[:, g] - lo[:, g]
    spacing = width / (n - 1)

    best_pt = np.zeros((K, lay.dim))
    best_val = np.full(K, -np.inf)
    have = np.zeros(K, dtype=bool)
    history = [[] for _ in range(K)]
    evaluations = np.zeros(K, dtype=int)
    active = np.ones(K, dtype=bool)

    for r in range(max_rounds):
        idx = np.flatnonzero(active)
        if idx.size == 0:
            break
        pts, ok = lay.points(wlo[idx], width[idx], lo[idx], hi[idx], sbounds[idx])
        kk, mm = np.nonzero(ok)
        vals = np.full(ok.shape, -np.inf)
        vals[kk, mm] = _call(objective, pts[kk, mm], idx[kk])
        evaluations[idx] += ok.sum(axis=1)
        spacing[idx] = width[idx] / (n - 1)

        # First maximum per row is the lexicographically smallest of the round,
        # since grid rows are generated in lexicographic order.
        i = np.argmax(vals, axis=1)
        rows = np.arange(idx.size)
        v = vals[rows, i]
        cand = pts[rows, i]
        inc = best_pt[idx]
        differ = cand != inc
        first = np.argmax(differ, axis=1)
        lex_less = differ.any(axis=1) & (cand[rows, first] < inc[rows, first])
        take = np.isfinite(v) & (~have[idx] | (v > best_val[idx]) | ((v == best_val[idx]) & lex_less))
        won = idx[take]
        best_val[won], best_pt[won], have[won] = v[take], cand[take], True
        for k in idx:
            history[k].append(float(best_val[k]))
        prev = np.array([history[k][-2] if len(history[k]) > 1 else -np.inf for k in idx])
        improvement = np.where(np.isfinite(prev), best_val[idx] - prev, np.inf)
        if r + 1 == max_rounds:
            active[idx] = False
        elif r + 1 >= rounds:
            active[idx[improvement <= tol]] = False

        upd = np.flatnonzero(active)
        if upd.size:
            w = width[upd] / shrink
            lo_g, hi_g = lo[upd][:, g], hi[upd][:, g]
            nlo = best_pt[upd][:, g] - w / 2
            nlo = np.where(nlo + w > hi_g, hi_g - w, nlo)
            nlo = np.maximum(nlo, lo_g)
            wlo[upd], width[upd] = nlo, w

    argmax = best_pt.copy()
    finals = _call(objective, argmax, np.arange(K))
    results = []
    for k in range(K):
        h = history[k]
        improvement = h[-1] - h[-2] if len(h) > 1 else np.inf
        res_full = np.zeros(lay.dim)
        res_full[g] = spacing[k]
        for start, size, equality in lay.groups:
            if equality:
                res_full[start + size - 1] = res_full[start:start + size - 1].sum()
        results.append(SearchResult(
            value=float(finals[k]),
            argmax=tuple(float(v) for v in argmax[k]),
            evaluations=int(evaluations[k]) + 1,
            converged=bool(improvement <= tol),
            resolution=tuple(float(s) for s in res_full),
            history=tuple(h),
        ))
    return results


def refine_grid_max(
    objective: Callable,
    domain: SearchDomain,
    initial_points_per_dim: int = 17,
    rounds: int = 5,
    shrink: float = 4.0,
    *,
    tol: float = 0.0,
    max_rounds: int | None = None,
    vectorized: bool = False,
) -> SearchResult:
    """Maximise ``objective`` over ``domain`` by repeated grid refinement.

    Each round evaluates a uniform grid over the current window (simplex
    groups keep only feasible lattice points), keeps the best point, and
    shrinks the window by ``shrink`` around it. A window that would leave the
    domain is shifted back inside rather than cut. Ties go to the
    lexicographically smallest point. The default profile (17 points, 5
    rounds, shrink 4) ends with a grid step of ``range / 4096``.

    Parameters
    ----------
    objective : callable
        Maps a coordinate tuple to a float, or, with ``vectorized=True``, an
        ``(m, dim)`` array to ``m`` floats.
    domain : SearchDomain
    initial_points_per_dim : int
        Grid points per coordinate in every round (>= 3).
    rounds : int
        Number of rounds always performed.
    shrink : float
        Window reduction factor per round (> 1).
    tol : float
        Convergence threshold on the improvement of the last round.
    max_rounds : int, optional
        If given, keep refining past ``rounds`` while the last improvement
        exceeds ``tol``, up to this many rounds.

    Raises
    ------
    SearchError
        The objective is not finite at some feasible point.
    UnsupportedDomainError
        The domain has more than six coordinates.
    """
    if vectorized:
        wrapped = lambda pts, index: objective(pts)
    else:
        wrapped = lambda pts, index: [float(objective(tuple(float(v) for v in p))) for p in pts]
    return refine_grid_max_many(
        wrapped, [domain], initial_points_per_dim, rounds, shrink,
        tol=tol, max_rounds=max_rounds,
    )[0]
