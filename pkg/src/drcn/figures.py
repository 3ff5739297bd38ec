"""Parameter sweeps, CSV output and regression against the shipped reference curves.

Two sweep variables are supported: the D2D gain ``h3`` and the stronger
user's SNR ``snr2 = h2**2 * P`` with ``P1 = P2 = P3 = P``. Sweeps take linear
values; decibel conversion lives in the CLI.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from .model import NetworkConfig, validate_config
from .separated import baseline_no_cooperation, optimize_sep
from .simultaneous import optimize_sim

SCHEMES = ("sim", "sep", "baseline")
COLUMNS = {"sim": "r_sim", "sep": "r_sep", "baseline": "r_nocoop"}
CURVES = ("r_sim", "r_sep", "r_nocoop", "upper_bound")


class SweepError(ValueError):
    pass


@dataclass(frozen=True)
class SweepSpec:
    """A one-parameter sweep over ``h3`` or ``snr2`` around a base configuration.

    For ``snr2`` sweeps the base powers are ignored and every budget is set to
    ``snr2 / h2**2``.
    """

    variable: str
    start: float
    stop: float
    points: int
    base: NetworkConfig
    log: bool = False
    schemes: tuple = SCHEMES
    cf_exponent: int = 2
    sim_tol: float = 1e-3
    sep_tol: float = 5e-3

    def __post_init__(self):
        if self.variable not in ("h3", "snr2"):
            raise SweepError(f"sweep variable must be 'h3' or 'snr2', got {self.variable!r}")
        if not (math.isfinite(self.start) and math.isfinite(self.stop)):
            raise SweepError("sweep bounds must be finite")
        if not self.start < self.stop:
            raise SweepError(f"sweep needs from < to, got {self.start!r} >= {self.stop!r}")
        if int(self.points) != self.points or self.points < 2:
            raise SweepError(f"sweep needs at least 2 points, got {self.points!r}")
        if self.log and self.start <= 0:
            raise SweepError("log spacing needs from > 0")
        if self.variable == "snr2" and (self.start < 0 or self.base.h2 == 0):
            raise SweepError("snr2 sweeps need snr2 >= 0 and h2 != 0")
        bad = set(self.schemes) - set(SCHEMES)
        if bad or not self.schemes:
            raise SweepError(f"unknown schemes {sorted(bad)!r}; choose from {SCHEMES}")
        if self.cf_exponent not in (2, 3):
            raise SweepError("cf_exponent must be 2 or 3")

    def abscissas(self) -> np.ndarray:
        n = int(self.points)
        if self.log:
            x = np.logspace(math.log10(self.start), math.log10(self.stop), n)
        else:
            x = np.linspace(self.start, self.stop, n)
        x[0], x[-1] = self.start, self.stop
        return x

    def config_at(self, x: float) -> NetworkConfig:
        if self.variable == "h3":
            return self.base.replace(h3=float(x))
        P = float(x) / self.base.h2 ** 2
        return self.base.replace(P1=P, P2=P, P3=P)


def compute_curves(base: NetworkConfig, variable: str, xs, schemes=SCHEMES, cf_exponent=2,
                   sim_tol=1e-3, sep_tol=5e-3) -> dict[str, np.ndarray]:
    """Evaluate the requested schemes at the abscissas ``xs``.

    Returns a dict of equal-length arrays keyed ``abscissa`` plus one column
    per scheme. The baseline ignores ``h3``, so it is computed once per
    distinct configuration with ``h3 = 0``; an ``h3`` sweep therefore yields
    an exactly constant ``r_nocoop`` column.
    """
    spec = SweepSpec(variable, 0.0, 1.0, 2, base, schemes=tuple(schemes), cf_exponent=cf_exponent)
    xs = np.asarray(xs, dtype=float)
    out = {"abscissa": xs.copy()}
    for s in spec.schemes:
        out[COLUMNS[s]] = np.empty(xs.size)
    nocoop = {}
    for i, x in enumerate(xs):
        cfg = spec.config_at(x)
        if "sim" in spec.schemes:
            out["r_sim"][i] = optimize_sim(cfg, sim_tol).value
        if "sep" in spec.schemes:
            out["r_sep"][i] = optimize_sep(cfg, sep_tol, cf_exponent).value
        if "baseline" in spec.schemes:
            key = cfg.replace(h3=0.0)
            if key not in nocoop:
                nocoop[key] = baseline_no_cooperation(key, sep_tol).value
            out["r_nocoop"][i] = nocoop[key]
    return out


def run_sweep(spec: SweepSpec) -> dict[str, np.ndarray]:
    return compute_curves(spec.base, spec.variable, spec.abscissas(), spec.schemes,
                          spec.cf_exponent, spec.sim_tol, spec.sep_tol)


def _fmt(v) -> str:
    if v is None or (isinstance(v, float) and math.isnan(v)):
        return ""
    return f"{float(v):.15g}"


def format_csv(columns: dict[str, np.ndarray]) -> str:
    """Render columns as CSV, 15 significant digits; NaN becomes an empty field."""
    names = ["abscissa"] + [c for c in ("r_sim", "r_sep", "r_nocoop") if c in columns]
    lines = [",".join(names)]
    for i in range(len(columns["abscissa"])):
        lines.append(",".join(_fmt(columns[c][i]) for c in names))
    return "\n".join(lines) + "\n"


def write_csv(path, columns) -> None:
    with open(path, "w", newline="\n", encoding="ascii") as fh:
        fh.write(format_csv(columns))


def read_csv(path) -> dict[str, np.ndarray]:
    """Read a file written by :func:`write_csv`; empty fields become NaN."""
    with open(path, newline="", encoding="ascii") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    return {name: np.array([float(r[j]) if r[j] else np.nan for r in body])
            for j, name in enumerate(header)}


@dataclass(frozen=True)
class ReferenceDataset:
    """Plotted reference coordinates of one figure, per curve ``(x, y)``."""

    name: str
    curves: dict = field(default_factory=dict)

    def curve(self, name):
        return self.curves[name]

    def value_at(self, curve, x) -> float:
        xs, ys = self.curves[curve]
        hit = np.flatnonzero(np.isclose(xs, x, rtol=1e-12, atol=0.0))
        if hit.size == 0:
            raise KeyError(f"{self.name}/{curve} has no point at {x!r}")
        return float(ys[hit[0]])


def load_reference(name: str, text: str | None = None) -> ReferenceDataset:
    """Load ``fig3`` or ``fig4`` from the packaged reference asset."""
    if text is None:
        text = resources.files("drcn").joinpath("data/reference.csv").read_text(encoding="ascii")
    rows = [r for r in csv.DictReader(io.StringIO(text)) if r["figure"] == name]
    if not rows:
        raise KeyError(f"no reference data for figure {name!r}")
    curves = {}
    for c in CURVES:
        pts = [(float(r["abscissa"]), float(r["value"])) for r in rows if r["curve"] == c]
        if pts:
            xs = np.array([p[0] for p in pts])
            if np.any(np.diff(xs) <= 0):
                raise ValueError(f"{name}/{c}: abscissas must be strictly increasing")
            curves[c] = (xs, np.array([p[1] for p in pts]))
    return ReferenceDataset(name, curves)


# Sweep variable and fixed channel of each figure.
FIGURES = {
    "fig3": ("h3", dict(h1=0.15, h2=1.0, h3=0.0, P1=100.0, P2=100.0, P3=100.0)),
    "fig4": ("snr2", dict(h1=0.5, h2=1.0, h3=2.0, P1=1.0, P2=1.0, P3=1.0)),
}

BELOW_SLACK = 1e-3


def figure_abscissas(ref: ReferenceDataset) -> np.ndarray:
    """Union of all curve abscissas, sorted."""
    xs = np.concatenate([ref.curves[c][0] for c in ref.curves])
    return np.unique(xs)


def compute_figure(name: str, cf_exponent: int = 2, schemes=SCHEMES, sim_tol=1e-3,
                   sep_tol=5e-3, ref: ReferenceDataset | None = None) -> dict[str, np.ndarray]:
    """Recompute a figure's curves, each at its own reference abscissas.

    ``r_sim`` is also evaluated where only the upper bound is given, so the
    bound can be checked everywhere. Entries with no reference point are NaN.
    """
    variable, fixed = FIGURES[name]
    ref = ref or load_reference(name)
    base = validate_config(**fixed)
    xs = figure_abscissas(ref)
    out = {"abscissa": xs}
    wanted = {"sim": ("r_sim", "upper_bound"), "sep": ("r_sep",), "baseline": ("r_nocoop",)}
    for s in schemes:
        col = COLUMNS[s]
        mask = np.zeros(xs.size, dtype=bool)
        for c in wanted[s]:
            if c in ref.curves:
                mask |= np.isin(xs, ref.curves[c][0])
        vals = np.full(xs.size, np.nan)
        if mask.any():
            got = compute_curves(base, variable, xs[mask], (s,), cf_exponent, sim_tol, sep_tol)
            vals[mask] = got[col]
        out[col] = vals
    return out


def _rounded(v):
    # Compare at CSV precision so a re-read file gives the identical summary.
    return float(_fmt(v)) if np.isfinite(v) else np.nan


def deviation_table(columns, ref: ReferenceDataset) -> list[dict]:
    """One row per reference point of a computed curve: computed minus reference."""
    rows = []
    for col in ("r_sim", "r_sep", "r_nocoop"):
        if col not in columns or col not in ref.curves:
            continue
        for x, y in zip(*ref.curves[col]):
            hit = np.flatnonzero(np.isclose(columns["abscissa"], x, rtol=1e-12, atol=0.0))
            if hit.size == 0:
                continue
            c = _rounded(columns[col][hit[0]])
            if np.isnan(c):
                continue
            rows.append(dict(curve=col, abscissa=float(x), reference=float(y), computed=c,
                             deviation=c - float(y)))
    return rows


def _upper_bound_violations(columns, ref):
    if "upper_bound" not in ref.curves or "r_sim" not in columns:
        return 0, 0
    n = bad = 0
    for x, ub in zip(*ref.curves["upper_bound"]):
        hit = np.flatnonzero(np.isclose(columns["abscissa"], x, rtol=1e-12, atol=0.0))
        if hit.size == 0:
            continue
        c = _rounded(columns["r_sim"][hit[0]])
        if np.isnan(c):
            continue
        n += 1
        bad += c > ub + 1e-3
    return n, bad


@dataclass(frozen=True)
class Check:
    label: str
    passed: bool
    detail: str


def _spot(columns, ref, curve, x, lo, hi, label):
    rows = [r for r in deviation_table(columns, ref) if r["curve"] == curve
            and np.isclose(r["abscissa"], x, rtol=1e-12, atol=0.0)]
    if not rows:
        return Check(label, False, "not computed")
    c = rows[0]["computed"]
    return Check(label, bool(lo <= c <= hi), f"computed {c:.6f}, accepted [{lo:.6f}, {hi:.6f}]")


def figure_checks(name: str, columns, ref: ReferenceDataset) -> list[Check]:
    """Pass/fail regression thresholds for one computed figure."""
    rows = deviation_table(columns, ref)
    by = {}
    for r in rows:
        by.setdefault(r["curve"], []).append(r)
    checks = []
    if name == "fig3":
        if "r_sim" in by:
            devs = np.array([r["deviation"] for r in by["r_sim"]])
            checks.append(Check("fig3 r_sim within [-1e-3, +1e-2]",
                                bool(np.all((devs >= -1e-3) & (devs <= 1e-2))),
                                f"deviation range [{devs.min():+.6f}, {devs.max():+.6f}]"))
        if "r_nocoop" in by:
            devs = np.array([r["deviation"] for r in by["r_nocoop"]])
            vals = np.array([r["computed"] for r in by["r_nocoop"]])
            flat = bool(np.all(vals == vals[0]))
            checks.append(Check("fig3 r_nocoop within 5e-3 and constant",
                                bool(np.all(np.abs(devs) <= 5e-3)) and flat,
                                f"max |dev| {np.abs(devs).max():.6f}, constant={flat}"))
        if "r_sep" in by:
            devs = np.array([r["deviation"] for r in by["r_sep"]])
            checks.append(Check("fig3 r_sep max |dev| <= 5e-2", bool(np.abs(devs).max() <= 5e-2),
                                f"max |dev| {np.abs(devs).max():.6f}"))
    elif name == "fig4":
        if "r_sim" in columns:
            checks.append(_spot(columns, ref, "r_sim", 100.0, 1.66176, 1.67276, "fig4 r_sim at 20 dB"))
            checks.append(_spot(columns, ref, "r_sim", 1.0, 0.1845 - 5e-3, 0.1845 + 5e-3,
                                "fig4 r_sim at 0 dB"))
        if "r_sep" in columns:
            y = ref.value_at("r_sep", 1.0)
            checks.append(_spot(columns, ref, "r_sep", 1.0, y - 3e-2, y + 3e-2, "fig4 r_sep at 0 dB"))
            y = ref.value_at("r_sep", 100.0)
            checks.append(_spot(columns, ref, "r_sep", 100.0, y - 5e-2, y + 5e-2, "fig4 r_sep at 20 dB"))
        if "r_nocoop" in columns:
            y = ref.value_at("r_nocoop", 100.0)
            checks.append(_spot(columns, ref, "r_nocoop", 100.0, y - 3e-2, y + 3e-2,
                                "fig4 r_nocoop at 20 dB"))
        if "r_sim" in columns and "r_sep" in columns:
            i = np.flatnonzero(np.isclose(columns["abscissa"], 1.0))[0]
            s, p = _rounded(columns["r_sep"][i]), _rounded(columns["r_sim"][i])
            checks.append(Check("fig4 low-SNR crossover r_sep >= r_sim at 0 dB", bool(s >= p),
                                f"r_sep {s:.6f}, r_sim {p:.6f}"))
    n, bad = _upper_bound_violations(columns, ref)
    if n:
        checks.append(Check(f"{name} r_sim <= upper_bound + 1e-3", bad == 0,
                            f"{bad} of {n} points above the bound"))
    return checks


def summarize(columns, ref: ReferenceDataset) -> dict[str, dict]:
    """Per curve: max absolute deviation and number of points below reference - 1e-3."""
    out = {}
    for r in deviation_table(columns, ref):
        s = out.setdefault(r["curve"], dict(points=0, max_abs_dev=0.0, below=0))
        s["points"] += 1
        s["max_abs_dev"] = max(s["max_abs_dev"], abs(r["deviation"]))
        s["below"] += r["computed"] < r["reference"] - BELOW_SLACK
    return out


def format_deviations(rows, cf_exponent=None) -> str:
    head = "curve,abscissa,reference,computed,deviation"
    if cf_exponent is not None:
        head = "cf_exponent," + head
    lines = [head]
    for r in rows:
        vals = [r["curve"]] + [_fmt(r[k]) for k in ("abscissa", "reference", "computed", "deviation")]
        if cf_exponent is not None:
            vals.insert(0, str(cf_exponent))
        lines.append(",".join(vals))
    return "\n".join(lines) + "\n"


def reference_blocks(ref: ReferenceDataset) -> str:
    """Reference curves as gnuplot index blocks, in :data:`CURVES` order."""
    parts = []
    for c in CURVES:
        if c not in ref.curves:
            continue
        xs, ys = ref.curves[c]
        body = "\n".join(f"{_fmt(x)},{_fmt(y)}" for x, y in zip(xs, ys))
        parts.append(f"# {c}\n{body}\n")
    return "\n\n".join(parts)


def gnuplot_script(name: str, data_files: dict[str, str], reference_file: str,
                   ref: ReferenceDataset) -> str:
    """Script overlaying computed curves (lines) on reference points.

    ``data_files`` maps a legend label to a computed CSV. The upper bound is
    drawn from the reference data only.
    """
    variable = FIGURES[name][0]
    xlabel = "h_3" if variable == "h3" else "SNR_2 (linear)"
    lines = [
        "set datafile separator ','",
        "set terminal pngcairo size 900,600",
        f"set output '{name}.png'",
        "set logscale x",
        f"set xlabel '{xlabel}'",
        "set ylabel 'symmetric rate (bit per channel use)'",
        "set key top left",
    ]
    plots = []
    # Columns of format_csv: abscissa, r_sim, r_sep, r_nocoop. Only r_sep
    # differs between the files, so the others come from the first one.
    for k, (label, path) in enumerate(data_files.items()):
        if k == 0:
            plots.append(f"'{path}' every ::1 using 1:2 with lines lw 2 title 'r_sim'")
            plots.append(f"'{path}' every ::1 using 1:4 with lines lw 2 title 'r_nocoop'")
        plots.append(f"'{path}' every ::1 using 1:3 with lines lw 2 title 'r_sep {label}'")
    for i, c in enumerate(c for c in CURVES if c in ref.curves):
        style = "with lines dt 2 lc rgb 'black'" if c == "upper_bound" else "with points pt 7 ps 0.6"
        plots.append(f"'{reference_file}' index {i} using 1:2 {style} title '{c} (reference)'")
    lines.append("plot " + ", \\\n     ".join(plots))
    return "\n".join(lines) + "\n"


def write_figure(name: str, outdir, cf_exponents=(2, 3), sim_tol=1e-3, sep_tol=5e-3):
    """Compute a figure, write CSVs, deviation tables and a plot script.

    Writes ``<name>_cf<e>.csv`` and ``<name>_cf<e>_deviations.csv`` per
    exponent, ``<name>_reference.csv`` and ``<name>.gp``. ``r_sim`` and
    ``r_nocoop`` do not depend on the exponent and are computed once.
    Returns ``(checks, summaries, paths)``; the ``r_sep`` check passes when
    any exponent passes.
    """
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    ref = load_reference(name)
    common = compute_figure(name, 2, ("sim", "baseline"), sim_tol, sep_tol, ref)
    summaries, checks, paths, files = {}, [], [], {}
    sep_checks = {}
    for e in cf_exponents:
        sep = compute_figure(name, e, ("sep",), sim_tol, sep_tol, ref)
        cols = dict(common, r_sep=sep["r_sep"])
        p = outdir / f"{name}_cf{e}.csv"
        write_csv(p, cols)
        d = outdir / f"{name}_cf{e}_deviations.csv"
        d.write_text(format_deviations(deviation_table(cols, ref), e), encoding="ascii")
        paths += [p, d]
        files[f"cf{e}"] = p.name
        summaries[e] = summarize(read_csv(p), ref)
        cs = figure_checks(name, read_csv(p), ref)
        sep_checks[e] = [c for c in cs if "r_sep" in c.label]
        if not checks:
            checks = [c for c in cs if "r_sep" not in c.label]
    for label in sorted({c.label for cs in sep_checks.values() for c in cs}):
        per = {e: next(c for c in sep_checks[e] if c.label == label) for e in cf_exponents}
        ok = [e for e in cf_exponents if per[e].passed]
        detail = "; ".join(f"cf{e}: {per[e].detail}" for e in cf_exponents)
        checks.append(Check(label + " (any cf_exponent)", bool(ok), detail))
    rp = outdir / f"{name}_reference.csv"
    rp.write_text(reference_blocks(ref), encoding="ascii")
    gp = outdir / f"{name}.gp"
    gp.write_text(gnuplot_script(name, files, rp.name, ref), encoding="ascii")
    paths += [rp, gp]
    return checks, summaries, paths


def best_exponent(summaries: dict) -> int:
    """Exponent whose ``r_sep`` curve has the smallest max deviation."""
    return min(summaries, key=lambda e: (summaries[e].get("r_sep", {}).get("max_abs_dev", np.inf), e))
