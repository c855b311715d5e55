"""The three figure kinds and their data-extraction helpers.

Each helper returns the exact arrays the figure draws, so tests can
assert on the numbers without decoding an image. Rendering is
deterministic: fixed style, fixed dpi, no timestamps.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

import matplotlib
import numpy as np

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

from .schema import SchemaError, load_table  # noqa: E402

KINDS = ("qq", "paths", "mda-curve")

_ZETA_NAME = re.compile(r"^zeta-(\d+)-vs-limit$")

# fixed style so identical inputs give identical bytes
_STYLE = {
    "figure.figsize": (7.0, 5.0),
    "font.size": 10.0,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "svg.hashsalt": "maxidplots",
}


@dataclass(frozen=True)
class FigureSpec:
    """What to draw: artifact directory in, image file out."""

    kind: str
    in_dir: str
    out_path: str
    dpi: int = 150
    title: str | None = None
    options: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown figure kind {self.kind!r}; "
                             f"choose from {list(KINDS)}")


def qq_points(in_dir: str):
    """Analytic vs empirical quantiles of Z, one pair of arrays per time.

    The analytic quantile function is the interpolated inverse of the
    margins.csv cdf grid, evaluated at plotting positions (i - 1/2)/n.
    """
    samples = load_table(in_dir, "samples.csv")
    margins = load_table(in_dir, "margins.csv")
    z_grid = margins["z"].to_numpy(float)
    cdf = margins["cdf"].to_numpy(float)
    if np.any(np.diff(z_grid) <= 0):
        raise SchemaError("margins.csv: z column must be strictly increasing")
    out = {}
    for t in sorted(samples["t"].unique()):
        vals = np.sort(samples.loc[samples["t"] == t, "Z"].to_numpy(float))
        p = (np.arange(len(vals)) + 0.5) / len(vals)
        analytic = np.interp(p, cdf, z_grid)
        out[float(t)] = (analytic, vals)
    return out


def path_bundles(in_dir: str):
    """Per-particle trajectories plus the running envelope."""
    frame = load_table(in_dir, "paths.csv")
    kinds = set(frame["kind"].unique())
    if not kinds <= {"particle", "envelope"}:
        raise SchemaError(f"paths.csv: unknown kind values "
                          f"{sorted(kinds - {'particle', 'envelope'})}")
    env = frame[frame["kind"] == "envelope"].sort_values("t")
    if len(env) == 0:
        raise SchemaError("paths.csv: no envelope rows")
    particles = {}
    for pid, group in frame[frame["kind"] == "particle"].groupby("particle"):
        g = group.sort_values("t")
        particles[int(pid)] = (g["t"].to_numpy(float),
                               g["value"].to_numpy(float))
    return particles, (env["t"].to_numpy(float), env["value"].to_numpy(float))


def mda_rows(in_dir: str):
    """(n, statistic, p_value) triples of the convergence ladder, by n."""
    frame = load_table(in_dir, "reports.csv")
    rows = []
    for _, row in frame[frame["suite"] == "mda"].iterrows():
        m = _ZETA_NAME.match(str(row["name"]))
        if m:
            rows.append((int(m.group(1)), float(row["statistic"]),
                         float(row["p_value"])))
    if not rows:
        raise SchemaError("reports.csv: no rows with suite='mda' and "
                          "name 'zeta-<n>-vs-limit'")
    return sorted(rows)


def _draw_qq(ax, in_dir):
    pairs = qq_points(in_dir)
    lo = min(a.min() for a, _ in pairs.values())
    hi = max(a.max() for a, _ in pairs.values())
    ax.plot([lo, hi], [lo, hi], color="black", lw=1.0, label="diagonal")
    for t, (analytic, empirical) in pairs.items():
        ax.plot(analytic, empirical, ".", ms=3.0, label=f"t={t:g}")
    ax.set_xlabel("analytic quantile")
    ax.set_ylabel("empirical quantile")
    ax.legend(loc="upper left")
    return "marginal QQ against exp(-tail_integral)"


def _draw_paths(ax, in_dir):
    particles, (et, ev) = path_bundles(in_dir)
    for t, v in particles.values():
        ax.plot(t, v, color="steelblue", lw=0.6, alpha=0.5)
    ax.plot(et, ev, color="crimson", lw=1.8, label="envelope Z")
    ax.set_xlabel("t")
    ax.set_ylabel("value")
    ax.legend(loc="lower right")
    return f"top {len(particles)} particles and their envelope"


def _draw_mda(ax, in_dir):
    rows = mda_rows(in_dir)
    ns = [r[0] for r in rows]
    stats = [r[1] for r in rows]
    pvals = [r[2] for r in rows]
    ax.plot(ns, stats, "o-", color="steelblue", label="energy statistic")
    ax.set_xscale("log")
    ax.set_xlabel("n")
    ax.set_ylabel("energy statistic")
    twin = ax.twinx()
    twin.plot(ns, pvals, "s--", color="gray", label="p-value")
    twin.set_ylabel("p-value")
    twin.set_ylim(-0.05, 1.05)
    handles, labels = ax.get_legend_handles_labels()
    h2, l2 = twin.get_legend_handles_labels()
    ax.legend(handles + h2, labels + l2, loc="center right")
    return "rescaled maxima vs limit along the n-ladder"


_DRAWERS = {"qq": _draw_qq, "paths": _draw_paths, "mda-curve": _draw_mda}


def render(spec: FigureSpec) -> str:
    """Draw one figure from artifact CSVs; returns the output path."""
    with plt.rc_context(_STYLE):
        fig, ax = plt.subplots()
        try:
            default_title = _DRAWERS[spec.kind](ax, spec.in_dir)
            ax.set_title(spec.title or default_title)
            fig.savefig(spec.out_path, dpi=spec.dpi,
                        metadata=_stable_metadata(spec.out_path))
        finally:
            plt.close(fig)
    return spec.out_path


def _stable_metadata(out_path: str):
    # SVG output embeds a creation date unless overridden; PNG does not
    if out_path.lower().endswith(".svg"):
        return {"Date": None}
    return None
