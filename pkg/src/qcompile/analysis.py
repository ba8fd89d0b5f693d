"""Batch compile-and-measure runs and the sequence-length scaling-law fit.

The scaling law L = a * log^c(1/eps) is fitted by ordinary least squares in
doubly-logged coordinates: log L = log a + c * log log(1/eps).  Callers
choose what plays the role of eps (1 - mean fidelity, or a distance metric);
the fit itself is agnostic.
"""

from __future__ import annotations

import csv
import math
import os
from dataclasses import dataclass

import numpy as np

from .gatesets import GateSet
from .linalg import spectral_dist
from .search import aq_star


@dataclass(frozen=True)
class EvalRow:
    eps: float
    n_targets: int
    n_success: int
    mean_length: float  # over successes
    mean_fnorm: float
    mean_fidelity: float
    mean_spectral: float

    @property
    def success_fraction(self) -> float:
        return self.n_success / self.n_targets


@dataclass(frozen=True)
class ScalingFit:
    a: float
    c: float
    r_squared: float
    points: tuple[tuple[float, float], ...]

    def __post_init__(self):
        if self.a <= 0:
            raise ValueError("prefactor a must be positive")


def batch_evaluate(
    value_source,
    gs: GateSet,
    targets,
    eps_list,
    node_budget: int = 100_000,
) -> list[EvalRow]:
    """Compile every target at every tolerance; metrics are averaged over successes."""
    targets = list(targets)
    eps_list = list(eps_list)
    if not targets or not eps_list:
        raise ValueError("need at least one target and one tolerance")
    rows = []
    for eps in eps_list:
        lengths, fnorms, fids, specs = [], [], [], []
        for t in targets:
            r = aq_star(t, gs, value_source, eps=eps, node_budget=node_budget)
            if not r.success:
                continue
            lengths.append(len(r))
            fnorms.append(r.distance)
            fids.append(r.fidelity)
            specs.append(spectral_dist(r.compiled, t))
        n_success = len(lengths)
        rows.append(
            EvalRow(
                eps=float(eps),
                n_targets=len(targets),
                n_success=n_success,
                mean_length=float(np.mean(lengths)) if n_success else float("nan"),
                mean_fnorm=float(np.mean(fnorms)) if n_success else float("nan"),
                mean_fidelity=float(np.mean(fids)) if n_success else float("nan"),
                mean_spectral=float(np.mean(specs)) if n_success else float("nan"),
            )
        )
    return rows


def fit_scaling(points) -> ScalingFit:
    """Least-squares fit of L = a * log^c(1/eps) from (eps, mean_length) points."""
    pts = tuple((float(e), float(l)) for e, l in points)
    if len(pts) < 3:
        raise ValueError(f"need at least 3 points, got {len(pts)}")
    for e, l in pts:
        if not 0.0 < e < 1.0:
            raise ValueError(f"epsilon {e} outside (0, 1)")
        if l <= 0.0:
            raise ValueError(f"mean length {l} must be positive")
    x = np.array([math.log(math.log(1.0 / e)) for e, _ in pts])
    y = np.array([math.log(l) for _, l in pts])
    slope, intercept = np.polyfit(x, y, 1)
    pred = slope * x + intercept
    ss_res = float(np.sum((y - pred) ** 2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 if ss_tot == 0.0 else 1.0 - ss_res / ss_tot
    return ScalingFit(a=float(np.exp(intercept)), c=float(slope), r_squared=r2, points=pts)


def scaling_curve(fit: ScalingFit, eps: float) -> float:
    return fit.a * math.log(1.0 / eps) ** fit.c


# -- report files ------------------------------------------------------------------
#
# runs.csv   : eps,n_targets,n_success,success_fraction,mean_length,mean_fnorm,
#              mean_fidelity,mean_spectral
# fits.csv   : label,a,c,r_squared,n_points
# points.csv : label,epsilon,mean_length            (refit input, round-trips)
# plot.dat   : gnuplot-style blocks, "# series: <label>" then x y lines

RUNS_COLUMNS = (
    "eps",
    "n_targets",
    "n_success",
    "success_fraction",
    "mean_length",
    "mean_fnorm",
    "mean_fidelity",
    "mean_spectral",
)


def emit_report(runs: list[EvalRow], fits: dict[str, ScalingFit], out_dir) -> dict[str, str]:
    """Write the CSV tables and plot-data file; returns the paths written."""
    os.makedirs(out_dir, exist_ok=True)
    paths = {
        "runs": os.path.join(out_dir, "runs.csv"),
        "fits": os.path.join(out_dir, "fits.csv"),
        "points": os.path.join(out_dir, "points.csv"),
        "plot": os.path.join(out_dir, "plot.dat"),
    }
    with open(paths["runs"], "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(RUNS_COLUMNS)
        for r in runs:
            w.writerow(
                [
                    repr(r.eps),
                    r.n_targets,
                    r.n_success,
                    repr(r.success_fraction),
                    repr(r.mean_length),
                    repr(r.mean_fnorm),
                    repr(r.mean_fidelity),
                    repr(r.mean_spectral),
                ]
            )
    with open(paths["fits"], "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["label", "a", "c", "r_squared", "n_points"])
        for label, fit in fits.items():
            w.writerow([label, repr(fit.a), repr(fit.c), repr(fit.r_squared), len(fit.points)])
    with open(paths["points"], "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["label", "epsilon", "mean_length"])
        for label, fit in fits.items():
            for e, l in fit.points:
                w.writerow([label, repr(e), repr(l)])
    with open(paths["plot"], "w") as fh:
        if runs:
            fh.write("# series: mean_length_vs_eps\n")
            for r in runs:
                if not math.isnan(r.mean_length):
                    fh.write(f"{r.eps!r} {r.mean_length!r}\n")
            fh.write("\n")
        for label, fit in fits.items():
            fh.write(f"# series: fit_{label}\n")
            for e, _ in sorted(fit.points):
                fh.write(f"{e!r} {scaling_curve(fit, e)!r}\n")
            fh.write("\n")
    return paths


def read_points_csv(path) -> dict[str, list[tuple[float, float]]]:
    """Parse a points.csv back into per-label (epsilon, mean_length) lists."""
    out: dict[str, list[tuple[float, float]]] = {}
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != ["label", "epsilon", "mean_length"]:
            raise ValueError(f"unexpected points.csv columns: {reader.fieldnames}")
        for row in reader:
            out.setdefault(row["label"], []).append((float(row["epsilon"]), float(row["mean_length"])))
    return out
