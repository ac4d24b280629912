"""Figure rendering for experiment reports.

Each report gets a summary panel of its statistic rows, plus one
experiment-specific curve when the report extras carry one. Files land
next to the report (same stem, .png), so a report directory is
self-describing.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .experiments import ExperimentReport


def _rows_figure(report: ExperimentReport, path: Path) -> None:
    rows = report.statistics
    fig, ax = plt.subplots(figsize=(8.0, 1.2 + 0.55 * len(rows)))
    ys = np.arange(len(rows))[::-1]
    for y, r in zip(ys, rows):
        color = "tab:gray" if r.informational else ("tab:green" if r.passed else "tab:red")
        if r.target is not None and r.tolerance is not None:
            ax.plot(
                [r.target - r.tolerance, r.target + r.tolerance],
                [y, y],
                color="0.8",
                lw=6,
                solid_capstyle="butt",
                zorder=1,
            )
            ax.plot([r.target], [y], marker="|", ms=14, color="0.3", zorder=2)
        if r.std_error:
            ax.errorbar([r.estimate], [y], xerr=[2 * r.std_error], fmt="none", ecolor=color, zorder=2)
        ax.plot([r.estimate], [y], "o", color=color, zorder=3)
    ax.set_yticks(ys)
    ax.set_yticklabels([r.label for r in rows], fontsize=8)
    ax.set_xlabel("estimate (band = target ± tolerance)")
    ax.set_title(report.name)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def _curve_figure(report: ExperimentReport, path: Path) -> bool:
    ex = report.extras
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    drew = False
    if report.name == "types_convergence" and ex.get("sup_deviations"):
        xs = np.sort(np.asarray(ex["sup_deviations"]))
        ax.step(xs, np.arange(1, len(xs) + 1) / len(xs), where="post")
        ax.set_xlabel("sup deviation")
        ax.set_ylabel("empirical cdf")
        drew = True
    elif report.name == "height_coupling" and ex.get("n_values"):
        ax.loglog(ex["n_values"], ex["median_by_n"], "o-")
        ax.set_xlabel("n")
        ax.set_ylabel("median normalized coupling gap")
        drew = True
    elif report.name == "max_height_tail" and ex.get("curve"):
        curve = np.asarray(ex["curve"], dtype=float)
        ax.errorbar(curve[:, 0], curve[:, 1], yerr=2 * curve[:, 2], fmt="o")
        ax.axhline(ex["tail_constant"], color="0.4", ls="--")
        ax.set_xscale("log", base=2)
        ax.set_xlabel("n")
        ax.set_ylabel("n * P(ht >= n)")
        drew = True
    elif report.name == "upsilon_scaling" and ex.get("quantiles_multitype"):
        qa = np.asarray(ex["quantiles_multitype"])
        qb = np.asarray(ex["quantiles_reduced"])
        lim = max(qa.max(), qb.max())
        ax.plot([0, lim], [0, lim], color="0.7", lw=1)
        ax.plot(qb, qa, ".")
        ax.set_xlabel("reduced pipeline quantiles")
        ax.set_ylabel("multitype pipeline quantiles")
        drew = True
    elif report.name == "size_tail_exponent" and ex.get("ccdf"):
        ax.loglog(ex["grid"], ex["ccdf"], "o")
        ax.set_xlabel("n")
        ax.set_ylabel("P(#T^(j) >= n)")
        drew = True
    elif report.name == "conditioned_profile" and ex.get("n_values"):
        ax.semilogx(ex["n_values"], ex["lambda_median_by_n"], "o-")
        ax.set_xlabel("n")
        ax.set_ylabel("median profile deviation")
        drew = True
    if drew:
        ax.set_title(report.name)
        fig.tight_layout()
        fig.savefig(path, dpi=120)
    plt.close(fig)
    return drew


def render_report_figures(report: ExperimentReport, out_stem: str | Path) -> list[Path]:
    """Write the summary panel and any curve figure; returns written paths."""
    stem = Path(out_stem)
    stem.parent.mkdir(parents=True, exist_ok=True)
    written = []
    rows_path = stem.with_name(stem.name + "_rows.png")
    _rows_figure(report, rows_path)
    written.append(rows_path)
    curve_path = stem.with_name(stem.name + "_curve.png")
    if _curve_figure(report, curve_path):
        written.append(curve_path)
    return written
