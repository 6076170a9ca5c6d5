"""Matplotlib renderings saved next to the delimited reports.

Every report-producing command writes a figure beside its CSV or JSONL
output: training emits a loss curve, evaluation an accuracy-versus-beam
chart, estimation a per-enterprise error chart, and the theorem check an
entropy-gap and cost panel. All rendering uses the Agg backend and writes
PNG files atomically.
"""

from __future__ import annotations

import os
import tempfile
from typing import Mapping, Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .emission import CaseAudit, EmissionReport
from .evaluation import SweepRow
from .theory import EntropyCell

_STYLE = {
    "figure.dpi": 120,
    "savefig.dpi": 120,
    "font.size": 9,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "axes.spines.top": False,
    "axes.spines.right": False,
}


def _save(fig, path: str | os.PathLike) -> str:
    final = os.fspath(path)
    directory = os.path.dirname(final) or "."
    os.makedirs(directory, exist_ok=True)
    fd, tmp_path = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=".png")
    os.close(fd)
    try:
        # An empty Software entry keeps the PNG free of version strings so
        # reruns stay byte-identical.
        fig.savefig(tmp_path, format="png", metadata={"Software": None})
        os.replace(tmp_path, final)
    except BaseException:
        if os.path.exists(tmp_path):
            os.unlink(tmp_path)
        raise
    finally:
        plt.close(fig)
    return final


def save_loss_curves(history_by_namespace: Mapping[str, Sequence[float]], path) -> str:
    """Per-epoch training loss, one line per namespace."""
    if not history_by_namespace:
        raise ValueError("loss curves need at least one namespace history")
    with plt.rc_context(_STYLE):
        fig, ax = plt.subplots(figsize=(6, 3.5), layout="constrained")
        for namespace in sorted(history_by_namespace):
            history = history_by_namespace[namespace]
            ax.plot(range(1, len(history) + 1), history, label=namespace, linewidth=1.5)
        ax.set_xlabel("epoch")
        ax.set_ylabel("mean batch loss")
        ax.set_title("adapter training loss")
        ax.legend(frameon=False)
        return _save(fig, path)


def save_accuracy_sweep(rows: Sequence[SweepRow], path) -> str:
    """Accuracy against beam width, with flat rows as horizontal baselines."""
    group_rows = [row for row in rows if row.k is not None]
    flat_rows = [row for row in rows if row.k is None]
    with plt.rc_context(_STYLE):
        fig, ax = plt.subplots(figsize=(6, 3.5), layout="constrained")
        if group_rows:
            ks = [row.k for row in group_rows]
            for cutoff in sorted(group_rows[0].outcome.acc_at):
                ax.plot(
                    ks,
                    [row.outcome.acc_at[cutoff] for row in group_rows],
                    marker="o",
                    markersize=3,
                    linewidth=1.5,
                    label=f"acc@{cutoff}",
                )
        for row in flat_rows:
            first_cutoff = min(row.outcome.acc_at)
            ax.axhline(
                row.outcome.acc_at[first_cutoff],
                linestyle="--",
                linewidth=1.0,
                color="gray",
                label=f"{row.label} acc@{first_cutoff}",
            )
        ax.set_xlabel("beam width k")
        ax.set_ylabel("accuracy (%)")
        ax.set_title("retrieval accuracy by beam width")
        ax.legend(frameon=False, fontsize=8)
        return _save(fig, path)


def save_ape_bars(report: EmissionReport, path) -> str:
    """Per-enterprise absolute percentage error, largest first."""
    rows = sorted(
        (row for row in report.rows if row.ape is not None),
        key=lambda row: -row.ape,
    )
    with plt.rc_context(_STYLE):
        height = max(2.5, 0.3 * len(rows) + 1.2)
        fig, ax = plt.subplots(figsize=(6, height), layout="constrained")
        ax.barh(
            [row.id for row in rows][::-1],
            [row.ape for row in rows][::-1],
            color="#3b7a57",
        )
        ax.set_xlabel("absolute percentage error (%)")
        title = "emission estimate error"
        aggregate = report.aggregate_mape
        if aggregate is not None:
            title += f" (mean {aggregate:.2f}%)"
        ax.set_title(title)
        return _save(fig, path)


def save_case_audit(audit: CaseAudit, path) -> str:
    """Printed against recomputed row errors for a published case table."""
    companies = [row.case.company for row in audit.rows]
    printed = [row.case.ape_pct for row in audit.rows]
    recomputed = [row.recomputed_ape_pct for row in audit.rows]
    with plt.rc_context(_STYLE):
        height = max(3.0, 0.32 * len(companies) + 1.2)
        fig, ax = plt.subplots(figsize=(6.5, height), layout="constrained")
        positions = range(len(companies))
        ax.barh([p + 0.2 for p in positions], printed, height=0.4, label="printed")
        ax.barh([p - 0.2 for p in positions], recomputed, height=0.4, label="recomputed")
        ax.set_yticks(list(positions), companies)
        ax.invert_yaxis()
        ax.set_xlabel("absolute percentage error (%)")
        title = f"case table audit: column mean {audit.column_mean_ape:.2f}%"
        if audit.claimed_mean_ape is not None:
            title += f", claimed {audit.claimed_mean_ape:.2f}%"
        ax.set_title(title)
        ax.legend(frameon=False)
        return _save(fig, path)


def save_entropy_report(cells: Sequence[EntropyCell], path) -> str:
    """Entropy gap by accuracy (one line per branching) and the cost ratio."""
    with plt.rc_context(_STYLE):
        fig, (left, right) = plt.subplots(1, 2, figsize=(8, 3.5), layout="constrained")
        depths = sorted({cell.model.d for cell in cells})
        d_shown = depths[-1] if depths else 1
        by_b: dict[int, list[EntropyCell]] = {}
        for cell in cells:
            if cell.model.d == d_shown and len(set(cell.model.p)) == 1:
                by_b.setdefault(cell.model.b, []).append(cell)
        for b in sorted(by_b):
            chosen = sorted(by_b[b], key=lambda cell: cell.model.p[0])
            left.plot(
                [cell.model.p[0] for cell in chosen],
                [cell.gap for cell in chosen],
                marker="o",
                markersize=2.5,
                linewidth=1.2,
                label=f"b={b}",
            )
        left.set_xlabel("per-level accuracy p")
        left.set_ylabel("flat minus hierarchical entropy (bits)")
        left.set_title(f"residual entropy gap at depth {d_shown}")
        left.legend(frameon=False, fontsize=7, ncols=2)

        bs = sorted({cell.model.b for cell in cells})
        for b in bs:
            cost_flat = [b**d for d in depths]
            cost_hier = [b * d for d in depths]
            right.plot(
                depths,
                [flat / hier for flat, hier in zip(cost_flat, cost_hier)],
                marker="s",
                markersize=2.5,
                linewidth=1.2,
                label=f"b={b}",
            )
        right.set_yscale("log")
        right.set_xlabel("depth d")
        right.set_ylabel("flat cost / beam cost (k=1)")
        right.set_title("similarity cost ratio")
        right.set_xticks(depths)
        right.legend(frameon=False, fontsize=7, ncols=2)
        return _save(fig, path)
