"""CSV / JSON report writers for experiment grids."""

from __future__ import annotations

import csv
import json
from pathlib import Path
from typing import Optional

from .dataset import LABELS
from .evaluation import AggregateReport, ConfusionMatrix, ExperimentResult

MODE_TITLES = {
    "none": "No preconditioning",
    "centre_mirror": "Centring and mirroring",
    "centre_mirror_normalize": "Centring, mirroring and normalizing",
}


def pct(value: Optional[float]) -> str:
    return "" if value is None else f"{100.0 * value:.2f}"


def _write_csv(path: Path, rows: list[list]):
    with path.open("w", newline="") as fh:
        csv.writer(fh, lineterminator="\n").writerows(rows)


def write_grid(path: Path, cells: dict[tuple[str, str], ExperimentResult], methods, modes):
    """Accuracy grid: one row per preconditioning mode, one column per method."""
    rows = [["preconditioning"] + [m.upper() for m in methods]]
    for mode in modes:
        row = [MODE_TITLES[mode]]
        for method in methods:
            res = cells.get((method, mode))
            row.append(pct(res.report.accuracy) if res else "")
        rows.append(row)
    _write_csv(path, rows)


def write_results(path: Path, cells: dict[tuple[str, str], ExperimentResult]):
    rows = [["method", "mode", "scene", "subject", "correct", "poses", "accuracy"]]
    for (method, mode), res in cells.items():
        for r in res.results:
            rows.append([method, mode, r.scene, r.subject, r.confusion.trace, r.confusion.total, f"{r.accuracy:.6f}"])
    rows.append([])
    rows.append(["method", "mode", "scene_policy", "scene", "scene_accuracy", "method_accuracy", "pooled_accuracy"])
    for (method, mode), res in cells.items():
        rep = res.report
        for scene, acc in rep.scene_accuracy.items():
            rows.append([method, mode, rep.scene_policy, scene, f"{acc:.6f}", f"{rep.accuracy:.6f}", f"{rep.pooled_accuracy:.6f}"])
    _write_csv(path, rows)


def scene_table_rows(report: AggregateReport) -> list[list]:
    """Per-scene precision/recall table, mean and sample std across subjects, in %."""
    rows = [["location", "activity", "precision", "precision_std", "recall", "recall_std"]]
    for scene, stats in report.class_stats.items():
        for s in stats:
            rows.append([scene, LABELS[s.label], pct(s.precision_mean), pct(s.precision_std), pct(s.recall_mean), pct(s.recall_std)])
        pm, ps, rm, rs = report.scene_average[scene]
        rows.append([scene, "average", pct(pm), pct(ps), pct(rm), pct(rs)])
    pm, ps, rm, rs = report.global_average
    rows.append(["", "global average", pct(pm), pct(ps), pct(rm), pct(rs)])
    return rows


def confusion_rows(cm: ConfusionMatrix) -> list[list]:
    names = [LABELS[c] for c in cm.classes]
    rows = [["true \\ predicted"] + names]
    for name, counts in zip(names, cm.counts.tolist()):
        rows.append([name] + counts)
    return rows


def report_json(report: AggregateReport, results) -> dict:
    return {
        "method": report.method,
        "mode": report.mode,
        "scene_policy": report.scene_policy,
        "accuracy": report.accuracy,
        "pooled_accuracy": report.pooled_accuracy,
        "scene_accuracy": report.scene_accuracy,
        "participants": report.n_participants,
        "scenes": report.n_scenes,
        "classes": {
            scene: [
                {
                    "label": LABELS[s.label],
                    "precision": s.precision_mean,
                    "precision_std": s.precision_std,
                    "recall": s.recall_mean,
                    "recall_std": s.recall_std,
                }
                for s in stats
            ]
            for scene, stats in report.class_stats.items()
        },
        "folds": [
            {"scene": r.scene, "subject": r.subject, "accuracy": r.accuracy, "confusion": r.confusion.counts.tolist(), "classes": list(r.confusion.classes)}
            for r in results
        ],
        "pooled": {scene: {"classes": list(m.classes), "counts": m.counts.tolist()} for scene, m in report.pooled.items()},
    }


def write_cell_reports(out: Path, method: str, mode: str, res: ExperimentResult, svg: bool = False) -> list[Path]:
    stem = f"{method}_{mode}"
    written = []
    path = out / f"scenes_{stem}.csv"
    _write_csv(path, scene_table_rows(res.report))
    written.append(path)
    for scene, cm in res.report.pooled.items():
        path = out / f"confusion_{stem}_{scene}.csv"
        _write_csv(path, confusion_rows(cm))
        written.append(path)
    path = out / f"report_{stem}.json"
    path.write_text(json.dumps(report_json(res.report, res.results), indent=1, sort_keys=True) + "\n")
    written.append(path)
    if svg:
        for scene, cm in res.report.pooled.items():
            path = out / f"confusion_{stem}_{scene}.svg"
            render_confusion_svg(cm, path)
            written.append(path)
    return written


def render_confusion_svg(cm: ConfusionMatrix, path: Path):
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    letters = [chr(ord("A") + i) for i in range(len(cm.classes))]
    fig, ax = plt.subplots(figsize=(6, 6))
    ax.imshow(cm.counts, cmap="Blues")
    ax.set_xticks(range(len(letters)), letters)
    ax.set_yticks(range(len(letters)), letters)
    ax.set_xlabel("predicted")
    ax.set_ylabel("true")
    for i in range(len(letters)):
        for j in range(len(letters)):
            if cm.counts[i, j]:
                ax.text(j, i, str(cm.counts[i, j]), ha="center", va="center", fontsize=6)
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)

