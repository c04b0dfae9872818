"""CSV and text exports: per-condition records, the benchmark table,
boxplot statistics, and plot data. Float formatting goes through repr so
identical inputs produce identical bytes."""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from .evaluation import BenchmarkReport, EvalRecord
from .models.registry import MODEL_TRAITS


def _f(v) -> str:
    return repr(float(v))


def _open_writer(path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    return open(path, "w", newline="")


def write_records_csv(path, records: list, y_dim: int) -> None:
    with _open_writer(path) as fh:
        w = csv.writer(fh)
        y_cols = [f"ystar_{i + 1}" for i in range(y_dim)]
        w.writerow(["model", "condition", *y_cols, "err_post", "err_resim",
                    "inference_ms", "n_samples", "oracle_eps", "invalid_fraction"])
        by_model = {}
        for r in records:
            by_model.setdefault(r.model, []).append(r)
        for model in sorted(by_model):
            for i, r in enumerate(by_model[model]):
                w.writerow([model, i, *[_f(v) for v in np.atleast_1d(r.y_star)],
                            _f(r.err_post), _f(r.err_resim), _f(r.inference_ms),
                            r.n_samples, _f(r.oracle_eps), _f(r.invalid_fraction)])


def read_records_csv(path) -> list:
    records = []
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    for row in rows:
        y = [float(v) for k, v in row.items() if k.startswith("ystar_")]
        records.append(EvalRecord(
            model=row["model"], y_star=np.array(y),
            err_post=float(row["err_post"]), err_resim=float(row["err_resim"]),
            inference_ms=float(row["inference_ms"]), n_samples=int(row["n_samples"]),
            oracle_eps=float(row["oracle_eps"]),
            invalid_fraction=float(row["invalid_fraction"])))
    return records


def write_report_csv(path, report: BenchmarkReport, timing_ms: dict | None = None,
                     dim_z: dict | None = None) -> None:
    """Benchmark-table layout: one row per model, published column order."""
    timing_ms = timing_ms or {}
    dim_z = dim_z or {}
    with _open_writer(path) as fh:
        w = csv.writer(fh)
        w.writerow(["method", "err_post", "err_resim", "inference_ms",
                    "dim_z", "ml_loss", "y_supervision", "n_conditions",
                    "invalid_fraction"])
        for s in report.summaries:
            ml, ysup = MODEL_TRAITS.get(s.model, (False, False))
            w.writerow([
                s.model, _f(s.err_post_mean), _f(s.err_resim_mean),
                _f(timing_ms.get(s.model, s.inference_ms)),
                dim_z.get(s.model, ""), int(ml), int(ysup),
                s.n_conditions, _f(s.invalid_fraction),
            ])


def write_boxplot_csv(path, report: BenchmarkReport) -> None:
    with _open_writer(path) as fh:
        w = csv.writer(fh)
        w.writerow(["model", "metric", "q1", "median", "q3", "lo_whisker", "hi_whisker"])
        for s in report.summaries:
            for metric, stats in (("err_post", s.post_stats), ("err_resim", s.resim_stats)):
                w.writerow([s.model, metric, _f(stats["q1"]), _f(stats["median"]),
                            _f(stats["q3"]), _f(stats["lo"]), _f(stats["hi"])])


def write_summary_txt(path, report: BenchmarkReport, config_text: str,
                      timing_ms: dict | None = None) -> None:
    timing_ms = timing_ms or {}
    lines = [
        f"benchmark: {report.problem}",
        f"conditions: {report.summaries[0].n_conditions if report.summaries else 0}"
        f" x {report.n_samples} samples",
        f"oracle eps: {report.oracle_eps!r}",
        f"clamp caps: err_post <= {report.clamp_post!r}, err_resim <= {report.clamp_resim!r}",
        "",
        f"{'model':<14}{'err_post':>12}{'err_resim':>12}{'ms/batch':>12}{'invalid%':>10}",
    ]
    for s in report.summaries:
        ms = timing_ms.get(s.model, s.inference_ms)
        lines.append(f"{s.model:<14}{s.err_post_mean:>12.4f}{s.err_resim_mean:>12.4f}"
                     f"{ms:>12.2f}{100 * s.invalid_fraction:>10.2f}")
    lines += ["", "resolved config:", config_text.rstrip(), ""]
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("\n".join(lines))


def write_loss_curve_csv(path, curve: list) -> None:
    if not curve:
        return
    keys = list(curve[0].keys())
    with _open_writer(path) as fh:
        w = csv.writer(fh)
        w.writerow(keys)
        for row in curve:
            w.writerow([row["epoch"] if k == "epoch" else _f(row[k]) for k in keys])


def append_loss_curve_csv(path, curve: list) -> None:
    path = Path(path)
    if not path.exists():
        write_loss_curve_csv(path, curve)
        return
    with open(path, "a", newline="") as fh:
        w = csv.writer(fh)
        keys = list(curve[0].keys()) if curve else []
        for row in curve:
            w.writerow([row["epoch"] if k == "epoch" else _f(row[k]) for k in keys])


def write_conditions_csv(path, grid) -> None:
    with _open_writer(path) as fh:
        w = csv.writer(fh)
        y_dim = grid.y_stars.shape[1]
        w.writerow([f"ystar_{i + 1}" for i in range(y_dim)]
                   + ["acceptance_rate", "eps", "n_samples"])
        for y, rate, ss in zip(grid.y_stars, grid.acceptance_rates, grid.oracle_sets):
            w.writerow([*[_f(v) for v in y], _f(rate), _f(grid.eps), ss.n])


def write_polylines_csv(path, polylines: list) -> None:
    with _open_writer(path) as fh:
        w = csv.writer(fh)
        w.writerow(["polyline", "x", "y"])
        for pid, line in enumerate(polylines):
            for x, y in line:
                w.writerow([pid, _f(x), _f(y)])


def write_matrix_csv(path, header: list, mat: np.ndarray,
                     index: list | None = None, index_name: str = "i") -> None:
    with _open_writer(path) as fh:
        w = csv.writer(fh)
        if index is None:
            w.writerow(header)
            for row in np.atleast_2d(mat):
                w.writerow([_f(v) for v in row])
        else:
            w.writerow([index_name, *header])
            for i, row in zip(index, np.atleast_2d(mat)):
                w.writerow([i, *[_f(v) for v in row]])
