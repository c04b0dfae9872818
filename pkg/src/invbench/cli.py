"""Command-line pipeline: generate -> train -> eval -> report / plotdata.

Exit codes: 0 success, 2 config error, 3 training divergence, 4 oracle
budget exhaustion.
"""

from __future__ import annotations

import argparse
import csv
import sys
from pathlib import Path

import numpy as np

from . import storage
from .config import ConfigError, RunConfig, load_config, serialize_config
from .density import GridSpec, contour_hdr
from .evaluation import (
    ConditionGrid,
    aggregate,
    build_conditions,
    evaluate_model,
    mean_shift_mode,
    time_inference,
)
from .figures import render_arms, render_boxplots, render_trajectories
from .models import (
    build_model,
    load_checkpoint,
    loss_spec_for,
    make_optimizer,
    save_checkpoint,
    train,
)
from .models.training import TrainingDivergedError
from .problems import (
    BudgetExceededError,
    SampleSet,
    export_dataset_csv,
    generate_dataset,
    impact_times,
    joint_positions,
    load_dataset,
    save_dataset,
    trajectory,
)
from .reporting import (
    append_loss_curve_csv,
    read_records_csv,
    write_boxplot_csv,
    write_conditions_csv,
    write_loss_curve_csv,
    write_matrix_csv,
    write_polylines_csv,
    write_records_csv,
    write_report_csv,
    write_summary_txt,
)
from .seeding import stream

EXIT_CONFIG = 2
EXIT_DIVERGED = 3
EXIT_BUDGET = 4


def log(msg: str) -> None:
    print(msg, file=sys.stderr)


# ---------------------------------------------------------------------------
# artifact paths and shared loaders


def _paths(cfg: RunConfig) -> dict:
    return {
        "config": cfg.out_path("resolved_config.ini"),
        "dataset": cfg.out_path("data", "train.ds"),
        "dataset_csv": cfg.out_path("data", "train.csv"),
        "conditions": cfg.out_path("data", "conditions.csv"),
        "oracle": cfg.out_path("data", "oracle.orc"),
        "records": cfg.out_path("eval", "records.csv"),
        "model_info": cfg.out_path("eval", "model_info.csv"),
        "report": cfg.out_path("report", "report.csv"),
        "boxstats": cfg.out_path("report", "boxplot_stats.csv"),
        "summary": cfg.out_path("report", "summary.txt"),
        "boxplot_png": cfg.out_path("report", "boxplot.png"),
    }


def _write_resolved_config(cfg: RunConfig) -> None:
    path = _paths(cfg)["config"]
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(serialize_config(cfg))


def _ensure_dataset(cfg: RunConfig):
    path = _paths(cfg)["dataset"]
    if not path.exists():
        log(f"dataset missing, generating {path}")
        _generate_dataset(cfg)
    return load_dataset(path)


def _generate_dataset(cfg: RunConfig):
    problem = cfg.get_problem()
    rng = stream(cfg.seed, "data", cfg.problem)
    ds = generate_dataset(problem, cfg.n_train, rng, seed=cfg.seed)
    paths = _paths(cfg)
    save_dataset(paths["dataset"], ds)
    export_dataset_csv(paths["dataset_csv"], ds)
    if ds.redraw_rate:
        log(f"generate: redraw rate {ds.redraw_rate:.3%} (no-impact rows)")
    return ds


def _save_oracle(path, grid: ConditionGrid, cfg: RunConfig) -> None:
    manifest = {
        "problem": cfg.problem,
        "eps": grid.eps,
        "seed": cfg.seed,
        "n_conditions": int(grid.y_stars.shape[0]),
        "n_samples": int(grid.oracle_sets[0].n),
        "n_skipped": grid.n_skipped,
    }
    blobs = {"y_stars": grid.y_stars, "acceptance_rates": grid.acceptance_rates}
    for i, ss in enumerate(grid.oracle_sets):
        blobs[f"cond{i:04d}"] = ss.samples
    storage.write_blocks(path, "oracle", manifest, blobs)


def _load_oracle(path) -> ConditionGrid:
    manifest, blobs = storage.read_blocks(path, expect_kind="oracle")
    y_stars = blobs["y_stars"]
    eps = manifest["eps"]
    sets = [
        SampleSet(y_stars[i], blobs[f"cond{i:04d}"], "oracle", eps=eps,
                  acceptance_rate=float(blobs["acceptance_rates"][i]))
        for i in range(y_stars.shape[0])
    ]
    return ConditionGrid(y_stars, sets, eps, blobs["acceptance_rates"],
                         manifest.get("n_skipped", 0))


def _model_list(cfg: RunConfig, arg: str | None):
    if not arg:
        return list(cfg.models)
    wanted = [m.strip() for m in arg.split(",") if m.strip()]
    unknown = [m for m in wanted if m not in cfg.models]
    if unknown:
        raise ConfigError(f"models {unknown} not in configured list {cfg.models}")
    return wanted


# ---------------------------------------------------------------------------
# subcommands


def cmd_generate(cfg: RunConfig) -> int:
    _write_resolved_config(cfg)
    _generate_dataset(cfg)
    problem = cfg.get_problem()
    log(f"building oracle grid: {cfg.eval.n_conditions} conditions "
        f"x {cfg.eval.n_samples} samples, eps={cfg.resolved_eps()}")
    grid = build_conditions(problem, cfg.eval.n_conditions, cfg.eval.n_samples,
                            cfg.resolved_eps(), cfg.seed,
                            max_draws=cfg.eval.oracle_max_draws)
    paths = _paths(cfg)
    _save_oracle(paths["oracle"], grid, cfg)
    write_conditions_csv(paths["conditions"], grid)
    if grid.n_skipped:
        log(f"generate: {grid.n_skipped} condition candidates exceeded the oracle budget")
    log(f"generate: wrote {paths['dataset']} and {paths['oracle']}")
    return 0


def cmd_train(cfg: RunConfig, models_arg: str | None, resume: bool) -> int:
    _write_resolved_config(cfg)
    ds = _ensure_dataset(cfg)
    for kind in _model_list(cfg, models_arg):
        ckpt = cfg.out_path("models", f"{kind}.ckpt")
        curve_csv = cfg.out_path("curves", f"{kind}_loss.csv")
        start_epoch = 0
        optimizer = None
        if resume and ckpt.exists():
            model, manifest, adam_blobs = load_checkpoint(ckpt)
            start_epoch = model.epochs_done
            if start_epoch >= cfg.train.epochs:
                log(f"train[{kind}]: already at {start_epoch} epochs, skipping")
                continue
            optimizer = make_optimizer(model, cfg.train)
            if adam_blobs:
                optimizer.load_state_arrays(adam_blobs)
            log(f"train[{kind}]: resuming at epoch {start_epoch}")
        else:
            model = build_model(kind, cfg.problem, cfg.seed, budget=cfg.budget)
        spec = loss_spec_for(kind, alpha=cfg.losses.alpha, beta=cfg.losses.beta,
                             sigma=cfg.losses.sigma, cvae_alpha=cfg.losses.cvae_alpha,
                             kernel=cfg.losses.kernel_spec())
        if optimizer is None:
            optimizer = make_optimizer(model, cfg.train)
        log(f"train[{kind}]: {model.parameter_count()} parameters "
            f"(budget {cfg.budget}), {cfg.train.epochs} epochs")
        result = train(model, ds, spec, cfg.train, cfg.seed,
                       optimizer=optimizer, start_epoch=start_epoch)
        save_checkpoint(ckpt, model, optimizer=optimizer)
        if start_epoch == 0:
            write_loss_curve_csv(curve_csv, result.curve)
        else:
            append_loss_curve_csv(curve_csv, result.curve)
        log(f"train[{kind}]: final loss {result.curve[-1]['loss']:.4f} -> {ckpt}")
    return 0


def cmd_eval(cfg: RunConfig, models_arg: str | None) -> int:
    paths = _paths(cfg)
    if not paths["oracle"].exists():
        log("oracle grid missing, running generate first")
        cmd_generate(cfg)
    problem = cfg.get_problem()
    grid = _load_oracle(paths["oracle"])
    kernel = cfg.losses.kernel_spec()
    records = []
    info_rows = []
    for kind in _model_list(cfg, models_arg):
        ckpt = cfg.out_path("models", f"{kind}.ckpt")
        if not ckpt.exists():
            raise ConfigError(f"no checkpoint for {kind!r}; run train first")
        model, manifest, _ = load_checkpoint(ckpt)
        log(f"eval[{kind}]: {grid.y_stars.shape[0]} conditions")
        records.extend(evaluate_model(model, grid, problem, kernel, cfg.seed))
        ms = time_inference(model, grid.y_stars[0], cfg.eval.n_samples,
                            repeats=cfg.eval.timing_repeats, rng_seed=cfg.seed)
        info_rows.append({
            "model": kind, "dim_z": model.z_dim,
            "param_count": manifest["parameter_count"],
            "timing_ms_batch": ms,
            "timing_ms_per_sample": ms / cfg.eval.n_samples,
        })
    write_records_csv(paths["records"], records, problem.y_dim)
    with open(paths["model_info"], "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=list(info_rows[0].keys()))
        w.writeheader()
        for row in info_rows:
            w.writerow(row)
    log(f"eval: wrote {paths['records']}")
    return 0


def cmd_report(cfg: RunConfig) -> int:
    paths = _paths(cfg)
    if not paths["records"].exists():
        raise ConfigError("no eval records; run eval first")
    records = read_records_csv(paths["records"])
    report = aggregate(records, cfg.eval.clamp_post, cfg.eval.clamp_resim,
                       problem=cfg.problem, n_samples=cfg.eval.n_samples,
                       oracle_eps=cfg.resolved_eps())
    timing, dim_z = {}, {}
    if paths["model_info"].exists():
        with open(paths["model_info"], newline="") as fh:
            for row in csv.DictReader(fh):
                timing[row["model"]] = float(row["timing_ms_batch"])
                dim_z[row["model"]] = int(row["dim_z"])
    write_report_csv(paths["report"], report, timing, dim_z)
    write_boxplot_csv(paths["boxstats"], report)
    write_summary_txt(paths["summary"], report, serialize_config(cfg), timing)
    render_boxplots(paths["boxplot_png"], report)
    log(f"report: wrote {paths['report']} (+ boxplot stats, summary, figure)")
    return 0


def _plot_kinematics(cfg: RunConfig, kind: str, model, y_star, n: int, outdir: Path):
    problem = cfg.get_problem()
    rng = stream(cfg.seed, "plotdata", kind, *np.atleast_1d(y_star))
    samples = model.sample_posterior(y_star, n, rng)
    arms = joint_positions(samples, problem.config)
    mode = mean_shift_mode(samples, cfg.eval.mean_shift_bandwidth)
    mode_arm = joint_positions(mode[None, :], problem.config)[0]
    endpoints = problem.forward(samples)
    level, lines, containment = contour_hdr(
        endpoints, GridSpec.around(endpoints, nx=160, ny=160))
    flat = arms.reshape(arms.shape[0], -1)
    header = [f"{axis}{j}" for j in range(4) for axis in ("px", "py")]
    write_matrix_csv(outdir / "arms.csv", header, flat,
                     index=list(range(flat.shape[0])), index_name="sample")
    write_matrix_csv(outdir / "mode_arm.csv", header, mode_arm.reshape(1, -1))
    write_polylines_csv(outdir / "endpoint_contour.csv", lines)
    render_arms(outdir / "arms.png", arms, mode_arm, y_star, lines,
                title=f"{kind} @ y*={np.round(np.atleast_1d(y_star), 3).tolist()}"
                      f" ({containment:.0%} contour)")


def _plot_ballistics(cfg: RunConfig, kind: str, model, y_star, n: int, outdir: Path):
    problem = cfg.get_problem()
    rng = stream(cfg.seed, "plotdata", kind, *np.atleast_1d(y_star))
    samples = model.sample_posterior(y_star, n, rng)
    t_star, ok = impact_times(samples, problem.config)
    rows = []
    trajs = []
    impacts = np.full(n, np.nan)
    for i in range(n):
        if not ok[i]:
            continue
        ts = np.linspace(0.0, t_star[i], 80)
        t1, t2 = trajectory(samples[i], ts, problem.config)
        trajs.append(np.stack([t1, t2], axis=1))
        impacts[i] = t1[-1]
        rows.extend([i, t, x, y] for t, x, y in zip(ts, t1, t2))
    mode = mean_shift_mode(samples[ok] if ok.any() else samples,
                           cfg.eval.mean_shift_bandwidth)
    mt, mok = impact_times(mode[None, :], problem.config)
    ts = np.linspace(0.0, mt[0] if mok[0] else 1.0, 120)
    m1, m2 = trajectory(mode, ts, problem.config)
    mode_traj = np.stack([m1, m2], axis=1)
    traj_mat = np.array([r[1:] for r in rows]) if rows else np.empty((0, 3))
    write_matrix_csv(outdir / "trajectories.csv", ["t", "x", "y"], traj_mat,
                     index=[r[0] for r in rows], index_name="sample")
    write_matrix_csv(outdir / "mode_trajectory.csv", ["x", "y"], mode_traj)
    finite = impacts[np.isfinite(impacts)]
    hist, edges = np.histogram(finite, bins=40)
    write_matrix_csv(outdir / "impact_hist.csv", ["bin_lo", "bin_hi", "count"],
                     np.stack([edges[:-1], edges[1:], hist], axis=1))
    render_trajectories(outdir / "trajectories.png", trajs, mode_traj,
                        float(np.atleast_1d(y_star)[0]), impacts,
                        title=f"{kind} @ y*={float(np.atleast_1d(y_star)[0])}")


def cmd_plotdata(cfg: RunConfig, models_arg: str | None, ystar_arg: str | None,
                 n_samples: int | None) -> int:
    n = n_samples or cfg.eval.n_samples
    for kind in _model_list(cfg, models_arg):
        ckpt = cfg.out_path("models", f"{kind}.ckpt")
        if not ckpt.exists():
            raise ConfigError(f"no checkpoint for {kind!r}; run train first")
        model, _, _ = load_checkpoint(ckpt)
        if ystar_arg:
            y_star = np.array([float(v) for v in ystar_arg.split(",")])
        else:
            y_star = np.array([1.5, 0.0]) if cfg.problem == "kinematics" else np.array([5.0])
        outdir = cfg.out_path("plots", kind)
        if cfg.problem == "kinematics":
            _plot_kinematics(cfg, kind, model, y_star, n, outdir)
        else:
            _plot_ballistics(cfg, kind, model, y_star, n, outdir)
        log(f"plotdata[{kind}]: wrote {outdir}")
    return 0


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="invbench",
                                description="Benchmark invertible architectures "
                                            "on two inverse problems.")
    sub = p.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("generate", "write the training dataset and the oracle posterior grid"),
        ("train", "train configured models on the dataset"),
        ("eval", "score trained models against the oracle grid"),
        ("report", "aggregate eval records into the benchmark table and figures"),
        ("plotdata", "export posterior visualization data for one condition"),
    ):
        q = sub.add_parser(name, help=help_text)
        q.add_argument("-c", "--config", required=True, help="path to the INI run config")
        q.add_argument("--seed", type=int, default=None, help="override the config seed")
        q.add_argument("--outdir", default=None, help="override the output directory")
        q.add_argument("--problem", default=None, help="override the configured problem")
        if name in ("train", "eval", "plotdata"):
            q.add_argument("-m", "--models", default=None,
                           help="comma-separated subset of the configured models")
        if name == "train":
            q.add_argument("--resume", action="store_true",
                           help="continue from an existing checkpoint")
        if name == "plotdata":
            q.add_argument("--ystar", default=None,
                           help="condition, comma-separated (default: benchmark figure target)")
            q.add_argument("-n", type=int, default=None, help="samples to draw")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config, args.seed, args.outdir, args.problem)
        if args.command == "generate":
            return cmd_generate(cfg)
        if args.command == "train":
            return cmd_train(cfg, args.models, args.resume)
        if args.command == "eval":
            return cmd_eval(cfg, args.models)
        if args.command == "report":
            return cmd_report(cfg)
        if args.command == "plotdata":
            return cmd_plotdata(cfg, args.models, args.ystar, args.n)
        raise AssertionError(args.command)
    except (ConfigError, FileNotFoundError) as err:
        log(f"config error: {err}")
        return EXIT_CONFIG
    except TrainingDivergedError as err:
        log(f"training diverged: {err}")
        return EXIT_DIVERGED
    except BudgetExceededError as err:
        log(f"oracle budget exhausted: {err}")
        return EXIT_BUDGET


if __name__ == "__main__":
    sys.exit(main())
