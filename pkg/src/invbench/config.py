"""Run configuration: flat key-value text with sections (INI).

Every output embeds the resolved config so results are diffable; parse ->
serialize -> parse is the identity on resolved configs.
"""

from __future__ import annotations

import configparser
import io
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

from .losses import KernelSpec
from .models.registry import MODEL_KINDS
from .models.training import TrainSchedule
from .problems import DEFAULT_EPS, PROBLEM_NAMES, get_problem


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class LossWeights:
    alpha: float = 1.0
    beta: float = 1.0
    sigma: float = 0.1
    cvae_alpha: float = 0.1
    kernel: str = "imq"
    kernel_scales: tuple = (0.1, 0.5, 2.0)

    def kernel_spec(self) -> KernelSpec:
        return KernelSpec(self.kernel, self.kernel_scales)


@dataclass(frozen=True)
class EvalSettings:
    n_conditions: int = 250
    n_samples: int = 256
    oracle_eps: float = 0.0   # 0 means: problem default
    oracle_max_draws: int = 20_000_000
    timing_repeats: int = 11
    clamp_post: float = 5.0
    clamp_resim: float = 10.0
    mean_shift_bandwidth: float = 0.2


@dataclass(frozen=True)
class RunConfig:
    problem: str
    seed: int
    outdir: str
    models: tuple
    train: TrainSchedule = TrainSchedule()
    n_train: int = 10_000
    budget: int = 100_000
    losses: LossWeights = LossWeights()
    eval: EvalSettings = EvalSettings()
    problem_params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.problem not in PROBLEM_NAMES:
            raise ConfigError(f"unknown problem {self.problem!r}")
        bad = [m for m in self.models if m not in MODEL_KINDS]
        if bad:
            raise ConfigError(f"unknown models: {bad}")
        if not self.models:
            raise ConfigError("no models configured")

    def resolved_eps(self) -> float:
        return self.eval.oracle_eps if self.eval.oracle_eps > 0 else DEFAULT_EPS[self.problem]

    def get_problem(self):
        # configs carry angles in degrees; the constructor wants radians
        params = {}
        for key, value in self.problem_params.items():
            if key.endswith("_deg"):
                params[key[:-4]] = value * math.pi / 180.0
            else:
                params[key] = value
        return get_problem(self.problem, **params)

    def out_path(self, *parts) -> Path:
        return Path(self.outdir).joinpath(*parts)


_PROBLEM_KEYS = {
    "kinematics": ("l1", "l2", "l3", "prior_sigma2"),
    "ballistics": ("g", "m", "k", "x1_mean", "x1_var", "x2_mean", "x2_var",
                   "angle_lo_deg", "angle_hi_deg", "speed_rate"),
}


def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, (tuple, list)):
        return ", ".join(_fmt(x) for x in v)
    return str(v)


def parse_config(text: str) -> RunConfig:
    cp = configparser.ConfigParser()
    try:
        cp.read_string(text)
    except configparser.Error as err:
        raise ConfigError(f"bad config syntax: {err}") from err
    try:
        run = cp["run"]
        problem = run["problem"].strip()
        seed = int(run["seed"])  # required: no wall-clock seeding
        outdir = run["outdir"].strip()
        models = tuple(m.strip() for m in run["models"].split(",") if m.strip())
    except KeyError as err:
        raise ConfigError(f"missing required [run] key: {err}") from err

    def floats(section, key, default):
        if section in cp and key in cp[section]:
            return tuple(float(v) for v in cp[section][key].split(","))
        return default

    def get(section, key, typ, default):
        if section in cp and key in cp[section]:
            return typ(cp[section][key])
        return default

    train = TrainSchedule(
        epochs=get("training", "epochs", int, 60),
        batch_size=get("training", "batch_size", int, 256),
        lr=get("training", "lr", float, 1e-3),
        beta1=get("training", "beta1", float, 0.9),
        beta2=get("training", "beta2", float, 0.999),
        adam_eps=get("training", "adam_eps", float, 1e-8),
    )
    losses = LossWeights(
        alpha=get("losses", "alpha", float, 1.0),
        beta=get("losses", "beta", float, 1.0),
        sigma=get("losses", "sigma", float, 0.1),
        cvae_alpha=get("losses", "cvae_alpha", float, 0.1),
        kernel=get("losses", "kernel", str, "imq"),
        kernel_scales=floats("losses", "kernel_scales", (0.1, 0.5, 2.0)),
    )
    ev = EvalSettings(
        n_conditions=get("eval", "n_conditions", int, 250),
        n_samples=get("eval", "n_samples", int, 256),
        oracle_eps=get("eval", "oracle_eps", float, 0.0),
        oracle_max_draws=get("eval", "oracle_max_draws", int, 20_000_000),
        timing_repeats=get("eval", "timing_repeats", int, 11),
        clamp_post=get("eval", "clamp_post", float, 5.0),
        clamp_resim=get("eval", "clamp_resim", float, 10.0),
        mean_shift_bandwidth=get("eval", "mean_shift_bandwidth", float, 0.2),
    )
    params = {}
    if "problem" in cp:
        allowed = _PROBLEM_KEYS[problem]
        for key, value in cp["problem"].items():
            if key not in allowed:
                raise ConfigError(f"unknown [problem] key {key!r} for {problem}")
            if key == "prior_sigma2":
                params[key] = tuple(float(v) for v in value.split(","))
            else:
                params[key] = float(value)
    try:
        return RunConfig(problem, seed, outdir, models, train,
                         get("training", "n_train", int, 10_000),
                         get("training", "budget", int, 100_000),
                         losses, ev, params)
    except ValueError as err:
        raise ConfigError(str(err)) from err


def serialize_config(cfg: RunConfig) -> str:
    cp = configparser.ConfigParser()
    cp["run"] = {
        "problem": cfg.problem,
        "seed": str(cfg.seed),
        "outdir": cfg.outdir,
        "models": ", ".join(cfg.models),
    }
    cp["training"] = {
        "epochs": str(cfg.train.epochs),
        "batch_size": str(cfg.train.batch_size),
        "lr": _fmt(cfg.train.lr),
        "beta1": _fmt(cfg.train.beta1),
        "beta2": _fmt(cfg.train.beta2),
        "adam_eps": _fmt(cfg.train.adam_eps),
        "n_train": str(cfg.n_train),
        "budget": str(cfg.budget),
    }
    cp["losses"] = {
        "alpha": _fmt(cfg.losses.alpha),
        "beta": _fmt(cfg.losses.beta),
        "sigma": _fmt(cfg.losses.sigma),
        "cvae_alpha": _fmt(cfg.losses.cvae_alpha),
        "kernel": cfg.losses.kernel,
        "kernel_scales": _fmt(cfg.losses.kernel_scales),
    }
    cp["eval"] = {
        "n_conditions": str(cfg.eval.n_conditions),
        "n_samples": str(cfg.eval.n_samples),
        "oracle_eps": _fmt(cfg.eval.oracle_eps),
        "oracle_max_draws": str(cfg.eval.oracle_max_draws),
        "timing_repeats": str(cfg.eval.timing_repeats),
        "clamp_post": _fmt(cfg.eval.clamp_post),
        "clamp_resim": _fmt(cfg.eval.clamp_resim),
        "mean_shift_bandwidth": _fmt(cfg.eval.mean_shift_bandwidth),
    }
    if cfg.problem_params:
        cp["problem"] = {k: _fmt(v) for k, v in sorted(cfg.problem_params.items())}
    buf = io.StringIO()
    cp.write(buf)
    return buf.getvalue()


def load_config(path, seed_override: int | None = None,
                outdir_override: str | None = None,
                problem_override: str | None = None) -> RunConfig:
    cfg = parse_config(Path(path).read_text())
    if seed_override is not None:
        cfg = replace(cfg, seed=seed_override)
    if outdir_override is not None:
        cfg = replace(cfg, outdir=outdir_override)
    if problem_override is not None:
        cfg = replace(cfg, problem=problem_override, problem_params={})
    return cfg
