"""Seeded experiment runner: one chain per seed, artifacts written by the caller's process."""
from __future__ import annotations

import json
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import diagnostics as diag
from .baselines import AnnealSchedule, run_anneal_sgd, run_fixed_langevin, run_sgd_momentum
from .config import ConfigError, ExperimentConfig
from .dynamics import DivergenceError, derive_hyperparams, run
from .objectives import (
    DoubleWell1D,
    GaussianMixture,
    MlpObjective,
    analytic_density,
    make_synthetic_dataset,
    xavier_init,
)
from .tempering import TemperingConfig

OUTPUT_ROOT_ENV = "CTLD_OUTPUT_ROOT"

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_DIVERGED = 2


def _as_list(v):
    return list(v) if isinstance(v, list) else [v]


def build_objective(spec: dict):
    kind = spec["kind"]
    try:
        if kind == "double_well":
            return DoubleWell1D(float(spec.get("h", 4.0)))
        if kind == "gaussian_mixture":
            return GaussianMixture(_as_list(spec["weights"]), _as_list(spec["means"]),
                                   _as_list(spec["variances"]))
        layers = [int(v) for v in _as_list(spec.get("layers", [2, 8, 1]))]
        dataset = make_synthetic_dataset(str(spec.get("dataset", "xor_like")),
                                         int(spec.get("n", 200)), int(spec.get("data_seed", 0)),
                                         separation=float(spec.get("separation", 10.0)))
        return MlpObjective(layers, dataset, activation=str(spec.get("activation", "tanh")),
                            loss=str(spec.get("loss", "mse")),
                            weight_decay=float(spec.get("weight_decay", 0.0)))
    except KeyError as exc:
        raise ConfigError(f"objective.{exc.args[0]}", f"required for {kind}") from None
    except ValueError as exc:
        raise ConfigError("objective", str(exc)) from None


def initial_theta(cfg: ExperimentConfig, obj, seed: int) -> np.ndarray:
    if cfg.theta0 is not None:
        theta0 = np.asarray(cfg.theta0, dtype=float)
        if theta0.size != obj.dim:
            raise ConfigError("experiment.theta0", f"expected {obj.dim} values, got {theta0.size}")
        return theta0
    if isinstance(obj, MlpObjective):
        return xavier_init(obj.layer_sizes, seed)
    return np.zeros(obj.dim)


def ctld_settings(cfg: ExperimentConfig, seed: int):
    opt = cfg.optimizer
    tempering = TemperingConfig(**{k: float(v) for k, v in cfg.tempering.items()})
    settings = derive_hyperparams(float(opt["eta"]), float(opt["c_m"]), int(opt["l_s"]),
                                  tempering, k=int(opt.get("k", 300)), m=int(opt.get("m", 1)),
                                  seed=seed, sigma=float(opt.get("sigma", 0.04)))
    hyper = settings.hyper
    if "gamma_alpha" in opt:
        hyper = replace(hyper, gamma_alpha=float(opt["gamma_alpha"]))
    if "gamma" in opt:
        hyper = replace(hyper, gamma=float(opt["gamma"]))
    tempering = settings.tempering
    if "c" in opt:
        tempering = replace(tempering, c=float(opt["c"]))
    return replace(settings, hyper=hyper, tempering=tempering,
                   w=float(opt.get("w", settings.w)))


def _friction(opt) -> float:
    if "gamma" in opt:
        return float(opt["gamma"])
    return (1.0 - float(opt.get("c_m", 0.0))) / float(opt["eta"])


def _sgd_params(opt):
    if "lr" in opt:
        return float(opt["lr"]), float(opt.get("mu", 0.0))
    eta = float(opt["eta"])
    # same recursion as the fine-tuning phase of a tempered run
    return eta * eta, 1.0 - eta * _friction(opt)


def _diagnostics(cfg, obj, result, name, seed, runtime):
    dcfg = cfg.diagnostics
    burn = float(dcfg.get("burn_in", diag.DEFAULT_BURN_IN))
    trace = result.trace
    records = []
    h = cfg.config_hash

    def add(metric, value, n):
        records.append(diag.metric_record(metric, value, h, seed, n))

    theta_final = result.state.theta
    add("final_loss", float(obj.potential(theta_final)), 1)
    if isinstance(obj, MlpObjective):
        add("final_mean_loss", obj.mean_loss(theta_final), obj.data_size)
        add("train_accuracy", obj.accuracy(theta_final), obj.data_size)

    path = None
    if trace.theta is not None and trace.theta.shape[1] == 1:
        path = trace.theta[:, 0]
    if path is not None:
        band = float(dcfg.get("band", diag.HYSTERESIS))
        barrier = float(dcfg.get("barrier", 0.0))
        add("transitions", diag.count_well_transitions(path, barrier, band), path.size)

    sampling = trace.sampling
    if name == "ctld":
        tc = ctld_settings(cfg, seed).tempering
        alphas = trace.alpha[sampling]
        keep = alphas[int(alphas.size * burn):]
        if keep.size:
            add("alpha_uniformity",
                diag.alpha_uniformity(keep, tc.delta_prime, int(dcfg.get("alpha_bins", 15))),
                keep.size)
            add("residence_fraction", diag.residence_fraction(keep, tc.delta), keep.size)
        add("noise_magnitude_min", float(trace.noise_magnitude.min()), len(trace))
        add("noise_magnitude_max", float(trace.noise_magnitude.max()), len(trace))

    if path is not None and name in ("ctld", "fixed_langevin") and sampling.any():
        if name == "ctld":
            samples = diag.plateau_samples(path, trace.alpha, tc.delta, sampling, burn)
        else:
            samples = path[sampling][int(sampling.sum() * burn):]
        grid_spec = dcfg.get("density_grid")
        if samples.size and grid_spec is not None:
            table = analytic_density(obj, parse_grid(str(grid_spec)))
            add("tv_distance", diag.tv_distance(samples, table, int(dcfg.get("tv_merge", 1))),
                samples.size)

    return {
        "name": cfg.name,
        "optimizer": name,
        "config_hash": h,
        "objective_hash": cfg.objective_hash,
        "seed": seed,
        "runtime_s": runtime,
        "hysteresis_band": float(dcfg.get("band", diag.HYSTERESIS)),
        "records": records,
    }


def parse_grid(spec: str):
    """``lo:hi:n`` for 1-D, ``lo:hi:n x lo:hi:n`` for 2-D lattices."""
    axes = []
    for part in spec.replace(" ", "").split("x"):
        try:
            lo, hi, n = part.split(":")
            axes.append(np.linspace(float(lo), float(hi), int(n)))
        except ValueError:
            raise ConfigError("grid", f"bad grid spec {spec!r}; expected lo:hi:n") from None
    if len(axes) == 1:
        return axes[0]
    if len(axes) == 2:
        return tuple(axes)
    raise ConfigError("grid", "only 1-D and 2-D grids are supported")


def run_seed(cfg: ExperimentConfig, seed: int):
    """Run one chain; returns ``(result, report)`` or raises DivergenceError."""
    obj = build_objective(cfg.objective)
    theta0 = initial_theta(cfg, obj, seed)
    opt = cfg.optimizer
    name = opt["name"]
    record = obj.dim == 1
    m = int(opt.get("m", 1))
    t0 = time.perf_counter()
    if name == "ctld":
        result = run(obj, ctld_settings(cfg, seed), theta0, cfg.total_iters, record_theta=record)
    elif name == "sgd_momentum":
        lr, mu = _sgd_params(opt)
        result = run_sgd_momentum(obj, theta0, lr, mu, cfg.total_iters, seed=seed, m=m,
                                  record_theta=record)
    elif name == "anneal_sgd":
        schedule = AnnealSchedule(**{k: float(v) for k, v in cfg.schedule.items()})
        result = run_anneal_sgd(obj, theta0, float(opt["lr"]), schedule, cfg.total_iters,
                                seed=seed, m=m, record_theta=record)
    else:
        result = run_fixed_langevin(obj, theta0, float(opt["eta"]), _friction(opt),
                                    float(opt.get("temp", 1.0)), cfg.total_iters, seed=seed,
                                    m=m, record_theta=record)
    runtime = time.perf_counter() - t0
    return result, _diagnostics(cfg, obj, result, name, seed, runtime)


def _worker(args):
    text, seed = args
    cfg = ExperimentConfig.loads(text)
    try:
        result, report = run_seed(cfg, seed)
    except DivergenceError as err:
        return seed, None, None, None, {"variable": err.variable, "iteration": err.iteration}
    return seed, result.trace, result.grid, report, None


def resolve_output_dir(cfg: ExperimentConfig) -> Path:
    out = Path(cfg.output_dir)
    root = os.environ.get(OUTPUT_ROOT_ENV)
    if root and not out.is_absolute():
        out = Path(root) / out
    return out


def run_experiment(cfg: ExperimentConfig, jobs: int = 1) -> tuple[int, list]:
    """Run every seed and write artifacts; returns ``(exit_code, messages)``.

    Chains run in worker processes when ``jobs > 1``; all files are written
    here, so output is identical either way.
    """
    out = resolve_output_dir(cfg)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ConfigError("experiment.output_dir", f"not writable: {exc.strerror}") from None
    # fail fast on objective problems before spawning workers
    build_objective(cfg.objective)
    text = cfg.dumps()
    tasks = [(text, seed) for seed in cfg.seeds]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            outcomes = list(pool.map(_worker, tasks))
    else:
        outcomes = [_worker(t) for t in tasks]

    messages = []
    status = EXIT_OK
    manifest = {
        "name": cfg.name,
        "config_hash": cfg.config_hash,
        "objective_hash": cfg.objective_hash,
        "optimizer": cfg.optimizer["name"],
        "seeds": list(cfg.seeds),
        "runs": [],
    }
    (out / "config.ini").write_text(text)
    for seed, trace, grid, report, error in outcomes:
        entry = {"seed": seed}
        if error is not None:
            status = EXIT_DIVERGED
            entry["divergence"] = error
            messages.append(
                f"seed {seed}: divergence at iteration {error['iteration']} ({error['variable']})"
            )
            manifest["runs"].append(entry)
            continue
        trace_path = out / f"trace_seed{seed}.csv"
        trace.to_csv(trace_path, stride=cfg.trace_stride)
        entry["trace"] = trace_path.name
        if grid is not None:
            grid_path = out / f"bias_grid_seed{seed}.csv"
            grid.to_csv(grid_path)
            entry["bias_grid"] = grid_path.name
        report_path = out / f"report_seed{seed}.json"
        diag.write_report(report_path, report)
        entry["report"] = report_path.name
        manifest["runs"].append(entry)
        messages.append(f"seed {seed}: wrote {trace_path.name}")
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return status, messages

