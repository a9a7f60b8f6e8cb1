"""End-to-end orchestration: load -> split -> scale -> tune -> train ->
evaluate -> sensitivity -> report, plus the repeated-split study.

The test partition is produced by the very first step and never touched
again until final evaluation; tuning artifacts are pure functions of the
training partition.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field

import numpy as np

from . import metrics, models, sensitivity
from .dataset import (
    DEFAULT_NOISE_SCALE,
    Dataset,
    SplitSpec,
    fit_scaler,
    load_csv,
    split,
    summarize,
    synthesize,
)
from .errors import ConfigError
from .metrics import EvalReport
from .tuning import HyperGrid, TuningResult, grid_search

TARGET_ALIASES = {"cbr": "CBR", "ucs": "UCS", "r": "R"}

# Published baselines on the same 121-sample problem, for side-by-side
# context only; this artifact does not reproduce them.
LITERATURE_RESULTS = {
    "CBR": [
        ("ANN", 121, 0.9994, 1.1900, 0.1649),
        ("ANN", 121, 0.9987, 0.4346, 0.2987),
        ("Fuzzy Logic", 121, 0.9921, 0.5561, 0.3213),
    ],
    "UCS": [
        ("ANN", 121, 0.9350, 1.1900, 1.2700),
        ("ANN", 121, 0.9992, 0.5570, 1.3230),
        ("Fuzzy Logic", 121, 0.9981, 0.8152, 0.3145),
    ],
    "R": [
        ("ANN", 121, 0.9900, 1.1900, 0.0380),
        ("ANN", 121, 0.9970, 0.2545, 0.2033),
        ("Fuzzy Logic", 121, 0.9810, 0.6251, 0.4852),
    ],
}


@dataclass(frozen=True)
class RunConfig:
    data_csv: str | None = None
    synthetic: dict = field(default_factory=lambda: {
        "seed": 1, "n": 121, "noise_scale": DEFAULT_NOISE_SCALE})
    targets: tuple = ("CBR", "UCS", "R")
    models: tuple = ("svr", "xgb", "oblivious")
    train_fraction: float = 0.7
    cv_k: int = 5
    base_seed: int = 42
    grids: dict = field(default_factory=lambda: models.DEFAULT_GRIDS)
    pdp_points: int = 50
    n_repeats: int = 10
    out_dir: str = "runs"

    def __post_init__(self):
        if not self.targets:
            raise ConfigError("at least one target is required")
        if not self.models:
            raise ConfigError("at least one model is required")
        for t in self.targets:
            if t not in ("CBR", "UCS", "R"):
                raise ConfigError(f"unknown target {t!r}")
        for m in self.models:
            if m not in models.MODEL_NAMES:
                raise ConfigError(f"unknown model {m!r}")
        if not 0.0 < self.train_fraction < 1.0:
            raise ConfigError("train_fraction must be in (0, 1)")
        if self.cv_k < 2:
            raise ConfigError("cv_k must be at least 2")
        if self.data_csv is None and self.synthetic is None:
            raise ConfigError("either data_csv or synthetic must be given")

    @classmethod
    def from_file(cls, path: str) -> "RunConfig":
        try:
            with open(path, encoding="utf-8") as fh:
                raw = json.load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
        return cls.from_dict(raw)

    @classmethod
    def from_dict(cls, raw: dict) -> "RunConfig":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(raw) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        kwargs = dict(raw)
        if "targets" in kwargs:
            kwargs["targets"] = tuple(kwargs["targets"])
        if "models" in kwargs:
            kwargs["models"] = tuple(kwargs["models"])
        return cls(**kwargs)

    def to_dict(self) -> dict:
        return {
            "data_csv": self.data_csv,
            "synthetic": self.synthetic,
            "targets": list(self.targets),
            "models": list(self.models),
            "train_fraction": self.train_fraction,
            "cv_k": self.cv_k,
            "base_seed": self.base_seed,
            "grids": self.grids,
            "pdp_points": self.pdp_points,
            "n_repeats": self.n_repeats,
            "out_dir": self.out_dir,
        }


def load_config_dataset(cfg: RunConfig) -> Dataset:
    if cfg.data_csv is not None:
        return load_csv(cfg.data_csv)
    s = cfg.synthetic
    return synthesize(int(s.get("seed", 1)), int(s.get("n", 121)),
                      float(s.get("noise_scale", DEFAULT_NOISE_SCALE)))


@dataclass
class TaskResult:
    model: str
    target: str
    seed: int
    tuning: TuningResult
    fitted: object
    predict: object
    converged: bool
    train_report: EvalReport
    test_report: EvalReport
    train_scatter: list  # (row_id, actual, predicted)
    test_scatter: list
    pdp_curves: list

    def report_dict(self) -> dict:
        return {
            "seed": self.seed,
            "hyper": self.tuning.best_candidate,
            "cv_mse": self.tuning.best_cv_mse,
            "converged": self.converged,
            "train": self.train_report.to_dict(),
            "test": self.test_report.to_dict(),
        }


def run_task(cfg: RunConfig, model: str, target: str, seed: int,
             data: Dataset | None = None, with_pdp: bool = True) -> TaskResult:
    """One (model, target) pipeline pass at the given split seed."""
    ds = load_config_dataset(cfg) if data is None else data
    train, test = split(ds, SplitSpec(cfg.train_fraction, seed))

    trainer = models.make_trainer(model)
    grid = HyperGrid(cfg.grids[model])
    tuning = grid_search(train, target, grid, cfg.cv_k, seed, trainer)

    scaler = fit_scaler(train)
    x_train = scaler.transform_matrix(train.x)
    y_train = train.target_column(target)
    fitted, predict = models.fit_candidate(model, x_train, y_train,
                                           tuning.best_candidate, seed=0)
    converged = getattr(fitted, "converged", True)

    pred_train = predict(x_train)
    x_test = scaler.transform_matrix(test.x)
    y_test = test.target_column(target)
    pred_test = predict(x_test)

    train_report = metrics.evaluate(y_train, pred_train, train.row_ids)
    test_report = metrics.evaluate(y_test, pred_test, test.row_ids)
    train_scatter = [(int(i), float(a), float(p))
                     for i, a, p in zip(train.row_ids, y_train, pred_train)]
    test_scatter = [(int(i), float(a), float(p))
                    for i, a, p in zip(test.row_ids, y_test, pred_test)]

    pdp_curves = []
    if with_pdp:
        for feature in ds.schema.input_names:
            grid_vals = sensitivity.pdp_grid(train, feature, cfg.pdp_points)
            pdp_curves.append(
                sensitivity.pdp_compute(predict, train, scaler, feature, grid_vals))

    return TaskResult(model=model, target=target, seed=seed, tuning=tuning,
                      fitted=fitted, predict=predict, converged=converged,
                      train_report=train_report, test_report=test_report,
                      train_scatter=train_scatter, test_scatter=test_scatter,
                      pdp_curves=pdp_curves)


def format_mean_std(mean: float, std: float) -> str:
    return f"{mean:.4f}±{std:.4f}"


def repeat_study(cfg: RunConfig, model: str, target: str,
                 n_repeats: int | None = None,
                 data: Dataset | None = None) -> dict:
    """Rerun the full task at seeds base_seed..base_seed+n-1 and aggregate
    the test metrics as mean and sample standard deviation."""
    n_repeats = cfg.n_repeats if n_repeats is None else n_repeats
    if n_repeats < 2:
        raise ConfigError("repeat study needs n_repeats >= 2")
    ds = load_config_dataset(cfg) if data is None else data
    per_run = []
    for r in range(n_repeats):
        seed = cfg.base_seed + r
        try:
            task = run_task(cfg, model, target, seed, data=ds, with_pdp=False)
        except Exception as exc:
            raise RuntimeError(f"repeat with seed {seed} failed: {exc}") from exc
        per_run.append(task.test_report)
    out = {"model": model, "target": target, "n_repeats": n_repeats,
           "seeds": [cfg.base_seed + r for r in range(n_repeats)], "metrics": {}}
    for name in ("r2", "rmse", "mae", "mape"):
        vals = np.array([getattr(rep, name) for rep in per_run])
        mean = float(vals.mean())
        std = float(vals.std(ddof=1))
        out["metrics"][name] = {"mean": mean, "std": std,
                                "formatted": format_mean_std(mean, std)}
    out["per_run"] = [{"seed": s, "r2": rep.r2, "rmse": rep.rmse,
                       "mae": rep.mae, "mape": rep.mape}
                      for s, rep in zip(out["seeds"], per_run)]
    return out


@dataclass
class StudyReport:
    config: RunConfig
    tasks: list  # TaskResult, (model, target) order
    repeats: list  # repeat_study dicts, possibly empty
    summary: dict  # per-column stats of the full dataset

    def to_dict(self) -> dict:
        # out_dir is an output location, not an experiment parameter, so it
        # stays out of the report: identical studies emit identical bytes.
        cfg = self.config.to_dict()
        del cfg["out_dir"]
        return {
            "config": cfg,
            "dataset_summary": self.summary,
            "tasks": {f"{t.model}/{t.target}": t.report_dict() for t in self.tasks},
            "repeats": self.repeats,
            "literature": {
                "note": "published baselines, not reproduced by this artifact",
                "rows": {t: [list(r) for r in rows]
                         for t, rows in LITERATURE_RESULTS.items()},
            },
        }


def run_study(cfg: RunConfig, with_repeats: bool = False) -> StudyReport:
    ds = load_config_dataset(cfg)
    stats = summarize(ds)
    summary = {name: vars(col) for name, col in stats.columns.items()}
    tasks = []
    for model in cfg.models:
        for target in cfg.targets:
            tasks.append(run_task(cfg, model, target, cfg.base_seed, data=ds))
    repeats = []
    if with_repeats:
        for model in cfg.models:
            for target in cfg.targets:
                repeats.append(repeat_study(cfg, model, target, data=ds))
    return StudyReport(config=cfg, tasks=tasks, repeats=repeats, summary=summary)


def _dump_json(obj, path: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _write_text(text: str, path: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def metrics_csv_text(tasks) -> str:
    lines = ["phase,model,target,r2,rmse,mae,mape"]
    for task in tasks:
        for phase, rep in (("train", task.train_report), ("test", task.test_report)):
            lines.append(f"{phase},{task.model},{task.target},"
                         f"{rep.r2!r},{rep.rmse!r},{rep.mae!r},{rep.mape!r}")
    return "\n".join(lines) + "\n"


def comparison_md_text(tasks) -> str:
    by_target = {}
    for task in tasks:
        by_target.setdefault(task.target, []).append(task)
    out = ["# Comparison with published baselines", "",
           "Literature rows are static reference values from prior studies",
           "on the same 121-sample problem; they are",
           "**not reproduced by this artifact** and carry no tolerance promise.", "",
           "```", "source algorithm r2 rmse mae n"]
    for target in ("CBR", "UCS", "R"):
        if target not in by_target and target not in LITERATURE_RESULTS:
            continue
        out.append(f"-- {target} --")
        for algo, n, r2v, rmsev, maev in LITERATURE_RESULTS.get(target, []):
            out.append(f"literature {algo} {r2v:.4f} {rmsev:.4f} {maev:.4f} {n}")
        for task in by_target.get(target, []):
            rep = task.test_report
            out.append(f"this-run {task.model} {rep.r2:.4f} {rep.rmse:.4f} "
                       f"{rep.mae:.4f} {len(task.test_scatter)}")
    out += ["```", ""]
    return "\n".join(out)


def emit_report(study: StudyReport, out_dir: str) -> list[str]:
    """Write the full report tree; returns the paths written (sorted)."""
    os.makedirs(out_dir, exist_ok=True)
    for sub in ("residuals", "scatter", "pdp"):
        os.makedirs(os.path.join(out_dir, sub), exist_ok=True)
    written = []

    path = os.path.join(out_dir, "report.json")
    _dump_json(study.to_dict(), path)
    written.append(path)

    path = os.path.join(out_dir, "metrics.csv")
    _write_text(metrics_csv_text(study.tasks), path)
    written.append(path)

    path = os.path.join(out_dir, "comparison.md")
    _write_text(comparison_md_text(study.tasks), path)
    written.append(path)

    for task in study.tasks:
        stem = f"{task.model}_{task.target}"
        for phase, rep, scatter in (
            ("train", task.train_report, task.train_scatter),
            ("test", task.test_report, task.test_scatter),
        ):
            path = os.path.join(out_dir, "residuals", f"{stem}_{phase}.csv")
            lines = ["index,row_id,residual"]
            lines += [f"{i},{rid},{res!r}" for i, (rid, res) in enumerate(rep.residuals)]
            _write_text("\n".join(lines) + "\n", path)
            written.append(path)

            path = os.path.join(out_dir, "scatter", f"{stem}_{phase}.csv")
            lines = ["row_id,actual,predicted"]
            lines += [f"{rid},{a!r},{p!r}" for rid, a, p in scatter]
            _write_text("\n".join(lines) + "\n", path)
            written.append(path)

        for curve in task.pdp_curves:
            path = os.path.join(out_dir, "pdp", f"{stem}_{curve.feature}.csv")
            _write_text(curve.to_csv_text(), path)
            written.append(path)

    if study.repeats:
        path = os.path.join(out_dir, "repeats.json")
        _dump_json(study.repeats, path)
        written.append(path)

    return sorted(written)
