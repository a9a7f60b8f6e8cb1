"""Command-line front end.

Exit codes: 0 success, 1 configuration problem, 2 data problem,
3 solver failed to converge (or no candidate trained).
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace

from . import experiment, models
from .dataset import (
    DEFAULT_NOISE_SCALE,
    INPUT_NAMES,
    TARGET_NAMES,
    SplitSpec,
    split,
    summarize,
    synthesize,
)
from .errors import (
    AllCandidatesInfeasible,
    ConfigError,
    DegenerateSplit,
    DidNotConverge,
    MissingColumn,
    NonFiniteValue,
    TooFewRows,
    UnparseableCell,
)
from .experiment import RunConfig, emit_report, run_study, run_task

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_DATA = 2
EXIT_SOLVER = 3

_DATA_ERRORS = (MissingColumn, UnparseableCell, NonFiniteValue, TooFewRows,
                DegenerateSplit)
_SOLVER_ERRORS = (DidNotConverge, AllCandidatesInfeasible)


def _build_config(args) -> RunConfig:
    cfg = RunConfig.from_file(args.config) if getattr(args, "config", None) else RunConfig()
    if getattr(args, "seed", None) is not None:
        cfg = replace(cfg, base_seed=args.seed)
    if getattr(args, "repeats", None) is not None:
        cfg = replace(cfg, n_repeats=args.repeats)
    if getattr(args, "out", None) is not None:
        cfg = replace(cfg, out_dir=args.out)
    return cfg


def _targets(args, cfg: RunConfig) -> list[str]:
    raw = getattr(args, "target", "all")
    if raw == "all":
        return [t for t in cfg.targets]
    return [experiment.TARGET_ALIASES[raw]]


def _models(args, cfg: RunConfig) -> list[str]:
    raw = getattr(args, "model", "all")
    if raw == "all":
        return [m for m in cfg.models]
    return [raw]


def _emit_json(obj, out: str | None) -> None:
    text = json.dumps(obj, indent=2, sort_keys=True) + "\n"
    if out:
        with open(out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def cmd_stats(args) -> int:
    cfg = _build_config(args)
    ds = experiment.load_config_dataset(cfg)
    stats = summarize(ds)
    print(f"{'column':>8} {'count':>5} {'mean':>10} {'std':>10} {'min':>8} "
          f"{'q25':>8} {'median':>8} {'q75':>8} {'max':>8}")
    for name in INPUT_NAMES + TARGET_NAMES:
        c = stats.columns[name]
        print(f"{name:>8} {c.count:>5} {c.mean:>10.4f} {c.std:>10.4f} "
              f"{c.minimum:>8.3f} {c.q25:>8.3f} {c.median:>8.3f} "
              f"{c.q75:>8.3f} {c.maximum:>8.3f}")
    return EXIT_OK


def cmd_synth(args) -> int:
    ds = synthesize(args.seed if args.seed is not None else 1, args.n,
                    args.noise_scale)
    lines = [",".join(INPUT_NAMES + TARGET_NAMES)]
    for i in range(ds.n):
        vals = [repr(float(v)) for v in ds.x[i]] + [repr(float(v)) for v in ds.y[i]]
        lines.append(",".join(vals))
    text = "\n".join(lines) + "\n"
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        print(f"wrote {ds.n} rows to {args.out}")
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_split(args) -> int:
    cfg = _build_config(args)
    ds = experiment.load_config_dataset(cfg)
    train, test = split(ds, SplitSpec(cfg.train_fraction, cfg.base_seed))
    out = {
        "n": ds.n,
        "train_fraction": cfg.train_fraction,
        "seed": cfg.base_seed,
        "n_train": train.n,
        "n_test": test.n,
        "train_row_ids": [int(i) for i in train.row_ids],
        "test_row_ids": [int(i) for i in test.row_ids],
    }
    _emit_json(out, args.out)
    return EXIT_OK


def cmd_tune(args) -> int:
    cfg = _build_config(args)
    ds = experiment.load_config_dataset(cfg)
    out = {}
    for model in _models(args, cfg):
        for target in _targets(args, cfg):
            task = run_task(cfg, model, target, cfg.base_seed, data=ds,
                            with_pdp=False)
            out[f"{model}/{target}"] = {
                "best_candidate": task.tuning.best_candidate,
                "best_cv_mse": task.tuning.best_cv_mse,
            }
            print(f"{model}/{target}: cv_mse={task.tuning.best_cv_mse:.6g} "
                  f"best={task.tuning.best_candidate}")
    if args.out:
        _emit_json(out, args.out)
    return EXIT_OK


def cmd_train(args) -> int:
    cfg = _build_config(args)
    ds = experiment.load_config_dataset(cfg)
    bundle = {}
    for model in _models(args, cfg):
        for target in _targets(args, cfg):
            task = run_task(cfg, model, target, cfg.base_seed, data=ds,
                            with_pdp=False)
            bundle[f"{model}/{target}"] = {
                "hyper": task.tuning.best_candidate,
                "artifact": models.serialize_model(model, task.fitted),
            }
            print(f"trained {model}/{target} "
                  f"(test r2={task.test_report.r2:.4f})")
    _emit_json(bundle, args.out)
    return EXIT_OK


def cmd_evaluate(args) -> int:
    cfg = _build_config(args)
    ds = experiment.load_config_dataset(cfg)
    tasks = []
    for model in _models(args, cfg):
        for target in _targets(args, cfg):
            task = run_task(cfg, model, target, cfg.base_seed, data=ds,
                            with_pdp=False)
            tasks.append(task)
            for phase, rep in (("train", task.train_report),
                               ("test", task.test_report)):
                print(f"{model}/{target} {phase}: r2={rep.r2:.4f} "
                      f"rmse={rep.rmse:.4f} mae={rep.mae:.4f} "
                      f"mape={rep.mape:.4f}")
    if args.out:
        _emit_json({f"{t.model}/{t.target}": t.report_dict() for t in tasks},
                   args.out)
    return EXIT_OK


def cmd_pdp(args) -> int:
    cfg = _build_config(args)
    ds = experiment.load_config_dataset(cfg)
    out = {}
    for model in _models(args, cfg):
        for target in _targets(args, cfg):
            task = run_task(cfg, model, target, cfg.base_seed, data=ds)
            for curve in task.pdp_curves:
                out[f"{model}/{target}/{curve.feature}"] = curve.to_dict()
            print(f"{model}/{target}: {len(task.pdp_curves)} curves")
    _emit_json(out, args.out)
    return EXIT_OK


def cmd_repeat(args) -> int:
    cfg = _build_config(args)
    ds = experiment.load_config_dataset(cfg)
    out = []
    for model in _models(args, cfg):
        for target in _targets(args, cfg):
            study = experiment.repeat_study(cfg, model, target, data=ds)
            out.append(study)
            m = study["metrics"]
            print(f"{model}/{target} over {study['n_repeats']} splits: "
                  f"r2={m['r2']['formatted']} rmse={m['rmse']['formatted']} "
                  f"mae={m['mae']['formatted']} mape={m['mape']['formatted']}")
    if args.out:
        _emit_json(out, args.out)
    return EXIT_OK


def cmd_report(args) -> int:
    cfg = _build_config(args)
    study = run_study(cfg, with_repeats=args.with_repeats)
    written = emit_report(study, cfg.out_dir)
    print(f"wrote {len(written)} files under {cfg.out_dir}")
    return EXIT_OK


def cmd_all(args) -> int:
    cfg = _build_config(args)
    study = run_study(cfg, with_repeats=False)
    written = emit_report(study, cfg.out_dir)
    for task in study.tasks:
        print(f"{task.model}/{task.target}: test r2={task.test_report.r2:.4f} "
              f"mape={task.test_report.mape:.4f}")
    print(f"wrote {len(written)} files under {cfg.out_dir}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="subgrade",
        description="Soil strength regression toolkit (SVR and boosted trees)")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, target_model=True):
        p.add_argument("--config", help="JSON run-configuration file")
        p.add_argument("--seed", type=int, help="override the base seed")
        p.add_argument("--out", help="output file or directory")
        if target_model:
            p.add_argument("--target", choices=["cbr", "ucs", "r", "all"],
                           default="all")
            p.add_argument("--model", choices=["svr", "xgb", "oblivious", "all"],
                           default="all")

    p = sub.add_parser("stats", help="descriptive statistics of the dataset")
    common(p, target_model=False)
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("synth", help="write a synthetic dataset as CSV")
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--n", type=int, default=121)
    p.add_argument("--noise-scale", type=float, default=DEFAULT_NOISE_SCALE)
    p.add_argument("--out")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("split", help="show the train/test partition")
    common(p, target_model=False)
    p.set_defaults(func=cmd_split)

    p = sub.add_parser("tune", help="cross-validated grid search")
    common(p)
    p.set_defaults(func=cmd_tune)

    p = sub.add_parser("train", help="tune, refit and serialize models")
    common(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", help="train/test metrics for tuned models")
    common(p)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("pdp", help="partial dependence curves")
    common(p)
    p.set_defaults(func=cmd_pdp)

    p = sub.add_parser("repeat", help="repeated-split stability study")
    common(p)
    p.add_argument("--repeats", type=int, help="number of repeated splits")
    p.set_defaults(func=cmd_repeat)

    p = sub.add_parser("report", help="full study with report files")
    common(p, target_model=False)
    p.add_argument("--with-repeats", action="store_true")
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("all", help="full pipeline: tune, evaluate, pdp, report")
    common(p, target_model=False)
    p.set_defaults(func=cmd_all)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except _DATA_ERRORS as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except _SOLVER_ERRORS as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
