"""Command line entry point: ``severity-ridge <subcommand> ...``.

Exit status is 0 on success, 1 on invalid input or usage, 2 on I/O failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import cohort, evalharness, ridge, triage
from .errors import ValidationError

SEED_ENV = "SEVERITY_RIDGE_SEED"


class UsageError(ValidationError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _add_prior_flags(p: argparse.ArgumentParser) -> None:
    d = ridge.RidgeConfig()
    p.add_argument("--alpha1", type=float, default=d.alpha_1, help="Gamma shape for the noise precision (default: %(default)s)")
    p.add_argument("--alpha2", type=float, default=d.alpha_2, help="Gamma rate for the noise precision (default: %(default)s)")
    p.add_argument("--lambda1", type=float, default=d.lambda_1, help="Gamma shape for the weight precision (default: %(default)s)")
    p.add_argument("--lambda2", type=float, default=d.lambda_2, help="Gamma rate for the weight precision (default: %(default)s)")
    p.add_argument("--alpha-init", type=float, default=None, help="initial noise precision (default: 1/Var(y))")
    p.add_argument("--lambda-init", type=float, default=None, help="initial weight precision (default: 1)")
    p.add_argument("--tol", type=float, default=d.tol, help="L1 coefficient-change stopping tolerance (default: %(default)s)")
    p.add_argument("--max-iter", type=int, default=d.max_iter, help="maximum evidence iterations (default: %(default)s)")
    p.add_argument("--no-intercept", action="store_true", help="fit without an intercept (default: off)")
    p.add_argument("--fixed-hyperparams", action="store_true",
                   help="skip hyperparameter re-estimation, i.e. plain ridge (default: off)")
    p.add_argument("--raw-target", action="store_true",
                   help="do not normalize the target during evidence iterations (default: off)")


def _ridge_config(args) -> ridge.RidgeConfig:
    return ridge.RidgeConfig(
        alpha_1=args.alpha1, alpha_2=args.alpha2, lambda_1=args.lambda1, lambda_2=args.lambda2,
        alpha_init=args.alpha_init, lambda_init=args.lambda_init, tol=args.tol, max_iter=args.max_iter,
        fit_intercept=not args.no_intercept, update_hyperparams=not args.fixed_hyperparams,
        normalize_target=not args.raw_target,
    )


def _default_seed(env) -> int:
    raw = env.get(SEED_ENV)
    if raw is None:
        return 42
    try:
        seed = int(raw)
    except ValueError:
        raise ValidationError(f"{SEED_ENV}={raw!r} is not an integer") from None
    if not 0 <= seed < 2 ** 64:
        raise ValidationError(f"{SEED_ENV} must be a 64-bit unsigned integer")
    return seed


def build_parser(env=None) -> argparse.ArgumentParser:
    env = os.environ if env is None else env
    seed = _default_seed(env)
    parser = _Parser(prog="severity-ridge", description="Synthetic infant RSV severity pipeline.")
    parser.add_argument("--config", type=Path, default=None,
                        help="JSON file whose keys mirror the subcommand's flags; flags win")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("generate", help="generate a synthetic cohort as three CSV files")
    p.add_argument("--n", type=int, default=cohort.DEFAULT_N_SAMPLES, help="number of samples (default: %(default)s)")
    p.add_argument("--seed", type=int, default=seed, help=f"master seed (default: ${SEED_ENV} or 42, now %(default)s)")
    p.add_argument("--out-dir", type=Path, default=Path("."), help="output directory (default: %(default)s)")
    p.add_argument("--workers", type=int, default=1, help="generation threads (default: %(default)s)")

    p = sub.add_parser("fit", help="fit a Bayesian ridge model to CSV data")
    p.add_argument("--x", type=Path, required=True, help="feature CSV (Weight,Age,Virion Count,Gender)")
    p.add_argument("--y", type=Path, required=True, help="target CSV (Severity)")
    p.add_argument("--model-out", type=Path, required=True, help="where to write the model file")
    _add_prior_flags(p)

    p = sub.add_parser("evaluate", help="score a saved model against precise and noisy targets")
    p.add_argument("--model", type=Path, required=True, help="model file from 'fit'")
    p.add_argument("--x", type=Path, required=True, help="feature CSV")
    p.add_argument("--y-precise", type=Path, required=True, help="precise target CSV")
    p.add_argument("--y-noisy", type=Path, required=True, help="noisy target CSV")

    p = sub.add_parser("experiment", help="repeated generate/split/fit/evaluate runs with a report")
    p.add_argument("--n", type=int, default=100_000, help="samples per iteration (default: %(default)s)")
    p.add_argument("--iterations", type=int, default=10, help="number of iterations (default: %(default)s)")
    p.add_argument("--seed", type=int, default=seed, help=f"base seed (default: ${SEED_ENV} or 42, now %(default)s)")
    p.add_argument("--out-dir", type=Path, default=Path("report"), help="report directory (default: %(default)s)")
    p.add_argument("--workers", type=int, default=1, help="iterations run concurrently (default: %(default)s)")
    _add_prior_flags(p)

    p = sub.add_parser("predict", help="print one predicted severity per row")
    p.add_argument("--model", type=Path, required=True, help="model file from 'fit'")
    p.add_argument("--x", type=Path, required=True, help="feature CSV")
    p.add_argument("--with-std", action="store_true", help="also print the predictive standard deviation (default: off)")

    p = sub.add_parser("triage", help="print a priority label per row")
    p.add_argument("--model", type=Path, required=True, help="model file from 'fit'")
    p.add_argument("--x", type=Path, required=True, help="feature CSV")
    p.add_argument("--k", type=int, default=3, help="number of groups when building a plan (default: %(default)s)")
    p.add_argument("--plan", type=Path, default=None, help="existing plan CSV; otherwise built from these predictions")
    p.add_argument("--plan-out", type=Path, default=None, help="write the plan used to this CSV")
    return parser


def _apply_config_file(parser, argv) -> None:
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config", type=Path, default=None)
    known, rest = pre.parse_known_args(argv)
    if known.config is None:
        return
    try:
        data = json.loads(known.config.read_text())
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{known.config}:{exc.lineno}: invalid JSON ({exc.msg})") from None
    if not isinstance(data, dict):
        raise ValidationError(f"{known.config}: expected a JSON object")
    command = next((a for a in rest if not a.startswith("-")), None)
    subparsers = next(a for a in parser._actions if isinstance(a, argparse._SubParsersAction))
    if command not in subparsers.choices:
        return
    sub = subparsers.choices[command]
    dests = {a.dest for a in sub._actions} - {"help"}
    defaults = {}
    for key, value in data.items():
        dest = key.lstrip("-").replace("-", "_")
        if dest not in dests:
            raise ValidationError(f"{known.config}: unknown key {key!r} for '{command}'")
        defaults[dest] = value
    # required flags satisfied by the file are no longer required on the command line
    for action in sub._actions:
        if action.dest in defaults:
            action.required = False
    sub.set_defaults(**defaults)


def _as_paths(args) -> None:
    for k, v in vars(args).items():
        if isinstance(v, str) and k in {"x", "y", "model", "model_out", "y_precise", "y_noisy",
                                         "out_dir", "plan", "plan_out"}:
            setattr(args, k, Path(v))


def _design_from(path) -> np.ndarray:
    weight, age, virions, sex = cohort.read_features(path)
    return np.column_stack([weight, age, virions, sex]).astype(np.float64)


def cmd_generate(args, out) -> None:
    config = cohort.GenerationConfig(args.n, args.seed)
    data = cohort.generate(config, workers=args.workers)
    d = args.out_dir
    d.mkdir(parents=True, exist_ok=True)
    cohort.write_dataset(data, d / "x_data.csv", d / "y_data_precise.csv", d / "y_data_variance.csv")
    print(f"wrote {len(data)} samples to {d}", file=out)


def cmd_fit(args, out) -> None:
    config = _ridge_config(args)
    X = _design_from(args.x)
    y = cohort.read_targets(args.y)
    if y.shape[0] != X.shape[0]:
        raise ValidationError(f"{args.y}: {y.shape[0]} rows, but {args.x} has {X.shape[0]}")
    model = ridge.fit(X, y, config)
    model.save(args.model_out)
    print(f"coefficients = {' '.join(repr(float(c)) for c in model.coefficients)}", file=out)
    print(f"intercept = {model.intercept!r}", file=out)
    print(f"alpha = {model.alpha!r}  lambda = {model.lambda_!r}  "
          f"effective_dof = {model.effective_dof:.6g}  n_iter = {model.n_iter}  converged = {model.converged}",
          file=out)


def cmd_evaluate(args, out) -> None:
    model = ridge.RidgeModel.load(args.model)
    X = _design_from(args.x)
    yp = cohort.read_targets(args.y_precise)
    yn = cohort.read_targets(args.y_noisy)
    for path, y in ((args.y_precise, yp), (args.y_noisy, yn)):
        if y.shape[0] != X.shape[0]:
            raise ValidationError(f"{path}: {y.shape[0]} rows, but {args.x} has {X.shape[0]}")
    for rep in evalharness.evaluate(model, X, yp, yn):
        print(f"{rep.target_kind}: mse={rep.mse!r} nmse={rep.nmse!r} r2={rep.r2!r} n_test={rep.n_test}", file=out)


def cmd_experiment(args, out) -> None:
    report = evalharness.run_experiment(args.n, args.iterations, args.seed, _ridge_config(args),
                                        workers=args.workers)
    evalharness.emit_report(report, args.out_dir)
    for it in report.iterations:
        print(f"seed {it.seed}: r2_precise={it.precise.r2:.6f} nmse_precise={it.precise.nmse:.6f} "
              f"r2_noisy={it.noisy.r2:.6f}", file=out)
    print(f"mean r2 (precise) = {report.mean_r2:.6f}  mean nmse (precise) = {report.mean_nmse:.6f}", file=out)


def cmd_predict(args, out) -> None:
    model = ridge.RidgeModel.load(args.model)
    X = _design_from(args.x)
    if args.with_std:
        mean, std = model.predict_with_std(X)
        out.write("".join(f"{m!r},{s!r}\n" for m, s in zip(mean.tolist(), std.tolist())))
    else:
        out.write("".join(f"{m!r}\n" for m in model.predict(X).tolist()))


def cmd_triage(args, out) -> None:
    model = ridge.RidgeModel.load(args.model)
    pred = model.predict(_design_from(args.x))
    plan = triage.load_plan(args.plan) if args.plan else triage.build_plan(pred, args.k)
    if args.plan_out:
        triage.save_plan(plan, args.plan_out)
    out.write("".join(label + "\n" for label in plan.assign_many(pred)))


COMMANDS = {
    "generate": cmd_generate,
    "fit": cmd_fit,
    "evaluate": cmd_evaluate,
    "experiment": cmd_experiment,
    "predict": cmd_predict,
    "triage": cmd_triage,
}


def main(argv=None, env=None, out=None, err=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    out = out or sys.stdout
    err = err or sys.stderr
    try:
        parser = build_parser(env)
        _apply_config_file(parser, argv)
        args = parser.parse_args(argv)
        _as_paths(args)
        COMMANDS[args.command](args, out)
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    except ValidationError as exc:
        print(f"error: {exc}", file=err)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=err)
        return 2
    return 0


def run() -> None:
    sys.exit(main())


if __name__ == "__main__":
    run()
