"""Command-line entry point: ``solve``, ``run``, ``experiment``, ``oracle``.

Every subcommand takes a JSON or TOML config path plus ``--seed`` and
``--out``. ``oracle`` exits with status 1 if any check fails.
"""

import argparse
import sys
from dataclasses import replace
from pathlib import Path

from .._validation import ValidationError
from ..envs import FiniteTask, RandomMdpSpec, make_task
from .bias_study import LAMBDA_GRID, bias_study, solution_curve, solver_csv
from .config import ExperimentConfig, read_document
from .experiment import run_experiment, series_csv, summary_csv
from .oracle import run_oracles


def _emit(text, out):
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def cmd_solve(doc, seed, out):
    """Exact solution curves, or the random-MDP bias study with ``"study": "bias"``.

    Curve config: ``task``, ``task_options``, ``schemes`` (list of variants,
    default ``["constant", "abq"]``) and ``grid`` (default 0, 0.1, ..., 1).
    Bias-study config: ``n_instances``, ``grid``, ``n_states``,
    ``n_actions``, ``n_features``, ``discount``, ``tabular``.
    """
    if doc.get("study") == "bias":
        defaults = RandomMdpSpec()
        spec = RandomMdpSpec(int(doc.get("n_states", defaults.n_states)),
                             int(doc.get("n_actions", defaults.n_actions)),
                             int(doc.get("n_features", defaults.n_features)), 0,
                             float(doc.get("discount", defaults.discount)))
        res = bias_study(int(doc.get("n_instances", 50)), tuple(doc.get("grid", LAMBDA_GRID)), spec,
                         int(doc.get("seed", 0) if seed is None else seed), bool(doc.get("tabular", False)))
        _emit(res.to_csv(), out)
        print(f"monotone {res.monotone_count}/{res.n_valid} valid instances; median NMSE "
              + ", ".join(f"{lam:g}:{m:.4g}" for lam, m in zip(res.lambda_grid, res.medians)),
              file=sys.stderr)
        return 0
    options = dict(doc.get("task_options", {}))
    if seed is not None and doc.get("task") == "random_mdp":
        options["seed"] = seed
    task = make_task(doc.get("task", "two_state"), **options)
    if not isinstance(task, FiniteTask):
        raise ValidationError("solve needs a finite task")
    grid = doc.get("grid", [k / 10 for k in range(11)])
    rows = []
    for variant in doc.get("schemes", ["constant", "abq"]):
        rows.extend(solution_curve(task.mdp, task.pi, task.mu, task.features, variant, grid))
    _emit(solver_csv(rows), out)
    return 0


def cmd_run(doc, seed, out):
    """One learning run at the first sweep point; writes the full metric series."""
    doc = dict(doc, n_runs=1)
    config = ExperimentConfig.from_dict(doc).with_overrides(seed=seed)
    config = replace(config, params=config.params[:1], alphas=config.alphas[:1], betas=config.betas[:1],
                     out=None, series_out=None)
    result = run_experiment(config)
    run = result.runs[0]
    _emit(series_csv([run]), out)
    status = f"diverged at step {run.diverged_at}" if run.diverged else f"summary {run.summary:.6g}"
    print(f"{config.task}/{config.agent} seed {run.seed}: {status}", file=sys.stderr)
    return 0


def cmd_experiment(doc, seed, out):
    config = ExperimentConfig.from_dict(doc).with_overrides(seed=seed, out=out)
    result = run_experiment(config)
    if not config.out:
        sys.stdout.write(summary_csv(result.rows))
    return 0


def cmd_oracle(doc, seed, out):
    results = run_oracles(doc, seed)
    text = "".join(r.line() + "\n" for r in results)
    _emit(text, out)
    if out:
        sys.stdout.write(text)
    return 0 if all(r.passed for r in results) else 1


COMMANDS = {"solve": cmd_solve, "run": cmd_run, "experiment": cmd_experiment, "oracle": cmd_oracle}


def build_parser():
    parser = argparse.ArgumentParser(prog="abq", description="Multi-step off-policy evaluation lab")
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "solve": "exact solution curves and the random-MDP bias study",
        "run": "a single learning run with its full metric series",
        "experiment": "a seeded sweep with a summary CSV",
        "oracle": "verification checks; nonzero exit on failure",
    }
    for name, text in helps.items():
        p = sub.add_parser(name, help=text)
        p.add_argument("config", help="JSON or TOML config file")
        p.add_argument("--seed", type=int, default=None, help="override the config seed")
        p.add_argument("--out", default=None, help="output path (default: stdout)")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        doc = read_document(args.config)
        return COMMANDS[args.command](doc, args.seed, args.out)
    except (ValidationError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
