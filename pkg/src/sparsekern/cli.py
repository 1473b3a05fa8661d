"""Command-line surface: fit, eval, and experiment subcommands.

Exit codes: 0 on success, 2 on usage or configuration errors, 3 on
numeric failure (diverged solver).
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import datasets, extraction, losses, multiclass, solver
from .dual_field import AlphaField, ProblemVariant, Quadrature
from .errors import ConfigError, DivergenceError, DomainError
from .experiments import EXPERIMENT_IDS, run_experiment
from .kernels import KernelSpec
from .losses import Loss
from .models import DiscreteModel
from .solver import SolverConfig

LOSS_NAMES = {"quad": "quadratic_eps", "abs": "absolute_eps", "hinge": "hinge_eps"}


def _parse_variant(text: str) -> ProblemVariant:
    if text == "full":
        return ProblemVariant.full()
    if text.startswith("fixed-width="):
        return ProblemVariant.fixed_width(float(text.split("=", 1)[1]))
    if text.startswith("fixed-centers="):
        path = text.split("=", 1)[1]
        centers = np.loadtxt(path, delimiter=",", ndmin=2)
        return ProblemVariant.fixed_centers(centers)
    raise ConfigError(
        f"bad --variant {text!r}; use full, fixed-width=W, or fixed-centers=FILE"
    )


def _load_config(path, args, data) -> tuple[SolverConfig, KernelSpec, Loss]:
    doc = {}
    if path is not None:
        with open(path) as fh:
            doc = json.load(fh)
    solver_doc = dict(doc.get("solver", {}))
    overrides = {
        "gamma": args.gamma,
        "eta_lambda": args.eta_lambda,
        "eta_mu": args.eta_mu,
        "iters": args.iters,
        "batch": args.batch,
        "seed": args.seed,
    }
    for key, val in overrides.items():
        if val is not None:
            solver_doc[key] = val
    if args.integrator is not None:
        solver_doc["integrator"] = {"mc": "monte_carlo", "quadrature": "quadrature"}[args.integrator]
    for key in ("gamma", "eta_lambda", "eta_mu", "iters"):
        if key not in solver_doc:
            raise ConfigError(f"missing solver setting {key!r} (flag or config file)")
    config = SolverConfig.from_dict(solver_doc)

    if "kernel" in doc:
        kernel = KernelSpec.from_dict(doc["kernel"])
    else:
        kernel = KernelSpec(w_lo=0.1, w_hi=1.0, box=data.box)

    if "loss" in doc:
        loss = Loss.from_dict(doc["loss"])
        if args.loss is not None and LOSS_NAMES[args.loss] != loss.kind:
            loss = losses.default_loss(LOSS_NAMES[args.loss], data.y, args.epsilon)
        elif args.epsilon is not None:
            loss = Loss(kind=loss.kind, epsilon=args.epsilon, clamp_radius=loss.clamp_radius)
    else:
        kind = LOSS_NAMES[args.loss or "quad"]
        loss = losses.default_loss(kind, data.y, args.epsilon)
    return config, kernel, loss


def cmd_fit(args) -> int:
    data = datasets.load_csv(args.data)
    config, kernel, loss = _load_config(args.config, args, data)
    variant = _parse_variant(args.variant)
    out = args.out
    trace_path = out + ".trace.csv"
    state, field = solver.fit(data, kernel, loss, variant, config, trace_path=trace_path)
    model = extraction.extract_model(field, data)
    model.save(out)
    field.save(out + ".field.json")

    quad = Quadrature(config.center_nodes, config.width_nodes)
    yhat = field.predict_batch(data.X, quad)
    violation = float(np.max(losses.value(loss, yhat, data.y)))
    print(f"terms: {model.n_terms}")
    print(f"threshold: {field.threshold}")
    print(f"max_constraint_violation: {violation!r}")
    return 0


def cmd_eval(args) -> int:
    data = datasets.load_csv(args.data)
    with open(args.model) as fh:
        doc = json.load(fh)
    if args.metric == "mse":
        if "terms" not in doc:
            raise ConfigError("mse metric expects a discrete model file")
        model = DiscreteModel.from_dict(doc, dim=data.dim)
        resid = data.y - model.predict_batch(data.X)
        print(repr(float(np.mean(resid**2))))
        return 0
    if "pairwise" not in doc:
        raise ConfigError("accuracy metric expects a one-vs-one ensemble file")
    ensemble = multiclass.OvoEnsemble.from_dict(doc)
    pred = multiclass.ovo_predict_batch(ensemble, data.X)
    print(repr(float(np.mean(pred == data.y))))
    return 0


def cmd_experiment(args) -> int:
    result = run_experiment(args.id, scale=args.scale, seed=args.seed or 0, outdir=args.outdir)
    for key, val in result.summary.items():
        print(f"{key}: {val}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sparsekern")
    sub = parser.add_subparsers(dest="command", required=True)

    p_fit = sub.add_parser("fit", help="fit a sparse kernel model to a CSV dataset")
    p_fit.add_argument("data", help="training data CSV (x1,...,xp,y)")
    p_fit.add_argument("--config", help="JSON with solver/kernel/loss sections")
    p_fit.add_argument("--variant", default="full", help="full | fixed-width=W | fixed-centers=FILE")
    p_fit.add_argument("--out", required=True, help="output model JSON path")
    p_fit.add_argument("--gamma", type=float)
    p_fit.add_argument("--eta-lambda", dest="eta_lambda", type=float)
    p_fit.add_argument("--eta-mu", dest="eta_mu", type=float)
    p_fit.add_argument("--iters", type=int)
    p_fit.add_argument("--batch", type=int)
    p_fit.add_argument("--seed", type=int)
    p_fit.add_argument("--loss", choices=sorted(LOSS_NAMES))
    p_fit.add_argument("--epsilon", type=float)
    p_fit.add_argument("--integrator", choices=["quadrature", "mc"])
    p_fit.set_defaults(func=cmd_fit)

    p_eval = sub.add_parser("eval", help="evaluate a saved model on a CSV dataset")
    p_eval.add_argument("model", help="model JSON (discrete model or ovo ensemble)")
    p_eval.add_argument("data", help="data CSV")
    p_eval.add_argument("--metric", choices=["mse", "accuracy"], default="mse")
    p_eval.set_defaults(func=cmd_eval)

    p_exp = sub.add_parser("experiment", help="run a reproduction experiment")
    p_exp.add_argument("id", choices=EXPERIMENT_IDS)
    p_exp.add_argument("--scale", choices=["desk", "paper"], default="desk")
    p_exp.add_argument("--seed", type=int, default=0)
    p_exp.add_argument("--outdir", default=".")
    p_exp.set_defaults(func=cmd_experiment)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except (ConfigError, DomainError, FileNotFoundError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except DivergenceError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return 3


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
