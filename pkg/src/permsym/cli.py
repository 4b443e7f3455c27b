"""``permsym`` command line.

Exit codes: 0 success or equivalent, 1 checked and negative, 2 usage, parse
or shape error.
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import io
from .network import Dataset, InvalidInputError, LayerWeights, loss, predict
from .symmetry import (
    apply_permutation,
    canonicalize,
    deviation,
    equivalent,
    neuron_switch,
    orbit_size,
    random_permutation,
)
from .training import TrainConfig, TrainingDivergedError, equivariance_experiment, sgd_train

EXIT_OK, EXIT_NEGATIVE, EXIT_ERROR = 0, 1, 2


class CommandError(Exception):
    pass


def _emit(text: str, out) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _widths(text: str) -> list:
    try:
        widths = [int(t) for t in text.replace(" ", "").split(",") if t]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")
    if not widths:
        raise argparse.ArgumentTypeError("at least one width is required")
    return widths


def _permutation_for(net, args):
    if getattr(args, "perm", None):
        return io.load_permutation(args.perm)
    if args.seed is None:
        raise CommandError("either --perm or --seed is required")
    return random_permutation(net.hidden_widths, args.seed)


def cmd_count(args) -> int:
    count = orbit_size(args.widths)
    print(count.exact)
    print(f"digits: {count.digits}")
    print(f"log10: {count.log10:.6f}")
    if args.out:
        Path(args.out).write_text(io.dumps_report({"widths": args.widths, "orbit": io.orbit_to_dict(count)}))
    return EXIT_OK


def cmd_permute(args) -> int:
    net = io.load_model(args.model)
    p = _permutation_for(net, args)
    _emit(io.dumps_model(apply_permutation(net, p)), args.out)
    if args.perm_out:
        io.save_permutation(p, args.perm_out)
    return EXIT_OK


def cmd_switch(args) -> int:
    net = io.load_model(args.model)
    _emit(io.dumps_model(neuron_switch(net, args.layer, args.i, args.j)), args.out)
    return EXIT_OK


def cmd_canon(args) -> int:
    net = io.load_model(args.model)
    canon, p = canonicalize(net)
    _emit(io.dumps_model(canon), args.out)
    if args.perm_out:
        io.save_permutation(p, args.perm_out)
    return EXIT_OK


def cmd_equiv(args) -> int:
    a = io.load_model(args.model_a)
    b = io.load_model(args.model_b)
    verdict = equivalent(a, b, args.tol, args.mode)
    report = {
        "command": "equiv",
        "mode": args.mode,
        "tol": args.tol,
        "equivalent": verdict.equivalent,
        "max_deviation": verdict.max_deviation,
        "witness": None if verdict.witness is None else io.permutation_to_dict(verdict.witness),
        "tie_search": verdict.tie_search,
        "orbit": io.orbit_to_dict(orbit_size(a.hidden_widths)) if a.hidden_widths else None,
    }
    _emit(io.dumps_report(report), args.out)
    return EXIT_OK if verdict.equivalent else EXIT_NEGATIVE


def cmd_verify(args) -> int:
    net = io.load_model(args.model)
    if args.samples < 1:
        raise CommandError("--samples must be at least 1")
    rng = np.random.default_rng(args.seed)
    arch = net.architecture
    data = Dataset(rng.normal(size=(args.samples, arch[0])),
                   rng.normal(size=(args.samples, arch[-1])))
    p = random_permutation(net.hidden_widths, rng)
    sibling = apply_permutation(net, p)
    if args.inject_fault:
        layers = list(sibling.layers)
        w = layers[-1].weights.copy()
        w[0, 0] += 1.0
        layers[-1] = LayerWeights(w, layers[-1].bias)
        sibling = sibling.replace_layers(layers)
    pred_dev = deviation(predict(net, data.inputs), predict(sibling, data.inputs))
    loss_dev = deviation(loss(net, data), loss(sibling, data))
    passed = pred_dev <= args.tol and loss_dev <= args.tol
    report = {
        "command": "verify",
        "samples": args.samples,
        "seed": args.seed,
        "tol": args.tol,
        "passed": passed,
        "permutation": io.permutation_to_dict(p),
        "max_prediction_deviation": pred_dev,
        "loss_deviation": loss_dev,
    }
    _emit(io.dumps_report(report), args.out)
    return EXIT_OK if passed else EXIT_NEGATIVE


def _train_setup(args):
    net = io.load_model(args.model)
    arch = net.architecture
    data = io.load_dataset(args.data, arch[0], arch[-1])
    cfg = TrainConfig(learning_rate=args.lr, steps=args.steps,
                      seed=0 if args.seed is None else args.seed)
    return net, data, cfg


def cmd_train(args) -> int:
    net, data, cfg = _train_setup(args)
    trajectory = sgd_train(net, data, cfg)
    losses = [loss(n, data) for n in trajectory]
    report = {
        "command": "train",
        "learning_rate": cfg.learning_rate,
        "steps": cfg.steps,
        "losses": losses,
        "final_loss": losses[-1],
        "final_model": io.model_to_dict(trajectory[-1]),
    }
    _emit(io.dumps_report(report), args.out)
    if args.model_out:
        io.save_model(trajectory[-1], args.model_out)
    return EXIT_OK


def cmd_equivariance(args) -> int:
    net, data, cfg = _train_setup(args)
    p = _permutation_for(net, args)
    result = equivariance_experiment(net, p, data, cfg)
    passed = (result.max_gradient_deviation <= args.tol
              and result.max_trajectory_deviation <= args.traj_tol)
    report = {
        "command": "equivariance",
        "learning_rate": cfg.learning_rate,
        "steps": cfg.steps,
        "permutation": io.permutation_to_dict(p),
        "max_gradient_deviation": result.max_gradient_deviation,
        "max_trajectory_deviation": result.max_trajectory_deviation,
        "steps_compared": result.steps_compared,
        "tol": args.tol,
        "trajectory_tol": args.traj_tol,
        "passed": passed,
    }
    _emit(io.dumps_report(report), args.out)
    return EXIT_OK if passed else EXIT_NEGATIVE


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="permsym", description="Hidden-neuron permutation symmetry of feed-forward networks.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("count", help="number of equivalent weight sets for given hidden widths")
    p.add_argument("--widths", type=_widths, required=True, help="comma-separated hidden widths")
    p.add_argument("--out", help="also write a JSON report here")
    p.set_defaults(func=cmd_count)

    p = sub.add_parser("permute", help="relabel hidden neurons of a model")
    p.add_argument("model")
    p.add_argument("--perm", help="permutation JSON (one-based)")
    p.add_argument("--seed", type=int, help="draw a random permutation instead")
    p.add_argument("--perm-out", help="write the permutation used here")
    p.add_argument("--out", help="output model (default: stdout)")
    p.set_defaults(func=cmd_permute)

    p = sub.add_parser("switch", help="swap two neurons of one hidden layer")
    p.add_argument("model")
    p.add_argument("--layer", type=int, required=True, help="hidden layer, 1..L-1")
    p.add_argument("-i", type=int, required=True)
    p.add_argument("-j", type=int, required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_switch)

    p = sub.add_parser("canon", help="write the canonical representative of a model")
    p.add_argument("model")
    p.add_argument("--out")
    p.add_argument("--perm-out", help="write the permutation taking the input to canonical form")
    p.set_defaults(func=cmd_canon)

    p = sub.add_parser("equiv", help="decide equivalence up to hidden-neuron relabeling")
    p.add_argument("model_a")
    p.add_argument("model_b")
    p.add_argument("--tol", type=float, default=1e-9)
    p.add_argument("--mode", choices=["canonical", "brute-force"], default="canonical")
    p.add_argument("--out", help="report path (default: stdout)")
    p.set_defaults(func=cmd_equiv)

    p = sub.add_parser("verify", help="check prediction and loss invariance on random inputs")
    p.add_argument("model")
    p.add_argument("--samples", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tol", type=float, default=1e-9)
    p.add_argument("--inject-fault", action="store_true", help=argparse.SUPPRESS)
    p.add_argument("--out")
    p.set_defaults(func=cmd_verify)

    for name, func, doc in (("train", cmd_train, "full-batch gradient descent"),
                            ("equivariance", cmd_equivariance,
                             "train from a model and its relabeling and compare")):
        p = sub.add_parser(name, help=doc)
        p.add_argument("model")
        p.add_argument("data", help="CSV: input columns then target columns")
        p.add_argument("--lr", type=float, default=0.05)
        p.add_argument("--steps", type=int, default=50)
        p.add_argument("--seed", type=int)
        p.add_argument("--out")
        if name == "train":
            p.add_argument("--model-out")
        else:
            p.add_argument("--perm")
            p.add_argument("--tol", type=float, default=1e-9, help="gradient tolerance")
            p.add_argument("--traj-tol", type=float, default=1e-6, help="trajectory tolerance")
        p.set_defaults(func=func)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (InvalidInputError, CommandError, TrainingDivergedError) as exc:
        print(f"permsym {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
