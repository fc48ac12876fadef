"""Command-line front end: ``run``, ``propagate``, ``gen`` and ``verify``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import dataclass, field
from pathlib import Path

from .bootstrap import DEFAULT_OBJECTIVES, TRACE_OBJECTIVES, run
from .distributions import PsiKind
from .generate import GenConfig, generate
from .graph import RecordError, format_tsv, read_tsv
from .learners import LearnerKind, SmoothingConfig
from .objectives import optimality_residual
from .propagation import OperatorKind, iteration_bound, neighbor_average_residual, propagate
from .verification import SUITES, run_suite

log = logging.getLogger("yarowsky")

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_USAGE = 2


class CliError(Exception):
    def __init__(self, message: str, code: int = EXIT_FAIL):
        super().__init__(message)
        self.code = code


@dataclass
class RunConfig:
    input: str
    output: str = "-"
    learner: LearnerKind = LearnerKind.DL1
    epsilon: float | None = None
    delta: float | None = None
    max_iter: int | None = None
    objectives: tuple[str, ...] | None = None
    rng_seed: int = 0
    num_labels: int | None = None
    labeling: str | None = None
    warnings: list[str] = field(default_factory=list)

    def smoothing(self) -> SmoothingConfig:
        if self.epsilon is not None and self.learner is not LearnerKind.DL0:
            self.warnings.append(f"--epsilon is ignored by learner {self.learner.value}")
        if self.delta is not None and self.learner is not LearnerKind.DL2S:
            self.warnings.append(f"--delta is ignored by learner {self.learner.value}")
        defaults = SmoothingConfig()
        return SmoothingConfig(
            epsilon=defaults.epsilon if self.epsilon is None else self.epsilon,
            delta=defaults.delta if self.delta is None else self.delta,
        )


def _load(path: str, num_labels: int | None):
    try:
        return read_tsv(path, num_labels)
    except FileNotFoundError:
        raise CliError(f"cannot read {path}: no such file") from None
    except OSError as exc:
        raise CliError(f"cannot read {path}: {exc.strerror}") from None
    except RecordError as exc:
        raise CliError(f"{path}: {exc}", EXIT_USAGE) from None


def _emit(path: str, text: str) -> None:
    if path == "-":
        sys.stdout.write(text)
        sys.stdout.flush()
        return
    try:
        Path(path).write_text(text, encoding="utf-8")
    except OSError as exc:
        raise CliError(f"cannot write {path}: {exc.strerror}") from None


def _sidecar(output: str, explicit: str | None, suffix: str) -> str | None:
    if explicit is not None:
        return explicit
    if output == "-":
        return None
    return str(Path(output).with_suffix(suffix))


def cmd_run(config: RunConfig) -> int:
    graph, seeds, label_names = _load(config.input, config.num_labels)
    smoothing = config.smoothing()
    for w in config.warnings:
        log.warning(w)
    objectives = config.objectives or DEFAULT_OBJECTIVES[config.learner]
    for name in objectives:
        if name not in TRACE_OBJECTIVES:
            raise CliError(f"unknown objective {name!r}; choose from {', '.join(TRACE_OBJECTIVES)}", EXIT_USAGE)
    try:
        result = run(graph, seeds, config.learner, smoothing, objectives, config.max_iter)
    except ValueError as exc:
        raise CliError(str(exc), EXIT_USAGE) from None
    labeling = "".join(
        f"{name}\t{'?' if y < 0 else label_names[y]}\n" for name, y in zip(graph.instance_names, result.state.labels)
    )
    _emit(config.output, result.trace.to_jsonl())
    side = _sidecar(config.output, config.labeling, ".labels.tsv")
    if side:
        _emit(side, labeling)
    log.info("stopped after %d iterations (%s)", len(result.trace), result.trace.stop_reason)
    return EXIT_OK


def cmd_propagate(args) -> int:
    graph, seeds, label_names = _load(args.input, args.num_labels)
    try:
        result = propagate(graph, seeds, args.feature_op, args.instance_op, args.max_iter, args.tol)
    except ValueError as exc:
        raise CliError(str(exc), EXIT_USAGE) from None
    a = result.assignment
    rows = []
    for kind, names, dists, hard in (
        ("feature", graph.feature_names, a.feature_dists, a.feature_hard),
        ("instance", graph.instance_names, a.instance_dists, a.instance_hard),
    ):
        for name, d, y in zip(names, dists, hard):
            probs = ",".join(repr(float(p)) for p in d)
            rows.append(f"{kind}\t{name}\t{'?' if y < 0 else label_names[y]}\t{probs}\n")
    rf, rx = optimality_residual(a, graph, PsiKind.QUADRATIC)
    summary = {
        "iterations": result.iterations,
        "converged": result.converged,
        "iteration_bound": iteration_bound(graph.num_features, graph.num_instances),
        "labeled": a.num_labeled,
        "final_cut": result.cut_reports[-1].cut_size if result.cut_reports else None,
        "residual": {
            "neighbor_average": neighbor_average_residual(graph, a),
            "optimality_feature": rf,
            "optimality_instance": rx,
        },
    }
    _emit(args.output, result.to_jsonl())
    side = _sidecar(args.output, args.assignment, ".assignment.tsv")
    if side:
        _emit(side, "".join(rows))
    sys.stderr.write(json.dumps(summary) + "\n")
    return EXIT_OK


def _edges(value: str):
    if "-" in value:
        lo, hi = value.split("-", 1)
        return int(lo), int(hi)
    return int(value)


def cmd_gen(args) -> int:
    try:
        config = GenConfig(
            num_instances=args.num_instances,
            num_features=args.num_features,
            num_labels=args.num_labels,
            edges_per_instance=_edges(args.edges_per_instance),
            seed_fraction=args.seed_fraction,
            planted_classes=args.planted_classes,
            noise=args.noise,
            rng_seed=args.rng_seed,
        )
    except ValueError as exc:
        raise CliError(str(exc), EXIT_USAGE) from None
    _emit(args.output, format_tsv(generate(config)))
    return EXIT_OK


def cmd_verify(args) -> int:
    try:
        reports = run_suite(args.suite, args.rng_seed)
    except KeyError as exc:
        raise CliError(exc.args[0], EXIT_USAGE) from None
    lines = [r.to_json() + "\n" for r in reports]
    passed = sum(r.passed for r in reports)
    summary = {"suite": args.suite, "checks": len(reports), "passed": passed, "pass": passed == len(reports)}
    _emit(args.output, "".join(lines) + json.dumps(summary) + "\n")
    for r in reports:
        log.info("%s %s (worst margin %s)", "PASS" if r.passed else "FAIL", r.check, r.worst_violation)
    return EXIT_OK if summary["pass"] else EXIT_FAIL


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="yarowsky", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="bootstrap labels with a decision-list learner")
    p.add_argument("--input", required=True)
    p.add_argument("--output", default="-", help="JSON-lines trace ('-' for stdout)")
    p.add_argument("--labeling", help="final labeling TSV (default: <output>.labels.tsv)")
    p.add_argument("--learner", choices=[k.value for k in LearnerKind], default=LearnerKind.DL1.value)
    p.add_argument("--epsilon", type=float)
    p.add_argument("--delta", type=float)
    p.add_argument("--max-iter", type=int)
    p.add_argument("--objectives", help=f"comma separated subset of {','.join(TRACE_OBJECTIVES)}")
    p.add_argument("--num-labels", type=int)
    p.add_argument("--rng-seed", type=int, default=0)

    p = sub.add_parser("propagate", help="majority/average label propagation")
    p.add_argument("--input", required=True)
    p.add_argument("--output", default="-", help="JSON-lines sweep trace ('-' for stdout)")
    p.add_argument("--assignment", help="final assignment TSV (default: <output>.assignment.tsv)")
    p.add_argument("--feature-op", choices=[k.value for k in OperatorKind], default=OperatorKind.MAJORITY.value)
    p.add_argument("--instance-op", choices=[k.value for k in OperatorKind], default=OperatorKind.MAJORITY.value)
    p.add_argument("--max-iter", type=int)
    p.add_argument("--tol", type=float, default=1e-8)
    p.add_argument("--num-labels", type=int)
    p.add_argument("--rng-seed", type=int, default=0)

    p = sub.add_parser("gen", help="generate a planted-class dataset")
    p.add_argument("--num-instances", type=int, default=100)
    p.add_argument("--num-features", type=int, default=40)
    p.add_argument("--num-labels", type=int, default=2)
    p.add_argument("--edges-per-instance", default="2-5", help="count or lo-hi range")
    p.add_argument("--seed-fraction", type=float, default=0.1)
    p.add_argument("--planted-classes", type=int)
    p.add_argument("--noise", type=float, default=0.1)
    p.add_argument("--rng-seed", type=int, default=0)
    p.add_argument("--output", default="-")

    p = sub.add_parser("verify", help="run property-check suites")
    p.add_argument("--suite", default="all", help=f"one of {', '.join([*SUITES, 'all'])}")
    p.add_argument("--rng-seed", type=int, default=0)
    p.add_argument("--output", default="-")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s", stream=sys.stderr)
    try:
        if args.command == "run":
            objectives = tuple(s.strip() for s in args.objectives.split(",") if s.strip()) if args.objectives else None
            return cmd_run(RunConfig(
                input=args.input, output=args.output, learner=LearnerKind(args.learner), epsilon=args.epsilon,
                delta=args.delta, max_iter=args.max_iter, objectives=objectives, rng_seed=args.rng_seed,
                num_labels=args.num_labels, labeling=args.labeling,
            ))
        if args.command == "propagate":
            return cmd_propagate(args)
        if args.command == "gen":
            return cmd_gen(args)
        return cmd_verify(args)
    except CliError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
