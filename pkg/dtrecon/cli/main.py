"""
dtrecon command line

Experiment harness: instance generation, the scores / reconstruct / test /
learn pipelines, the verify and calibrate suites, CSV reporting.

Usage:
    dtrecon scores --n 8 --fn dictator --p 0.5
    dtrecon reconstruct --n 16 --s 8 --eps 0.1 --rho 0.02 --out runs/recon.csv $SMALL
    dtrecon test --n 10 --s 8 --eps 0.05 --delta 0.05 $SMALL
    dtrecon learn --n 8 --s 4 --eps 0.1 --fn random-tree
    dtrecon verify --n 10 --s 8 --rho 0.05 --trials 20
    dtrecon calibrate --n 12 --s 8 --eps 0.05 --trials 20 $SMALL

SMALL stands for a desk-scale ledger such as
    --const c_d=3e-5 --const c_p=30 --const c_tau=4320 --const c_q=0.1 --const c_leaf=0.05
The default ledger is refused (exit 3) once one answer could exceed
reconstruct.max_queries_per_answer queries.

Exit codes: 0 success / accept, 1 reject or failed check, 2 invalid
arguments, 3 unsupported scale or query ceiling, 4 I/O failure.
"""

import argparse
import csv
import logging
import sys
from contextlib import contextmanager
from pathlib import Path
from typing import Iterator, Literal

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError

from dtrecon.core import config as settings
from dtrecon.core.bits import random_words
from dtrecon.core.boolfn import CountingOracle, Point, exact_distance, sampled_distance
from dtrecon.core.bruteforce import (
    OptTable,
    TruthTable,
    exact_ns,
    exact_scores,
    exact_topdown_tree,
)
from dtrecon.core.errors import (
    DTReconError,
    InvalidArgumentError,
    QueryBudgetError,
    TreeParseError,
    UnsupportedScaleError,
)
from dtrecon.core.estimators import estimate_scores
from dtrecon.core.factory import Instance, OracleFactory
from dtrecon.core.learner import DistanceEstimator, learn, learn_parameters
from dtrecon.core.params import Constants, Params, load_constants, parse_overrides
from dtrecon.core.reconstructor import materialize_all, new_reconstructor
from dtrecon.core.tester import tolerant_test
from dtrecon.core.trees import DecisionTree, write_tree
from dtrecon.providers import TreeFunction

logger = logging.getLogger(__name__)


# ============================================================
# CONSTANTS
# ============================================================

EXIT_OK = 0
EXIT_REJECT = 1
EXIT_INVALID = 2
EXIT_SCALE = 3
EXIT_IO = 4

COMMANDS = ("scores", "reconstruct", "test", "learn", "verify", "calibrate")

MAIN_HEADER = [
    "trial", "n", "s", "eps", "delta", "rho",
    "queries_total", "queries_max_per_answer", "distance", "verdict", "seed",
]
SCORES_HEADER = ["trial", "i", "estimate", "exact", "queries", "seed"]

# Harness constants for the verify suite
STRUCTURAL_FACTOR = 5.0
SLACK = 1e-9


# ============================================================
# DATA MODELS
# ============================================================

class ExperimentConfig(BaseModel):
    """Validated CLI configuration (flags layered over experiments.yaml)."""
    model_config = ConfigDict(frozen=True, extra="forbid")

    command: Literal["scores", "reconstruct", "test", "learn", "verify", "calibrate"]
    n: int = Field(ge=1, le=1 << 20)
    s: int = Field(ge=1)
    eps: float = Field(gt=0, lt=1)
    delta: float = Field(gt=0, lt=1)
    rho: float = Field(ge=0, le=1)
    seed: int = Field(ge=0)
    trials: int = Field(ge=1)
    fn: str
    out: str
    p: float = Field(gt=0, lt=1)
    kappa: float | None = None
    c: float | None = None
    overrides: dict[str, float] = Field(default_factory=dict)
    learn_backend: Literal["auto", "exact", "tester"] = "auto"

    def constants(self) -> Constants:
        values = dict(self.overrides)
        if self.kappa is not None:
            values["kappa"] = self.kappa
        if self.c is not None:
            values["c"] = self.c
        return load_constants(**values)


def _format(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


# ============================================================
# SEEDS AND ARTIFACTS
# ============================================================

def trial_seeds(seed: int, trials: int) -> list[int]:
    """Per-trial seeds spawned from the master seed."""
    return [
        int(child.generate_state(1, dtype=np.uint64)[0])
        for child in np.random.SeedSequence(seed).spawn(trials)
    ]


def _split_seed(trial_seed: int) -> tuple[int, int]:
    """(instance seed, algorithm seed) of one trial."""
    instance_seq, run_seq = np.random.SeedSequence(trial_seed).spawn(2)
    return (
        int(instance_seq.generate_state(1, dtype=np.uint64)[0] >> np.uint64(1)),
        int(run_seq.generate_state(1, dtype=np.uint64)[0] >> np.uint64(1)),
    )


@contextmanager
def _csv_writer(out: str) -> Iterator:
    if out == "-":
        yield csv.writer(sys.stdout, lineterminator="\n")
        sys.stdout.flush()
        return
    path = Path(out)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as f:
        yield csv.writer(f, lineterminator="\n")


def _write_trial_tree(cfg: ExperimentConfig, trial: int, tree: DecisionTree) -> None:
    if cfg.out != "-":
        write_tree(f"{cfg.out}.trial{trial}.tree", tree)


def _instance(cfg: ExperimentConfig, seed: int, fn: str | None = None) -> Instance:
    return OracleFactory.create_instance(fn or cfg.fn, cfg.n, s=cfg.s, rho=cfg.rho, seed=seed)


def _main_row(cfg: ExperimentConfig, trial: int, seed: int, **fields) -> list[str]:
    row = {
        "trial": trial, "n": cfg.n, "s": cfg.s, "eps": cfg.eps, "delta": cfg.delta,
        "rho": cfg.rho, "queries_total": None, "queries_max_per_answer": None,
        "distance": None, "verdict": None, "seed": seed,
    }
    row.update(fields)
    return [_format(row[key]) for key in MAIN_HEADER]


def _check_query_ceiling(cfg: ExperimentConfig, constants: Constants, s: int, eps: float) -> Params:
    """Params for (s, eps), refused when one answer could exceed the configured query ceiling."""
    params = Params.create(cfg.n, s, eps, cfg.delta, constants)
    ceiling = int(settings.load_config("experiments")["reconstruct"]["max_queries_per_answer"])
    if params.per_answer_budget > ceiling:
        raise QueryBudgetError(
            f"one answer may need {params.per_answer_budget:.3g} queries (d={params.d}, q={params.q}, "
            f"q_leaf={params.q_leaf}), above the ceiling {ceiling}; "
            f"shrink the ledger with --const (c_d, c_tau, c_q, c_leaf) or raise DTRECON_MAX_QUERIES_PER_ANSWER"
        )
    return params


def _distance(f, tree: DecisionTree, rng: np.random.Generator) -> float:
    g = TreeFunction(f.n, tree)
    if f.n <= settings.limit("exact_max_n"):
        return float(exact_distance(f, g))
    points = int(settings.load_config("experiments")["reconstruct"]["sampled_distance_points"])
    return sampled_distance(f, g, points, rng)


# ============================================================
# PIPELINES
# ============================================================

def run_scores(cfg: ExperimentConfig, writer) -> int:
    """Per-coordinate score estimates (accuracy --eps) next to exact scores."""
    constants = cfg.constants()
    writer.writerow(SCORES_HEADER)
    for trial, seed in enumerate(trial_seeds(cfg.seed, cfg.trials)):
        instance_seed, run_seed = _split_seed(seed)
        instance = _instance(cfg, instance_seed)
        counting = CountingOracle(instance.oracle)
        estimates = estimate_scores(
            counting, cfg.p, cfg.eps, cfg.delta, np.random.default_rng(run_seed), c_q=constants.c_q
        )
        exact = None
        if cfg.n <= settings.limit("exact_max_n"):
            exact = exact_scores(TruthTable.from_oracle(instance.oracle), cfg.p)
        for i in range(cfg.n):
            writer.writerow([
                trial, i + 1, _format(float(estimates[i])),
                "" if exact is None else _format(float(exact[i])),
                counting.count, seed,
            ])
        logger.info(f"[CLI] scores trial {trial}: {counting.count} queries")
    return EXIT_OK


def run_reconstruct(cfg: ExperimentConfig, writer) -> int:
    constants = cfg.constants()
    _check_query_ceiling(cfg, constants, cfg.s, cfg.eps)
    limits = settings.load_config("experiments")["reconstruct"]
    writer.writerow(MAIN_HEADER)
    for trial, seed in enumerate(trial_seeds(cfg.seed, cfg.trials)):
        instance_seed, run_seed = _split_seed(seed)
        instance = _instance(cfg, instance_seed)
        R = new_reconstructor(instance.oracle, cfg.s, cfg.eps, cfg.delta, constants, seed=run_seed)
        rng = np.random.default_rng(run_seed)
        if cfg.n <= int(limits["full_materialize_max_n"]):
            tree = materialize_all(R)
            distance = float(exact_distance(instance.oracle, TreeFunction(cfg.n, tree)))
        else:
            points = random_words(rng, int(limits["queries"]), cfg.n)
            truth = instance.oracle.evaluate(points)
            answers = np.array([R.answer(Point.from_words(row, cfg.n)) for row in points])
            distance = float(np.count_nonzero(truth != answers)) / points.shape[0]
            tree = R.materialize()
        stats = R.query_stats()
        _write_trial_tree(cfg, trial, tree)
        writer.writerow(_main_row(
            cfg, trial, seed, queries_total=stats.total,
            queries_max_per_answer=stats.max_per_answer, distance=distance,
        ))
        logger.info(f"[CLI] reconstruct trial {trial}: distance {distance:.4f}, {stats.total} queries")
    return EXIT_OK


def run_test(cfg: ExperimentConfig, writer) -> int:
    constants = cfg.constants()
    _check_query_ceiling(cfg, constants, cfg.s, cfg.eps)
    writer.writerow(MAIN_HEADER)
    rejected = False
    for trial, seed in enumerate(trial_seeds(cfg.seed, cfg.trials)):
        instance_seed, run_seed = _split_seed(seed)
        instance = _instance(cfg, instance_seed)
        outcome = tolerant_test(
            instance.oracle, cfg.s, cfg.eps, cfg.delta,
            kappa=constants.kappa, constants=constants, seed=run_seed,
        )
        rejected = rejected or not outcome.accepted
        writer.writerow(_main_row(
            cfg, trial, seed, queries_total=outcome.queries,
            queries_max_per_answer=outcome.max_per_answer,
            distance=outcome.mismatch, verdict=outcome.verdict,
        ))
    return EXIT_REJECT if rejected else EXIT_OK


def run_learn(cfg: ExperimentConfig, writer) -> int:
    constants = cfg.constants()
    backend = cfg.learn_backend
    if backend == "auto":
        backend = "exact" if cfg.n <= settings.limit("opt_max_n") else "tester"
    if backend == "tester" and cfg.s >= 2:
        _, gamma = learn_parameters(cfg.s, cfg.eps, constants.c)
        _check_query_ceiling(cfg, constants, cfg.s, gamma / constants.c)
    writer.writerow(MAIN_HEADER)
    for trial, seed in enumerate(trial_seeds(cfg.seed, cfg.trials)):
        instance_seed, run_seed = _split_seed(seed)
        instance = _instance(cfg, instance_seed)
        counting = CountingOracle(instance.oracle)
        estimator = DistanceEstimator(
            backend, c=cfg.c, delta=cfg.delta, kappa=constants.kappa,
            constants=constants, seed=run_seed,
        )
        tree = learn(counting, cfg.s, cfg.eps, estimator)
        distance = _distance(instance.oracle, tree, np.random.default_rng(run_seed))
        _write_trial_tree(cfg, trial, tree)
        writer.writerow(_main_row(
            cfg, trial, seed, queries_total=counting.count,
            distance=distance, verdict=f"calls={estimator.calls}",
        ))
    return EXIT_OK


def verify_instance(instance: Instance, cfg: ExperimentConfig, constants: Constants) -> tuple[bool, float]:
    """
    Exact checks on one instance: the NS upper bound, closeness of the
    exact top-down tree, and monotonicity of that tree's distance in depth.

    Returns (all checks passed, distance of the depth-d top-down tree).
    """
    f = instance.oracle
    t = TruthTable.from_oracle(f)
    params = Params.create(cfg.n, max(cfg.s, 2), cfg.eps, cfg.delta, constants)
    p, d = params.p, params.d

    if cfg.n <= settings.limit("opt_max_n") and cfg.s <= settings.limit("opt_max_s"):
        opt = OptTable(t, cfg.s).opt()
    elif instance.tree is not None:
        opt = float(exact_distance(f, TreeFunction(cfg.n, instance.tree)))
    else:
        raise InvalidArgumentError("verify needs a random-tree instance or n within the opt_s limit")

    passed = True
    if instance.tree is not None:
        tree_distance = float(exact_distance(f, TreeFunction(cfg.n, instance.tree)))
        ns = exact_ns(t, p)
        bound = p * np.log2(max(cfg.s, 1)) + 2 * tree_distance
        if ns > bound + SLACK:
            logger.warning(f"[CLI] NS bound violated: {ns:.6f} > {bound:.6f}")
            passed = False

    distances = []
    for depth in (d, min(d + 1, cfg.n)):
        tree = exact_topdown_tree(t, depth, p)
        distances.append(float(exact_distance(f, TreeFunction(cfg.n, tree))))
    if distances[0] > STRUCTURAL_FACTOR * opt + cfg.eps + SLACK:
        logger.warning(f"[CLI] top-down distance {distances[0]:.4f} exceeds {STRUCTURAL_FACTOR} * {opt:.4f} + eps")
        passed = False
    if distances[1] > distances[0] + SLACK:
        logger.warning(f"[CLI] top-down distance increased with depth: {distances}")
        passed = False
    return passed, distances[0]


def run_verify(cfg: ExperimentConfig, writer) -> int:
    constants = cfg.constants()
    writer.writerow(MAIN_HEADER)
    failed = False
    for trial, seed in enumerate(trial_seeds(cfg.seed, cfg.trials)):
        instance_seed, _ = _split_seed(seed)
        passed, distance = verify_instance(_instance(cfg, instance_seed), cfg, constants)
        failed = failed or not passed
        writer.writerow(_main_row(
            cfg, trial, seed, distance=distance, verdict="pass" if passed else "fail",
        ))
    return EXIT_REJECT if failed else EXIT_OK


def run_calibrate(cfg: ExperimentConfig, writer) -> int:
    """
    Tester mismatch on a realizable instance and on the n-variable parity,
    per trial. The spread of mismatch / eps between the two brackets the
    usable kappa.
    """
    constants = cfg.constants()
    _check_query_ceiling(cfg, constants, max(cfg.s, 2), cfg.eps)
    writer.writerow(MAIN_HEADER)
    realizable, parity = [], []
    for trial, seed in enumerate(trial_seeds(cfg.seed, cfg.trials)):
        instance_seed, run_seed = _split_seed(seed)
        for label, fn, ratios in (
            ("realizable", "random-tree", realizable),
            ("parity", f"parity-{cfg.n}", parity),
        ):
            instance = _instance(cfg, instance_seed, fn=fn)
            outcome = tolerant_test(
                instance.oracle, max(cfg.s, 2), cfg.eps, cfg.delta,
                kappa=constants.kappa, constants=constants, seed=run_seed,
            )
            ratios.append(outcome.mismatch / cfg.eps)
            writer.writerow(_main_row(
                cfg, trial, seed, queries_total=outcome.queries,
                queries_max_per_answer=outcome.max_per_answer,
                distance=outcome.mismatch, verdict=f"{label}:{outcome.verdict}",
            ))
    logger.info(
        f"[CLI] calibrate: realizable mismatch/eps <= {max(realizable):.3f}, "
        f"parity mismatch/eps >= {min(parity):.3f}, kappa = {constants.kappa}"
    )
    return EXIT_OK


PIPELINES = {
    "scores": run_scores,
    "reconstruct": run_reconstruct,
    "test": run_test,
    "learn": run_learn,
    "verify": run_verify,
    "calibrate": run_calibrate,
}


def run(cfg: ExperimentConfig) -> int:
    """Execute one subcommand deterministically under cfg.seed; returns the exit code."""
    logger.info(f"[CLI] {cfg.command} n={cfg.n} s={cfg.s} eps={cfg.eps} seed={cfg.seed} trials={cfg.trials}")
    with _csv_writer(cfg.out) as writer:
        return PIPELINES[cfg.command](cfg, writer)


# ============================================================
# CLI INTERFACE
# ============================================================

def configure_logging(level: str | None = None) -> None:
    """Attach one stderr handler to the dtrecon logger."""
    settings_logging = settings.load_config("experiments")["logging"]
    root = logging.getLogger("dtrecon")
    for handler in list(root.handlers):
        root.removeHandler(handler)
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter(settings_logging["format"]))
    root.addHandler(handler)
    root.setLevel((level or settings_logging["level"]).upper())


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--n", type=int, help="Dimension")
    common.add_argument("--s", type=int, help="Tree size budget")
    common.add_argument("--eps", type=float, help="Error target (score accuracy for `scores`)")
    common.add_argument("--delta", type=float, help="Failure probability")
    common.add_argument("--rho", type=float, help="Corruption rate")
    common.add_argument("--seed", type=int, help="Master seed (env DTRECON_SEED)")
    common.add_argument("--trials", type=int, help="Number of trials")
    common.add_argument("--fn", help="constant, dictator, parity-<k>, majority-<k>, random-tree, random-table")
    common.add_argument("--out", help="CSV path, '-' for stdout")
    common.add_argument("--kappa", type=float, help="Tester reject multiplier")
    common.add_argument("--c", type=float, help="Tester soundness constant for learning")
    common.add_argument(
        "--const", action="append", default=[], metavar="NAME=VALUE",
        help="Override a ledger constant (repeatable)",
    )

    parser = argparse.ArgumentParser(
        prog="dtrecon",
        description="Decision-tree reconstruction, tolerant testing and proper learning",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for command in COMMANDS:
        child = sub.add_parser(command, parents=[common])
        if command == "scores":
            child.add_argument("--p", type=float, help="Noise rate")
    return parser


def config_from_args(args: argparse.Namespace) -> ExperimentConfig:
    experiments = settings.load_config("experiments")
    values = dict(experiments["defaults"])
    for key in ("n", "s", "eps", "delta", "rho", "seed", "trials", "fn", "out", "kappa", "c"):
        if getattr(args, key, None) is not None:
            values[key] = getattr(args, key)
    if getattr(args, "p", None) is not None:
        values["p"] = args.p
    values["overrides"] = parse_overrides(args.const)
    values["learn_backend"] = experiments["learner"]["backend"]
    try:
        return ExperimentConfig(command=args.command, **values)
    except ValidationError as e:
        raise InvalidArgumentError(f"invalid configuration: {e}") from e


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_INVALID if e.code else EXIT_OK
    configure_logging()
    try:
        return run(config_from_args(args))
    except (InvalidArgumentError, TreeParseError) as e:
        code, message = EXIT_INVALID, str(e)
    except (UnsupportedScaleError, QueryBudgetError) as e:
        code, message = EXIT_SCALE, str(e)
    except OSError as e:
        code, message = EXIT_IO, str(e)
    except DTReconError as e:
        code, message = EXIT_INVALID, str(e)
    logger.error(f"[CLI] {message}")
    print(f"dtrecon: {message}", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
