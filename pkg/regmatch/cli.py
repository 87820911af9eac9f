"""Command-line front end: generators, matchers, decomposition and benchmarks.

Exit codes: 0 success, 1 verification or input failure, 2 usage error,
3 bound-check failure.
"""

import argparse
import contextlib
import csv
import logging
import os
import sys
from pathlib import Path
from typing import Iterator, Optional, Sequence, TextIO

from regmatch import __version__
from regmatch.adversary import make_prober, replay_transcript, run_game
from regmatch.bench import (
    ALGORITHMS,
    build_cells,
    check_bounds,
    hitting_experiment,
    match_graph,
    parse_grid,
    run_bench,
    to_record,
    write_csv,
    write_game_csv,
)
from regmatch.bvn import (
    decompose,
    format_decomposition,
    format_matrix,
    gen_convex_permutations,
    gen_integer_regular,
    read_matrix,
    verify_decomposition,
)
from regmatch.config import get_settings
from regmatch.exceptions import (
    BoundCheckError,
    GraphFormatError,
    RegmatchError,
    VerificationError,
)
from regmatch.graph import (
    format_canonical,
    format_graph,
    format_matching,
    gen_canonical,
    gen_union_permutations,
    read_canonical,
    read_graph,
    read_matching,
    validate,
    validate_canonical,
    verify_matching,
)
from regmatch.models import BENCH_FIELDS

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2
EXIT_BOUND = 3

LOG_LEVEL_ENV = "REGMATCH_LOG_LEVEL"

TRANSCRIPT_FIELDS = [
    "prober",
    "d",
    "step",
    "u_side",
    "u",
    "v_side",
    "v",
    "mode",
    "hidden",
]


class UsageError(Exception):
    """Raised for flag combinations argparse cannot express."""


@contextlib.contextmanager
def _output(path: Optional[str]) -> Iterator[TextIO]:
    if path is None or path == "-":
        yield sys.stdout
    else:
        with open(path, "w", newline="") as stream:
            yield stream


def _setup_logging(level: str) -> None:
    logging.basicConfig(
        level=level.upper(),
        stream=sys.stderr,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )


def cmd_gen(args: argparse.Namespace) -> int:
    """Write a regular graph, a canonical instance or a matrix."""
    if args.kind == "regular":
        if args.n is None or args.d is None:
            raise UsageError("--kind regular needs --n and --d")
        graph = gen_union_permutations(
            args.n, args.d, seed=args.seed, simple=args.simple
        )
        text = format_graph(graph)
    elif args.kind == "canonical":
        if args.d is None:
            raise UsageError("--kind canonical needs --d")
        canonical = gen_canonical(args.d, seed=args.seed)
        logger.info("hidden matching: %s", canonical.hidden)
        text = format_canonical(canonical)
    else:
        if args.n is None:
            raise UsageError("--kind ds needs --n")
        if (args.perms is None) == (args.integer is None):
            raise UsageError(
                "--kind ds needs exactly one of --perms, --integer"
            )
        if args.integer is not None:
            matrix = gen_integer_regular(args.n, args.integer, seed=args.seed)
        else:
            matrix = gen_convex_permutations(args.n, args.perms, seed=args.seed)
        text = format_matrix(matrix)
    with _output(args.out) as stream:
        stream.write(text)
    return EXIT_OK


def cmd_match(args: argparse.Namespace) -> int:
    """Match a graph file, write the matching and print one CSV record."""
    graph = read_graph(args.graph)
    matching, stats, wall = match_graph(graph, args.algo, args.seed)
    if args.out:
        Path(args.out).write_text(format_matching(matching))
    record = to_record(args.algo, graph, args.seed, stats, wall)
    writer = csv.DictWriter(sys.stdout, fieldnames=BENCH_FIELDS)
    writer.writeheader()
    writer.writerow(record.to_row())
    return EXIT_OK


def cmd_bvn(args: argparse.Namespace) -> int:
    """Decompose a matrix file and check the reconstruction before writing."""
    matrix = read_matrix(args.matrix)
    original = matrix.to_dense()
    k = None if args.k == "full" else int(args.k)
    if k is not None and k < 1:
        raise UsageError("--k must be positive or 'full'")
    decomposition = decompose(matrix, k=k, rng=args.seed)
    report = verify_decomposition(decomposition, original, matrix.to_dense())
    if not report.ok:
        raise VerificationError(report.message)
    with _output(args.out) as stream:
        stream.write(format_decomposition(decomposition))
    logger.info(
        "%d terms, coefficient sum %s",
        len(decomposition.terms),
        decomposition.coefficient_sum,
    )
    return EXIT_OK


def cmd_bench(args: argparse.Namespace) -> int:
    """Run a benchmark grid and stream its CSV."""
    algos = [a.strip() for a in args.algo.split(",")]
    for algo in algos:
        if algo not in ALGORITHMS:
            raise UsageError(f"unknown algorithm {algo!r}")
    cells = build_cells(
        algos,
        [int(n) for n in parse_grid(args.n)],
        parse_grid(args.d, allow_sqrt=True),
        args.seeds,
        base_seed=args.seed,
        simple=args.simple,
    )
    records = run_bench(cells, jobs=args.jobs, progress=args.progress)
    with _output(args.out) as stream:
        write_csv(records, stream)
    if args.check_bounds:
        breaches = check_bounds(records)
        if breaches:
            raise BoundCheckError(
                "; ".join(
                    f"{s.algo} n={s.n} d={s.d}: {s.mean_steps:.1f} > "
                    f"{s.bound:.1f}"
                    for s in breaches
                )
            )
    return EXIT_OK


def cmd_game(args: argparse.Namespace) -> int:
    """Play the probe game for each prober and degree."""
    probers = [p.strip() for p in args.prober.split(",")]
    degrees = [int(d) for d in parse_grid(args.d)]
    results = []
    for name in probers:
        make_prober(name)  # unknown ids fail before any game runs
        for d in degrees:
            result = run_game(make_prober(name), d)
            assert result.committed is not None
            report = replay_transcript(result.transcript, result.committed)
            if not report.ok:
                raise VerificationError(report.message)
            results.append(result)
    with _output(args.out) as stream:
        write_game_csv((r.to_record() for r in results), stream)
    if args.transcript:
        with open(args.transcript, "w", newline="") as stream:
            writer = csv.writer(stream)
            writer.writerow(TRANSCRIPT_FIELDS)
            for result in results:
                for probe in result.transcript:
                    row = probe.model_dump()
                    writer.writerow(
                        [result.prober, result.d]
                        + [row[name] for name in TRANSCRIPT_FIELDS[2:]]
                    )
    return EXIT_OK


def cmd_hitting(args: argparse.Namespace) -> int:
    """Report the mean walk length to Sink against 2 + n/k."""
    record = hitting_experiment(
        args.n, args.d, args.matched, args.trials, seed=args.seed
    )
    writer = csv.writer(sys.stdout)
    writer.writerow(["n", "d", "k", "trials", "mean_steps", "bound"])
    writer.writerow(
        [
            record.n,
            record.d,
            record.k,
            record.trials,
            f"{record.mean_steps:.4f}",
            f"{record.bound:.4f}",
        ]
    )
    return EXIT_OK


def cmd_verify(args: argparse.Namespace) -> int:
    """Validate a graph file and, optionally, a matching against it."""
    graph = read_graph(args.graph, multigraph=not args.simple)
    report = validate(graph)
    if report.ok and args.canonical:
        canonical = read_canonical(args.graph, multigraph=not args.simple)
        report = validate_canonical(canonical)
    if not report.ok:
        print(f"graph: {report.invariant}: {report.message}", file=sys.stderr)
        return EXIT_FAILURE
    if args.matching:
        matching = read_matching(args.matching, graph)
        report = verify_matching(graph, matching, require_perfect=True)
        if not report.ok:
            print(
                f"matching: {report.invariant}: {report.message}",
                file=sys.stderr,
            )
            return EXIT_FAILURE
    print("ok")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    settings = get_settings()
    parser = argparse.ArgumentParser(
        prog="regmatch",
        description="Perfect matchings in regular bipartite graphs.",
    )
    parser.add_argument(
        "--version", action="version", version=f"%(prog)s {__version__}"
    )
    parser.add_argument(
        "--log-level",
        default=os.getenv(LOG_LEVEL_ENV, "WARNING"),
        choices=["DEBUG", "INFO", "WARNING", "ERROR"],
        type=str.upper,
    )
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen", help="generate an input file")
    gen.add_argument(
        "--kind", choices=["regular", "canonical", "ds"], default="regular"
    )
    gen.add_argument("--n", type=int)
    gen.add_argument("--d", type=int)
    gen.add_argument("--seed", type=int, default=settings.default_seed)
    gen.add_argument("--simple", action="store_true")
    gen.add_argument("--perms", type=int)
    gen.add_argument("--integer", type=int, metavar="D")
    gen.add_argument("--out")
    gen.set_defaults(handler=cmd_gen)

    match = sub.add_parser("match", help="find a perfect matching")
    match.add_argument("graph")
    match.add_argument("--algo", choices=ALGORITHMS, default="walk")
    match.add_argument("--seed", type=int, default=settings.default_seed)
    match.add_argument("--out")
    match.set_defaults(handler=cmd_match)

    bvn = sub.add_parser("bvn", help="decompose a doubly stochastic matrix")
    bvn.add_argument("matrix")
    bvn.add_argument("--k", default="full")
    bvn.add_argument("--seed", type=int, default=settings.default_seed)
    bvn.add_argument("--out")
    bvn.set_defaults(handler=cmd_bvn)

    bench = sub.add_parser("bench", help="run a benchmark grid")
    bench.add_argument("--algo", default="walk")
    bench.add_argument("--n", required=True)
    bench.add_argument("--d", required=True)
    bench.add_argument("--seeds", type=int, default=1)
    bench.add_argument("--seed", type=int, default=settings.default_seed)
    bench.add_argument("--simple", action="store_true")
    bench.add_argument("--check-bounds", action="store_true")
    bench.add_argument("--jobs", type=int, default=1)
    bench.add_argument("--progress", action="store_true")
    bench.add_argument("--out")
    bench.set_defaults(handler=cmd_bench)

    game = sub.add_parser("game", help="play the probe game")
    game.add_argument("--prober", default="greedy")
    game.add_argument("--d", required=True)
    game.add_argument("--transcript")
    game.add_argument("--out")
    game.set_defaults(handler=cmd_game)

    hitting = sub.add_parser("hitting", help="measure walk hitting times")
    hitting.add_argument("--n", type=int, required=True)
    hitting.add_argument("--d", type=int, required=True)
    hitting.add_argument("--matched", type=int, default=0)
    hitting.add_argument("--trials", type=int, default=10_000)
    hitting.add_argument("--seed", type=int, default=settings.default_seed)
    hitting.set_defaults(handler=cmd_hitting)

    verify = sub.add_parser("verify", help="validate graph and matching files")
    verify.add_argument("graph")
    verify.add_argument("--matching")
    verify.add_argument("--simple", action="store_true")
    verify.add_argument(
        "--canonical",
        action="store_true",
        help="also check the canonical family and its M' comment block",
    )
    verify.set_defaults(handler=cmd_verify)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Run the CLI and return its exit code."""
    parser = build_parser()
    args = parser.parse_args(argv)
    _setup_logging(args.log_level)
    try:
        return args.handler(args)
    except BoundCheckError as exc:
        print(f"bound check failed: {exc}", file=sys.stderr)
        return EXIT_BOUND
    except (UsageError, GraphFormatError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except RegmatchError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAILURE

