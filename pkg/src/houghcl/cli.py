"""Command-line entry point: ``houghcl {bench,match,losscheck,gradcheck}``.

Exit codes: 0 success, 1 usage, 2 I/O or malformed file, 3 validation or
check failure.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .bench import BenchSettings, run_experiment, scenario_grid
from .errors import DegenerateInputError, FormatError, GenerationFailure, InvalidArgumentError
from .features import similarity_matrix
from .formats import read_dfg, read_match_json, records_to_csv, records_to_json, write_match_json
from .geometry import ViewTransform
from .loss import check_dense_gradient, dense_contrastive_loss, global_contrastive_loss, total_loss
from .matchers import MATCHERS, HoughConfig, run_matcher

EXIT_OK, EXIT_USAGE, EXIT_IO, EXIT_CHECK = 0, 1, 2, 3
GRADCHECK_LIMIT = 1e-5


class CliError(Exception):
    def __init__(self, message, code):
        super().__init__(message)
        self.code = code


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _float_list(text):
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated reals, got {text!r}") from None


def _name_list(text):
    names = [x.strip() for x in text.split(",") if x.strip()]
    bad = [n for n in names if n not in MATCHERS]
    if bad or not names:
        raise argparse.ArgumentTypeError(f"unknown matcher(s) {bad}; choose from {', '.join(MATCHERS)}")
    return names


def _top_k(text):
    if text == "all":
        return None
    return int(text)


def _view(text):
    parts = text.split(",")
    try:
        vals = [float(p) for p in parts[:4]]
        flip = len(parts) > 4 and parts[4].strip().lower() in ("1", "true", "flip", "yes")
        if len(vals) != 4 or len(parts) > 5:
            raise ValueError
        return ViewTransform(*vals, flip)
    except (ValueError, InvalidArgumentError):
        raise argparse.ArgumentTypeError(f"expected 'x0,y0,w,h[,flip]' crop, got {text!r}") from None


def _add_hough_flags(p):
    g = p.add_argument_group("Hough matcher")
    g.add_argument("--hough-bin", type=float, default=1.0, help="offset bin width in cells (default 1.0)")
    g.add_argument("--hough-exponent", type=float, default=2.0, help="vote weight exponent p (default 2)")
    g.add_argument("--hough-smoothing", type=int, default=0, help="vote smoothing radius in bins (default 0)")
    g.add_argument("--hough-top-k", type=_top_k, default=None, help="keys voting per query, or 'all' (default all)")
    g.add_argument("--hough-min-sim", type=float, default=-1.0, help="minimum similarity to vote (default -1)")
    g.add_argument("--radius", type=float, default=1.5, help="warped matcher radius in cells (default 1.5)")


def _hough_config(args) -> HoughConfig:
    return HoughConfig(args.hough_bin, args.hough_exponent, args.hough_smoothing, args.hough_top_k, args.hough_min_sim)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="houghcl", description="Dense positive-pair matching, contrastive loss checks and benchmark.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    b = sub.add_parser("bench", help="run the synthetic robustness benchmark")
    b.add_argument("--out", required=True, help="output file (.json for JSON, CSV otherwise)")
    b.add_argument("--format", choices=("csv", "json"), default=None, help="override format inferred from --out")
    b.add_argument("--matchers", type=_name_list, default=["argmax", "hough"], help="comma list from argmax,warped,hough")
    b.add_argument("--seeds", type=int, default=20, help="trials per configuration (default 20)")
    b.add_argument("--seed", type=int, default=0, help="master seed (default 0)")
    b.add_argument("--grid-size", type=int, default=7, help="grid side S (default 7)")
    b.add_argument("--dim", type=int, default=32, help="feature dimension E (default 32)")
    b.add_argument("--outlier-frac", type=_float_list, default=[0.0], help="comma list of outlier fractions")
    b.add_argument("--clutter-frac", type=_float_list, default=[0.0], help="comma list of clutter fractions")
    b.add_argument("--noise", type=_float_list, default=[0.0], help="comma list of noise sigmas")
    b.add_argument("--clutter-pool", type=int, default=4, help="number of shared distractor vectors (default 4)")
    b.add_argument("--latent-factor", type=int, default=4, help="latent field side as a multiple of S (default 4)")
    b.add_argument("--min-overlap", type=float, default=0.3, help="minimum crop IoU (default 0.3)")
    b.add_argument("--scale-range", type=_float_list, default=[0.5, 1.0], help="crop side range lo,hi (default 0.5,1.0)")
    b.add_argument("--flip-prob", type=float, default=0.5, help="horizontal flip probability (default 0.5)")
    b.add_argument("--view-mode", choices=("lattice", "free"), default="lattice", help="view pair sampler (default lattice)")
    b.add_argument("--epsilon", type=int, default=0, help="Chebyshev tolerance in cells for a hit (default 0)")
    _add_hough_flags(b)

    m = sub.add_parser("match", help="match two DFG feature files")
    m.add_argument("--features-a", required=True, help="query grid (DFG)")
    m.add_argument("--features-b", required=True, help="key grid (DFG)")
    m.add_argument("--matcher", required=True, help="argmax, warped or hough")
    m.add_argument("--out", required=True, help="match JSON output path")
    m.add_argument("--view-a", type=_view, default=ViewTransform(), help="view-1 crop x0,y0,w,h[,flip] (warped)")
    m.add_argument("--view-b", type=_view, default=ViewTransform(), help="view-2 crop x0,y0,w,h[,flip] (warped)")
    _add_hough_flags(m)

    for name, help_text in (("losscheck", "evaluate the dense/global contrastive loss"),
                            ("gradcheck", "finite-difference check of the dense loss gradient")):
        c = sub.add_parser(name, help=help_text)
        c.add_argument("--features-a", required=True, help="query grid (DFG)")
        c.add_argument("--features-b", required=True, help="key grid (DFG)")
        c.add_argument("--negatives", default=None, help="negative vectors, one per cell of a DFG file")
        c.add_argument("--correspondence", choices=("argmax", "hough", "file"), default="argmax",
                       help="source of positive keys (default argmax)")
        c.add_argument("--corr-file", default=None, help="match JSON used with --correspondence file")
        c.add_argument("--tau", type=float, default=0.2, help="temperature (default 0.2)")
        c.add_argument("--lambda", dest="lam", type=float, default=0.5, help="dense loss weight (default 0.5)")
        c.add_argument("--global-pair", default=None,
                       help="DFG file with two cells (global query, global positive) for the image-level term")
        if name == "gradcheck":
            c.add_argument("--epsilon", type=float, default=1e-5, help="finite-difference step (default 1e-5)")
        _add_hough_flags(c)
    return parser


def _read_grid(path):
    try:
        return read_dfg(path)
    except OSError as exc:
        raise CliError(f"cannot read {path}: {exc.strerror}", EXIT_IO) from None
    except FormatError as exc:
        raise CliError(f"{path}: {exc}", EXIT_IO) from None


def _write(path, text):
    try:
        Path(path).write_text(text)
    except OSError as exc:
        raise CliError(f"cannot write {path}: {exc.strerror}", EXIT_IO) from None


def cmd_bench(args) -> int:
    if len(args.scale_range) != 2:
        raise CliError("--scale-range needs exactly two values lo,hi", EXIT_USAGE)
    if args.seeds < 1:
        raise CliError("--seeds must be >= 1", EXIT_USAGE)
    settings = BenchSettings(
        s=args.grid_size, dim=args.dim, latent_factor=args.latent_factor,
        clutter_pool=args.clutter_pool, min_overlap=args.min_overlap,
        scale_range=tuple(args.scale_range), flip_prob=args.flip_prob,
        view_mode=args.view_mode, hough=_hough_config(args), radius=args.radius,
        epsilon=args.epsilon,
    )
    scenarios = scenario_grid(args.matchers, args.outlier_frac, args.clutter_frac, args.noise)
    meta = {
        "seed": args.seed, "seeds": args.seeds, "grid_size": settings.s, "dim": settings.dim,
        "view_mode": settings.view_mode, "min_overlap": settings.min_overlap,
        "hough_bin": settings.hough.bin_width, "hough_exponent": settings.hough.vote_exponent,
        "hough_smoothing": settings.hough.smoothing_radius, "radius": settings.radius,
    }
    print("# " + " ".join(f"{k}={v}" for k, v in meta.items()))
    result = run_experiment(scenarios, args.seeds, args.seed, settings)
    fmt = args.format or ("json" if str(args.out).endswith(".json") else "csv")
    text = records_to_json(result.records, meta) if fmt == "json" else records_to_csv(result.records)
    _write(args.out, text)
    for name in args.matchers:
        print(f"{name}: mean_accuracy={result.mean_accuracy(name):.6f} "
              f"trials={sum(r.matcher == name for r in result.records)}")
    if result.skipped:
        print(f"skipped trials: {len(result.skipped)}", file=sys.stderr)
    if not result.records:
        raise CliError("no trial produced a record", EXIT_CHECK)
    return EXIT_OK


def _grid_pair(args):
    a = _read_grid(args.features_a)
    b = _read_grid(args.features_b)
    if a.dim != b.dim:
        raise CliError(f"feature dims differ: {a.dim} vs {b.dim}", EXIT_CHECK)
    if (a.height, a.width) != (b.height, b.width):
        raise CliError(f"grid shapes differ: {a.height}x{a.width} vs {b.height}x{b.width}", EXIT_CHECK)
    return a, b


def cmd_match(args) -> int:
    if args.matcher not in MATCHERS:
        raise CliError(f"unknown matcher {args.matcher!r}; choose from {', '.join(MATCHERS)}", EXIT_USAGE)
    a, b = _grid_pair(args)
    delta = similarity_matrix(a, b)
    corr = run_matcher(args.matcher, delta, a.height, a.width, hough=_hough_config(args),
                       t1=args.view_a, t2=args.view_b, radius=args.radius)
    try:
        write_match_json(args.out, corr, a.height, a.width, args.matcher)
    except OSError as exc:
        raise CliError(f"cannot write {args.out}: {exc.strerror}", EXIT_IO) from None
    return EXIT_OK


def _loss_inputs(args):
    if not args.tau > 0:
        raise CliError("--tau must be > 0", EXIT_CHECK)
    if not 0.0 <= args.lam <= 1.0:
        raise CliError("--lambda must lie in [0, 1]", EXIT_CHECK)
    a, b = _grid_pair(args)
    if args.negatives:
        neg_grid = _read_grid(args.negatives)
        if neg_grid.dim != a.dim:
            raise CliError(f"negatives have dim {neg_grid.dim}, features {a.dim}", EXIT_CHECK)
        negatives = neg_grid.vectors
    else:
        negatives = np.zeros((0, a.dim))
    if args.correspondence == "file":
        if not args.corr_file:
            raise CliError("--correspondence file requires --corr-file", EXIT_USAGE)
        try:
            corr, s_h, s_w = read_match_json(args.corr_file)
        except OSError as exc:
            raise CliError(f"cannot read {args.corr_file}: {exc.strerror}", EXIT_IO) from None
        except (FormatError, InvalidArgumentError) as exc:
            raise CliError(f"{args.corr_file}: {exc}", EXIT_IO) from None
        if (s_h, s_w) != (a.height, a.width):
            raise CliError("correspondence file shape does not match the grids", EXIT_CHECK)
    else:
        corr = run_matcher(args.correspondence, similarity_matrix(a, b), a.height, a.width,
                           hough=_hough_config(args))
    return a, b, corr, negatives


def _global_pair(path, dim):
    pair = _read_grid(path)
    if pair.n_cells != 2 or pair.dim != dim:
        raise CliError(f"{path}: global pair must hold 2 vectors of dim {dim}", EXIT_CHECK)
    return pair.vectors[0], pair.vectors[1]


def cmd_losscheck(args) -> int:
    a, b, corr, negatives = _loss_inputs(args)
    terms = dense_contrastive_loss(a, b, corr, negatives, args.tau)
    print(f"tau={args.tau:g} lambda={args.lam:g} matched={len(terms.locations)}/{corr.n_query} negatives={len(negatives)}")
    print(f"L_r={terms.dense_term:.12g}")
    if args.global_pair:
        q, k = _global_pair(args.global_pair, a.dim)
        l_q = global_contrastive_loss(q, k, negatives, args.tau)
        print(f"L_q={l_q:.12g}")
        print(f"total={total_loss(l_q, terms.dense_term, args.lam):.12g}")
    return EXIT_OK


def cmd_gradcheck(args) -> int:
    a, b, corr, negatives = _loss_inputs(args)
    err = check_dense_gradient(a, b, corr, negatives, args.tau, args.epsilon)
    status = "ok" if err <= GRADCHECK_LIMIT else "FAIL"
    print(f"tau={args.tau:g} epsilon={args.epsilon:g} max_rel_error={err:.3e} limit={GRADCHECK_LIMIT:g} {status}")
    return EXIT_OK if err <= GRADCHECK_LIMIT else EXIT_CHECK


COMMANDS = {"bench": cmd_bench, "match": cmd_match, "losscheck": cmd_losscheck, "gradcheck": cmd_gradcheck}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except CliError as exc:
        print(f"houghcl {args.command}: error: {exc}", file=sys.stderr)
        return exc.code
    except (InvalidArgumentError, DegenerateInputError, GenerationFailure) as exc:
        print(f"houghcl {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_CHECK


if __name__ == "__main__":
    sys.exit(main())
