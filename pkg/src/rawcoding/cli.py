"""Command-line interface.

Every report is a JSON document (or commented CSV) that embeds the artifact
version and the full effective configuration.  Exit codes: 0 success,
1 runtime failure (single-line JSON on stderr), 2 usage error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
from fractions import Fraction

from . import __version__
from .audit import audit
from .baselines import BernoulliSpec, coincidence_rate, mean_run_completion, run_waiting, window_match_probability
from .coding import bridge_partition, dyadic_partition, encode_trajectory, refine
from .coincidence import (
    CoincidenceQuery,
    bridge_scenario,
    doubling_oracle_mean,
    hitting_experiment,
    rotation_run_bound,
)
from .diagnostics import ergodic_block_report, ulam_matrix, weak_mixing_series
from .dynamics import SHIFT, SYSTEMS, TrajectorySource, iterate, make_bridge_map, system
from .errors import RawCodingError
from .fileio import load_partition, parse_rational, read_streams, write_matrix, write_stream
from .intervals import IntervalSet
from .rng import GENERATOR, SeedSpec

log = logging.getLogger("rawcoding")

#: Offset between rotation trajectories when none is given.
ROTATION_OFFSET = Fraction(2, 5)


class UsageError(Exception):
    pass


def _u64(text: str) -> int:
    v = int(text)
    if not 0 <= v < 1 << 64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def _positive(text: str) -> int:
    v = int(float(text)) if "e" in text.lower() else int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return v


def _nonneg(text: str) -> int:
    v = int(text)
    if v < 0:
        raise argparse.ArgumentTypeError(f"expected a non-negative integer, got {text}")
    return v


def _rational(text: str) -> Fraction:
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"not a rational number: {text!r}") from None


def _interval_set(text: str) -> IntervalSet:
    """``a:b,c:d`` -> [a, b) ∪ [c, d)."""
    pieces = []
    for part in text.split(","):
        try:
            a, b = part.split(":")
            pieces.append((Fraction(a), Fraction(b)))
        except (ValueError, ZeroDivisionError):
            raise argparse.ArgumentTypeError(f"bad interval {part!r}; expected a:b") from None
    s = IntervalSet(pieces)
    if s and (s.intervals[0][0] < 0 or s.intervals[-1][1] > 1):
        raise argparse.ArgumentTypeError("intervals must lie inside [0, 1)")
    return s


def _config(args) -> dict:
    out = {}
    for k, v in sorted(vars(args).items()):
        if k in ("func", "output", "workers"):
            continue
        if isinstance(v, Fraction):
            v = str(v)
        elif isinstance(v, IntervalSet):
            v = [[str(a), str(b)] for a, b in v]
        elif isinstance(v, list):
            v = [str(x) for x in v]
        out[k] = v
    return out


def _envelope(args, result) -> dict:
    return {
        "artifact": "rawcoding",
        "version": __version__,
        "generator": GENERATOR,
        "command": args.command,
        "config": _config(args),
        "result": result,
    }


def _emit(args, result: dict, header: list[str] | None = None, rows=None, raw: str | None = None) -> None:
    if args.format == "json" or (rows is None and raw is None):
        text = json.dumps(_envelope(args, result), indent=2, sort_keys=True) + "\n"
    elif raw is not None:
        text = raw
    else:
        buf = io.StringIO()
        buf.write(f"# rawcoding {__version__} {args.command} config={json.dumps(_config(args), sort_keys=True)}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)
        text = buf.getvalue()
    if args.output in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(text)


def _source(args, m, horizon):
    if args.x0 is not None:
        if m.backend == SHIFT:
            return TrajectorySource(m, args.x0, bits=max(args.bits or 0, horizon + 64))
        return TrajectorySource(m, args.x0)
    return TrajectorySource.seeded(m, SeedSpec(args.seed, args.index), horizon)


def _check_shift_precision(args, m):
    if args.x0 is not None and m.backend == SHIFT:
        # rational iteration keeps explicit points exact at any horizon
        return m.with_backend("rational-iteration")
    return m


# -- subcommands ---------------------------------------------------------------


def cmd_simulate(args):
    m = _check_shift_precision(args, system(args.system))
    pts = iterate(_source(args, m, args.horizon), args.horizon)
    result = {"system": args.system, "points": [str(x) for x in pts]}
    _emit(args, result, ["t", "x"], [(t, str(x)) for t, x in enumerate(pts)])


def cmd_code(args):
    m = _check_shift_precision(args, system(args.system))
    part = load_partition(args.partition)
    stream = encode_trajectory(_source(args, m, args.horizon), part, args.horizon)
    result = {"alphabet": stream.alphabet, "symbols": stream.tolist()}
    _emit(args, result, raw=write_stream(stream))


def cmd_refine(args):
    m = system(args.system)
    part = load_partition(args.partition)
    sep = "" if len(part) <= 10 else " "
    table = refine(m, part, args.n, cap=args.cap)
    cyl = [
        {"word": list(c.word), "support": [[str(a), str(b)] for a, b in c.support], "measure": str(c.measure)}
        for c in table.cylinders
    ]
    result = {"order": table.order, "count": len(table), "cylinders": cyl}
    rows = [(sep.join(map(str, c.word)), " ".join(f"[{a},{b})" for a, b in c.support), str(c.measure)) for c in table.cylinders]
    _emit(args, result, ["word", "support", "measure"], rows)


def cmd_coincide(args):
    part = load_partition(args.partition)
    offset = args.offset
    if args.system == "rotation" and offset is None:
        offset = ROTATION_OFFSET
    args.offset = offset
    query = CoincidenceQuery(N=args.N, L=args.L, horizon=args.horizon, system=args.system, partition=part,
                             seed=args.seed, samples=args.samples, offset=offset)
    stats = hitting_experiment(query, workers=args.workers)
    result = stats.to_dict()
    K = part.dyadic_resolution
    if args.system == "doubling" and K is not None and K >= 1 and part == dyadic_partition(K):
        result["oracle_mean"] = float(doubling_oracle_mean(args.N, args.L, K))
    if args.system == "rotation" and args.N == 2:
        result["run_bound"] = rotation_run_bound(system("rotation").alpha, part, offset)
    rows = [(1 << j, 2 << j, c) for j, c in enumerate(stats.histogram)]
    _emit(args, result, ["t_end_lo", "t_end_hi", "count"], rows)


def cmd_bridge(args):
    report = bridge_scenario(args.k, args.L, args.samples, args.horizon, args.seed, workers=args.workers)
    m = make_bridge_map()
    aligned = ergodic_block_report(ulam_matrix(m, dyadic_partition(args.bins)))
    straddling = ergodic_block_report(ulam_matrix(m, bridge_partition(args.k)))
    result = {
        **report.to_dict(),
        "ulam_aligned": aligned.to_dict(),
        "ulam_straddling": straddling.to_dict(),
    }
    rows = [(1 << j, 2 << j, c) for j, c in enumerate(report.stats.histogram)]
    _emit(args, result, ["t_end_lo", "t_end_hi", "count"], rows)


def cmd_mixing(args):
    m = system(args.system)
    B = args.B if args.B is not None else args.A
    series = weak_mixing_series(m, args.A, B, args.n, mode=args.mode, samples=args.samples,
                                seed=SeedSpec(args.seed))
    rows = [(k, str(t), str(w)) for k, t, w in series.rows()]
    result = {
        "mode": series.mode,
        "terms": [str(t) for t in series.terms],
        "cesaro": [str(w) for w in series.cesaro],
        "final": str(series.cesaro[-1]) if series.terms else None,
        "final_float": float(series.cesaro[-1]) if series.terms else None,
    }
    _emit(args, result, ["k", "term", "W"], rows)


def cmd_ulam(args):
    model = ulam_matrix(system(args.system), load_partition(args.bins))
    report = ergodic_block_report(model)
    result = {"matrix": [[str(x) for x in r] for r in model.matrix.rows], **report.to_dict()}
    _emit(args, result, raw=write_matrix(model.matrix))


def cmd_audit(args):
    streams = read_streams(args.streams, args.alphabet)
    _emit(args, audit(streams, args.L).to_dict())


def cmd_oracle(args):
    result = {}
    if args.word is not None:
        if args.probs is None:
            raise UsageError("--word needs --probs")
        spec = BernoulliSpec(tuple(args.probs))
        word = [int(c) for c in args.word.replace(",", " ").split()] if " " in args.word or "," in args.word \
            else [int(c) for c in args.word]
        p = window_match_probability(spec, word)
        result["window_match_probability"] = str(p)
        result["window_match_probability_float"] = float(p)
    q = args.q
    if q is None and args.probs is not None:
        q = coincidence_rate(BernoulliSpec(tuple(args.probs)), args.N)
    rows = []
    if q is not None and args.L is not None:
        dist = run_waiting(q, args.L, args.horizon, exact=not args.float)
        result.update({
            "q": str(q),
            "L": args.L,
            "mean_chain": str(dist.mean),
            "mean_closed_form": str(mean_run_completion(q, args.L)),
            "mean": float(dist.mean),
            "p_no_run": float(dist.deficit),
        })
        rows = [(t, float(p)) for t, p in enumerate(dist.pmf) if t >= args.L]
    if not result:
        raise UsageError("oracle needs --word/--probs or --q/--L")
    _emit(args, result, ["t_end", "probability"], rows or None)


# -- parser -------------------------------------------------------------------------


def _common(p, seed=True):
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--output", "-o", help="output path (default: stdout)")
    if seed:
        p.add_argument("--seed", type=_u64, default=0, help="master seed (u64)")


def _point_args(p):
    p.add_argument("--system", choices=sorted(SYSTEMS), default="doubling")
    p.add_argument("--horizon", type=_positive, default=100)
    p.add_argument("--x0", type=_rational, help="explicit initial point (default: seeded)")
    p.add_argument("--bits", type=_positive, help="declared bits of a dyadic --x0")
    p.add_argument("--index", type=_nonneg, default=0, help="seed substream index")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rawcoding", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="exact orbit points")
    _point_args(p)
    _common(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("code", help="raw code of one trajectory (stream file format)")
    _point_args(p)
    p.add_argument("--partition", default="binary")
    _common(p)
    p.set_defaults(func=cmd_code)

    p = sub.add_parser("refine", help="cylinders of the n-th refinement")
    p.add_argument("--system", choices=sorted(SYSTEMS), default="doubling")
    p.add_argument("--partition", default="binary")
    p.add_argument("--n", type=_nonneg, default=1)
    p.add_argument("--cap", type=_nonneg, default=20)
    _common(p, seed=False)
    p.set_defaults(func=cmd_refine)

    p = sub.add_parser("coincide", help="Monte Carlo hitting times of coinciding windows")
    p.add_argument("--system", choices=sorted(SYSTEMS), default="doubling")
    p.add_argument("--partition", default="binary")
    p.add_argument("--N", type=int, default=2)
    p.add_argument("--L", type=_positive, default=4)
    p.add_argument("--horizon", type=_positive, default=10_000)
    p.add_argument("--samples", type=_positive, default=1000)
    p.add_argument("--offset", type=_rational, help="tuple x, x+d, ... instead of independent points "
                   "(rotation default 2/5)")
    p.add_argument("--workers", type=_positive, default=1)
    _common(p)
    p.set_defaults(func=cmd_coincide)

    p = sub.add_parser("bridge", help="cross-component pairs for the bridge map")
    p.add_argument("--k", type=int, default=2)
    p.add_argument("--L", type=_positive, default=4)
    p.add_argument("--horizon", type=_positive, default=100_000)
    p.add_argument("--samples", type=_positive, default=1000)
    p.add_argument("--bins", type=_nonneg, default=3, help="aligned Ulam bins: 2**bins dyadic bins")
    p.add_argument("--workers", type=_positive, default=1)
    _common(p)
    p.set_defaults(func=cmd_bridge)

    p = sub.add_parser("mixing", help="weak-mixing Cesàro series")
    p.add_argument("--system", choices=sorted(SYSTEMS), default="doubling")
    p.add_argument("--A", type=_interval_set, default=IntervalSet.interval(0, Fraction(1, 2)),
                   help="set A as a:b[,c:d...] (default 0:1/2)")
    p.add_argument("--B", type=_interval_set, help="set B (default: A)")
    p.add_argument("--n", type=_positive, default=16)
    p.add_argument("--mode", choices=("exact", "monte-carlo", "auto"), default="exact")
    p.add_argument("--samples", type=_positive, default=100_000)
    _common(p)
    p.set_defaults(func=cmd_mixing)

    p = sub.add_parser("ulam", help="exact Ulam matrix and block structure")
    p.add_argument("--system", choices=sorted(SYSTEMS), default="doubling")
    p.add_argument("--bins", default="dyadic:3", help="bin partition spec")
    _common(p, seed=False)
    p.set_defaults(func=cmd_ulam)

    p = sub.add_parser("audit", help="coincidence audit of external symbol streams")
    p.add_argument("streams", nargs="+")
    p.add_argument("--L", type=_positive, default=8)
    p.add_argument("--alphabet", type=_positive, default=2)
    _common(p, seed=False)
    p.set_defaults(func=cmd_audit)

    p = sub.add_parser("oracle", help="run-waiting and window-match baselines")
    p.add_argument("--q", type=_rational, help="per-step coincidence probability")
    p.add_argument("--probs", type=_rational, nargs="+", help="Bernoulli probabilities")
    p.add_argument("--N", type=int, default=2)
    p.add_argument("--word", help="symbol word, e.g. 00101")
    p.add_argument("--L", type=_positive)
    p.add_argument("--horizon", type=_positive, default=1000)
    p.add_argument("--float", action="store_true", help="propagate the distribution in floating point")
    _common(p, seed=False)
    p.set_defaults(func=cmd_oracle)
    return parser


def _validate(parser, args) -> None:
    if getattr(args, "N", 2) < 2:
        parser.error("--N must be at least 2")
    if args.command == "bridge" and args.k < 1:
        parser.error("--k must satisfy 2**-k <= 1/2")
    if args.command in ("coincide", "bridge") and args.horizon < args.L + 1:
        parser.error("--horizon must exceed --L")


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    _validate(parser, args)
    try:
        args.func(args)
    except UsageError as exc:
        parser.error(str(exc))
    except (RawCodingError, ValueError) as exc:
        sys.stderr.write(json.dumps({"error": type(exc).__name__, "message": str(exc)}) + "\n")
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
