"""Command-line front end.

Exit codes: 0 success, 1 certificate verification failure, 2 usage or
domain error, 3 checkpoint/configuration mismatch.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path
from typing import List, Optional

from .algebra import (
    K1_CAVEAT,
    CycleCertificate,
    format_fraction,
    horizon,
    max_bound,
    min_bound,
    verify_certificate,
)
from .maps import Variant, check_odd, iterate
from .search import (
    DEFAULT_CHUNK_SIZE,
    CheckpointMismatch,
    SearchConfig,
    SearchReport,
    run,
    search_exponent_sequences,
)

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_CHECKPOINT = 0, 1, 2, 3


class UsageError(Exception):
    pass


def _positive_int(text: str) -> int:
    try:
        n = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if n < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {n}")
    return n


def _global_flags(parser: argparse.ArgumentParser, suppress: bool) -> None:
    d = (lambda v: argparse.SUPPRESS) if suppress else (lambda v: v)
    parser.add_argument("--json", action="store_true", default=d(False), help="emit one JSON document")
    parser.add_argument("--threads", type=_positive_int, default=d(None),
                        help="worker processes (default: $CYCLEBOUND_THREADS or 1)")
    parser.add_argument("--chunk-size", type=_positive_int, default=d(DEFAULT_CHUNK_SIZE),
                        help="odd candidates per work chunk")
    parser.add_argument("--checkpoint", type=Path, default=d(None), help="checkpoint file (JSON lines)")
    parser.add_argument("--resume", action="store_true", default=d(False), help="resume from --checkpoint")
    parser.add_argument("--loose-horizon", action="store_true", default=d(False),
                        help="scan up to k*3^(k-1) instead of k*(3^k+1)/4")
    parser.add_argument("--quiet", action="store_true", default=d(False), help="no progress on stderr")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="cyclebound", description=__doc__.splitlines()[0])
    _global_flags(p, suppress=False)
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, help):
        sp = sub.add_parser(name, help=help)
        _global_flags(sp, suppress=True)
        return sp

    sp = add("orbit", "iterate the shortcut map from an odd start")
    sp.add_argument("a")
    sp.add_argument("--steps", type=_positive_int, default=10)
    sp.add_argument("--variant", choices=["pos", "neg"], default="pos")

    sp = add("bounds", "exact bounds on the min and max of a k-cycle")
    sp.add_argument("k", type=int)

    sp = add("search", "exhaustive positive cycle search")
    sp.add_argument("--k-min", type=_positive_int, required=True)
    sp.add_argument("--k-max", type=_positive_int, required=True)
    sp.add_argument("--limit", type=_positive_int, default=None,
                    help="scan up to LIMIT instead of the horizon (complete only if LIMIT >= horizon)")

    sp = add("search-neg", "find negative cycles with minimum up to --limit")
    sp.add_argument("--limit", type=_positive_int, required=True)
    sp.add_argument("--max-period", type=_positive_int, required=True)

    sp = add("solve", "solve the cycle equation over all exponent sequences with total in a range")
    sp.add_argument("--k", type=_positive_int, required=True)
    sp.add_argument("--variant", choices=["pos", "neg"], required=True)
    sp.add_argument("--n-min", type=_positive_int, required=True)
    sp.add_argument("--n-max", type=_positive_int, required=True)

    sp = add("verify", "re-verify certificates from a JSON file")
    sp.add_argument("path", type=Path)
    return p


def _emit(args, doc: dict, lines: List[str]) -> None:
    if args.json:
        print(json.dumps(doc, sort_keys=True, indent=2))
    else:
        print("\n".join(lines))


def _cycle_line(c: CycleCertificate) -> str:
    return (f"  k={c.k} min={c.min} max={c.max}: {' '.join(map(str, c.elements))}"
            f" | exponents {' '.join(map(str, c.exponents))}")


def cmd_orbit(args) -> int:
    try:
        a = int(args.a)
    except ValueError:
        raise UsageError(f"not an integer: {args.a!r}") from None
    try:
        check_odd(a)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    traj = iterate(a, args.steps, Variant(args.variant))
    doc = {
        "variant": args.variant,
        "start": str(a),
        "steps": [{"input": str(s.input), "output": str(s.output), "valuation": s.valuation}
                  for s in traj.steps],
    }
    lines = [" -> ".join([str(a)] + [str(s.output) for s in traj.steps]),
             "valuations: " + ", ".join(str(s.valuation) for s in traj.steps)]
    _emit(args, doc, lines)
    return EXIT_OK


def cmd_bounds(args) -> int:
    k = args.k
    if k < 1:
        raise UsageError(f"k must be >= 1, got {k}")
    mx = max_bound(k)
    doc = {"k": k, "max_bound": {"tight": format_fraction(mx.tight), "loose": format_fraction(mx.loose)}}
    lines = [f"k={k}"]
    if k >= 2:
        mn = min_bound(k)
        h = horizon(k, args.loose_horizon)
        doc["min_bound"] = {"tight": format_fraction(mn.tight), "loose": format_fraction(mn.loose)}
        doc["horizon"] = str(h)
        lines.append(f"min bound: tight {format_fraction(mn.tight)}, loose {format_fraction(mn.loose)}")
    lines.append(f"max bound: tight {format_fraction(mx.tight)}, loose {format_fraction(mx.loose)}")
    if k >= 2:
        lines.append(f"search horizon: {doc['horizon']}")
    else:
        lines.append("min bound: not defined for k=1")
        doc["caveat"] = K1_CAVEAT
        lines.append(K1_CAVEAT)
    _emit(args, doc, lines)
    return EXIT_OK


def _threads(args) -> int:
    if args.threads is not None:
        return args.threads
    env = os.environ.get("CYCLEBOUND_THREADS")
    if not env:
        return 1
    try:
        return _positive_int(env)
    except argparse.ArgumentTypeError as exc:
        raise UsageError(f"CYCLEBOUND_THREADS: {exc}") from None


def _run_search(args, config: SearchConfig) -> SearchReport:
    if args.resume and config.checkpoint_path is None:
        raise UsageError("--resume needs --checkpoint")

    def progress(k, done, total):
        print(f"k={k} chunk {done}/{total}", file=sys.stderr)

    try:
        report = run(config, resume=args.resume, progress=None if args.quiet else progress)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    if not args.quiet:
        print(f"wall time {report.wall_time:.2f}s", file=sys.stderr)
    return report


def cmd_search(args) -> int:
    config = SearchConfig(Variant.POS, args.k_min, args.k_max, args.limit, _threads(args),
                          args.chunk_size, args.checkpoint, args.loose_horizon)
    report = _run_search(args, config)
    lines = []
    for r in report.results:
        n = len(r.cycles)
        head = (f"k={r.k}: {n} cycles, complete={str(r.complete).lower()}, "
                f"horizon={r.horizon}, candidates={r.candidates}")
        if r.complete and n == 0:
            head += f"; nonexistence of positive {r.k}-cycles PROVEN up to the minimum-bound horizon"
        lines.append(head)
        lines.extend(_cycle_line(c) for c in r.cycles)
        lines.extend(f"  note: {t}" for t in r.notes)
    lines.append(f"completeness={str(report.complete).lower()}")
    _emit(args, report.to_json(), lines)
    return EXIT_OK


def cmd_search_neg(args) -> int:
    config = SearchConfig(Variant.NEG, 1, args.max_period, args.limit, _threads(args),
                          args.chunk_size, args.checkpoint)
    report = _run_search(args, config)
    certs = report.cycles
    lines = [f"{len(certs)} negative cycles (shown as absolute values) with minimum <= {args.limit}"
             f" and period <= {args.max_period}:"]
    lines.extend(_cycle_line(c) for c in certs)
    lines.append("note: finder only, no horizon bounds negative cycles; completeness=false")
    _emit(args, report.to_json(), lines)
    return EXIT_OK


def cmd_solve(args) -> int:
    if args.n_max < args.n_min:
        raise UsageError("--n-max must be >= --n-min")
    report = search_exponent_sequences(args.k, Variant(args.variant), args.n_min, args.n_max)
    r = report.results[0]
    lines = [f"k={r.k} {args.variant}: {len(r.cycles)} cycles from {r.candidates} exponent sequences"]
    lines.extend(_cycle_line(c) for c in r.cycles)
    lines.extend(f"  note: {t}" for t in r.notes)
    _emit(args, report.to_json(), lines)
    return EXIT_OK


def _collect_certificates(doc) -> list:
    if isinstance(doc, list):
        return [c for d in doc for c in _collect_certificates(d)]
    if isinstance(doc, dict):
        if "schema_version" in doc and "elements" in doc:
            return [doc]
        if "results" in doc:
            return [c for r in doc["results"] for c in r.get("cycles", [])]
        if "cycles" in doc:
            return list(doc["cycles"])
    raise UsageError("no certificate found in document")


def cmd_verify(args) -> int:
    try:
        doc = json.loads(args.path.read_text())
    except OSError as exc:
        raise UsageError(f"cannot read {args.path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise UsageError(f"{args.path}: invalid JSON ({exc})") from None
    raw = _collect_certificates(doc)
    results = []
    for item in raw:
        try:
            cert = CycleCertificate.from_json(item)
        except ValueError as exc:
            results.append((item, [str(exc)]))
            continue
        results.append((item, verify_certificate(cert).failures))
    ok = all(not f for _, f in results)
    lines = []
    for item, failures in results:
        label = f"{item.get('variant', '?')} k={item.get('k', '?')} min={item.get('min', '?')}" \
            if isinstance(item, dict) else repr(item)
        lines.append(("PASS " if not failures else "FAIL ") + label)
        lines.extend(f"  {f}" for f in failures)
    if not raw:
        lines.append("no certificates in file (nothing to verify)")
    doc = {"pass": ok, "certificates": [{"certificate": item, "pass": not f, "failures": f}
                                        for item, f in results]}
    _emit(args, doc, lines)
    return EXIT_OK if ok else EXIT_FAIL


COMMANDS = {
    "orbit": cmd_orbit,
    "bounds": cmd_bounds,
    "search": cmd_search,
    "search-neg": cmd_search_neg,
    "solve": cmd_solve,
    "verify": cmd_verify,
}


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except CheckpointMismatch as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CHECKPOINT


if __name__ == "__main__":
    sys.exit(main())
