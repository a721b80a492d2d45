"""``hardy-forge`` command line."""

from __future__ import annotations

import argparse
import logging
import statistics
import sys
from concurrent.futures import ThreadPoolExecutor

from . import __version__
from .evaluator import MARGIN, quantum_value, report_dict
from .formats import (
    FormatError,
    content_hash,
    dumps,
    frame_to_json,
    read_settings,
    read_state,
    report_to_json,
    settings_to_json,
    state_to_json,
    write_json,
)
from .lhv import MAX_N, classical_max, contextual_impossibility
from .magic import FrameError
from .pipeline import (
    EXIT_FAILED,
    EXIT_MALFORMED,
    EXIT_NOT_ENTANGLED,
    NotEntangled,
    Options,
    certify,
    construct,
    exit_code,
)
from .product import worker_count
from .settings import SynthesisError
from .statekit import haar_random_state

log = logging.getLogger("hardy_forge")


def _options(args) -> Options:
    return Options(seed=args.seed, restarts=args.restarts, tol=args.tol, margin=args.margin,
                   policy_search=args.policy_search, max_n=args.max_n)


def _emit(obj, out):
    text = dumps(obj)
    if out:
        write_json(out, obj)
    else:
        print(text)


def cmd_certify(args) -> int:
    state, scale = read_state(args.state)
    cert = certify(state, _options(args))
    cert["input_scale"] = scale
    _emit(cert, args.out)
    report = cert.get("report") or {}
    print(f"status: {cert['status']}  scenario: {cert.get('scenario', '-')}  "
          f"value: {report.get('value', float('nan')):.12g}", file=sys.stderr)
    return exit_code(cert)


def cmd_construct(args) -> int:
    state, _ = read_state(args.state)
    try:
        con = construct(state, _options(args))
    except NotEntangled as exc:
        print(f"not entangled (overlap {exc.overlap:.15g})", file=sys.stderr)
        return EXIT_NOT_ENTANGLED
    except (FrameError, SynthesisError) as exc:
        print(f"construction failed: {exc}", file=sys.stderr)
        return EXIT_FAILED
    out = settings_to_json(con.settings, A=con.frame.A)
    _emit(out, args.out)
    if args.frame_out:
        write_json(args.frame_out, frame_to_json(con.frame))
    return 0


def cmd_evaluate(args) -> int:
    state, _ = read_state(args.state)
    settings = read_settings(args.settings)
    if settings.dims != state.dims:
        raise FormatError(f"settings dims {settings.dims} do not match state dims {state.dims}")
    bound = classical_max(state.n).max_value if state.n <= args.max_n else 0
    rep = quantum_value(state, settings, lhv_bound=bound, margin=args.margin)
    out = report_to_json(report_dict(rep, settings), settings_to_json(settings))
    out["state_hash"] = content_hash(state_to_json(state))
    _emit(out, args.out)
    return 0 if rep.verdict else EXIT_FAILED


def cmd_lhv(args) -> int:
    ok = True
    for n in range(args.n_min, args.n + 1):
        b = classical_max(n)
        imp = contextual_impossibility(n)
        ok &= b.max_value == 0 and imp
        print(f"n={n:2d}  classical max = {b.max_value}  maximizers = {b.maximizers}  "
              f"contextual impossibility = {imp}")
    return 0 if ok else EXIT_FAILED


def cmd_example(args) -> int:
    from .catalog import run_example

    rows = run_example(args.name, n=args.n)
    width = max(len(r["quantity"]) for r in rows)
    print(f"{'quantity':<{width}} | {'expected':>24} | {'computed':>40} | ok")
    for r in rows:
        print(f"{r['quantity']:<{width}} | {r['expected']!s:>24} | {r['computed']!s:>40} | "
              f"{'yes' if r['ok'] else 'NO'}")
    return 0 if all(r["ok"] for r in rows) else EXIT_FAILED


def run_random(dims, seed: int, count: int, options: Options, workers: int | None = None):
    """Certify ``count`` Haar-random states; returns a summary dict."""
    seeds = [[seed, i] for i in range(count)]

    def one(s):
        state = haar_random_state(dims, seed=s)
        return s, certify(state, options)

    workers = workers or worker_count()
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            results = list(pool.map(one, seeds))
    else:
        results = [one(s) for s in seeds]
    certs = [c for _, c in results if c["status"] != "not-entangled"]
    values = [c["report"]["value"] for c in certs if "report" in c]
    failures = [{"seed": s, "status": c["status"], "diagnostics": c.get("diagnostics")}
                for s, c in results if c["status"] not in ("pass", "not-entangled")]
    scenarios = {}
    for c in certs:
        sc = c.get("scenario", "none")
        scenarios[sc] = scenarios.get(sc, 0) + 1
    leak = [c["report"]["leakage"]["total"] for c in certs if "report" in c]
    return {
        "dims": list(dims),
        "seed": seed,
        "count": count,
        "entangled": len(certs),
        "passed": sum(c["passed"] for c in certs),
        "scenarios": scenarios,
        "min_value": min(values, default=None),
        "median_value": statistics.median(values) if values else None,
        "max_leakage": max(leak, default=None),
        "failures": failures,
    }


def cmd_random(args) -> int:
    dims = tuple(int(d) for d in args.dims.split(","))
    summary = run_random(dims, args.seed, args.count, _options(args))
    _emit(summary, args.out)
    return 0 if not summary["failures"] else EXIT_FAILED


def _add_common(p, state=True):
    if state:
        p.add_argument("--state", required=True, help="state JSON file")
    p.add_argument("--out", help="output file (default: stdout)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--restarts", type=int, default=None,
                   help="optimizer restarts (default 16 + 8n)")
    p.add_argument("--tol", type=float, default=1e-12, help="optimizer convergence tolerance")
    p.add_argument("--margin", type=float, default=MARGIN)
    p.add_argument("--policy-search", action="store_true",
                   help="adopt the best qudit complement policy")
    p.add_argument("--max-n", type=int, default=MAX_N)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hardy-forge", description=__doc__)
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("certify", help="full construction and certificate")
    _add_common(p)
    p.set_defaults(func=cmd_certify)

    p = sub.add_parser("construct", help="emit measurement settings only")
    _add_common(p)
    p.add_argument("--frame-out", help="also write the frame")
    p.set_defaults(func=cmd_construct)

    p = sub.add_parser("evaluate", help="evaluate given settings on a state")
    _add_common(p)
    p.add_argument("--settings", required=True)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("lhv", help="classical bound by enumeration")
    p.add_argument("--n", type=int, default=10)
    p.add_argument("--n-min", type=int, default=2)
    p.set_defaults(func=cmd_lhv)

    p = sub.add_parser("example", help="worked examples, expected vs computed")
    p.add_argument("name", choices=["w3", "ghz3", "ghz-n", "mixed5"])
    p.add_argument("--n", type=int, default=4, help="party count for ghz-n")
    p.set_defaults(func=cmd_example)

    p = sub.add_parser("random", help="certify Haar-random states")
    _add_common(p, state=False)
    p.add_argument("--dims", required=True, help="comma separated, e.g. 2,2,2")
    p.add_argument("--count", type=int, default=100)
    p.set_defaults(func=cmd_random)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except FormatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_MALFORMED


if __name__ == "__main__":
    sys.exit(main())
