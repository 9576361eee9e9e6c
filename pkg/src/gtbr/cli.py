"""Command line interface.

Regulators are given inline or as JSON files::

    --stbr N,r,B                      standard regulator, e.g. --stbr 4,3,6
    --gtbr N=4 r=6,3,3,0 B=6,6,6      generalized regulator (B= may be empty when N=1)
    --spec FILE                       {"N": 4, "r": [6,3,3,0], "B": [6,6,6]}
                                      or {"N": 4, "r": 3, "B": 6}

Exit codes: 0 success, 2 invalid input, 3 resource limit, 4 golden mismatch.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path
from typing import Sequence

from . import codec, reference
from .entropy import estimate_utility, information_utility, plugin_entropy, sample_schedules, solve
from .errors import GtbrError, ResourceLimit
from .optimizer import (
    DEFAULT_CACHE_SIZE,
    EQUALITY,
    INEQUALITY,
    SearchOutcome,
    SearchProblem,
    search,
    write_csv,
)
from .regulator import RegulatorSpec, StbrSpec, spec_from_dict

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_RESOURCE = 3
EXIT_MISMATCH = 4

CACHE_ENV = "GTBR_CACHE_SIZE"

log = logging.getLogger("gtbr")


def _ints(text: str) -> list[int]:
    text = text.strip()
    return [int(x) for x in text.split(",")] if text else []


def parse_stbr(text: str) -> StbrSpec:
    parts = _ints(text)
    if len(parts) != 3:
        raise ValueError(f"--stbr expects N,r,B, got {text!r}")
    return StbrSpec(*parts)


def parse_gtbr(tokens: Sequence[str]) -> RegulatorSpec:
    fields: dict[str, str] = {}
    for token in tokens:
        key, sep, value = token.partition("=")
        if not sep or key not in ("N", "r", "B"):
            raise ValueError(f"--gtbr expects N=.. r=.. B=.., got {token!r}")
        fields[key] = value
    if "r" not in fields:
        raise ValueError("--gtbr needs r=")
    r = _ints(fields["r"])
    n = int(fields.get("N", len(r)))
    return RegulatorSpec(n, tuple(r), tuple(_ints(fields.get("B", ""))))


def _regulator(args) -> RegulatorSpec:
    if args.gtbr:
        return parse_gtbr(args.gtbr)
    if args.stbr:
        return parse_stbr(args.stbr).as_regulator()
    if args.spec:
        spec = spec_from_dict(json.loads(Path(args.spec).read_text()))
        return spec.as_regulator() if isinstance(spec, StbrSpec) else spec
    raise ValueError("give a regulator with --stbr, --gtbr or --spec")


def _envelope(args) -> StbrSpec:
    if args.stbr:
        return parse_stbr(args.stbr)
    if args.spec:
        spec = spec_from_dict(json.loads(Path(args.spec).read_text()))
        if isinstance(spec, StbrSpec):
            return spec
    raise ValueError("an STBR envelope is required (--stbr N,r,B or an STBR --spec file)")


def _window(text: str):
    if text == "auto":
        return "auto"
    if text in ("none", "unbounded"):
        return None
    return int(text)


def _values(text: str) -> list[int]:
    if ":" in text:
        lo, hi = (int(x) for x in text.split(":"))
        return list(range(lo, hi + 1))
    return _ints(text)


def _emit(args, text: str) -> None:
    if not text.endswith("\n"):
        text += "\n"
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)


def _problem(args, envelope: StbrSpec) -> SearchProblem:
    return SearchProblem(
        envelope,
        depth_mode=args.mode,
        window=_window(args.window),
        max_candidates=args.max_candidates,
        time_limit=args.time_limit,
        cache_size=int(os.environ.get(CACHE_ENV, DEFAULT_CACHE_SIZE)),
    )


def cmd_utility(args) -> int:
    spec = _regulator(args)
    sol = solve(spec)
    h = information_utility(sol)
    report = {
        "spec": spec.to_dict(),
        "H": round(h, 4),
        "g0": str(sol.utility_weight),
        "table_sizes": [len(row) for row in sol.weights],
    }
    if args.format == "json":
        _emit(args, json.dumps(report, indent=2))
    elif args.format == "csv":
        _emit(args, f"N,r,B,H,g0\n{spec.horizon},{' '.join(map(str, spec.increments))},"
                    f"{' '.join(map(str, spec.depths))},{h:.4f},{sol.utility_weight}")
    else:
        _emit(args, "\n".join([
            f"H = {h:.4f} bits",
            f"g0 = {sol.utility_weight}",
            f"table sizes = {report['table_sizes']}",
        ]))
    return EXIT_OK


def _outcome_json(outcomes: Sequence[SearchOutcome]) -> str:
    data = [o.to_dict() for o in outcomes]
    for d in data:
        d["stats"].pop("elapsed")
    return json.dumps(data if len(data) != 1 else data[0], indent=2)


def cmd_optimize(args) -> int:
    outcome = search(_problem(args, _envelope(args)), jobs=args.jobs)
    _emit(args, _outcome_json([outcome]) if args.format == "json" else write_csv([outcome]))
    return EXIT_OK


def cmd_sweep(args) -> int:
    rows = ["x,H_s,H_g,diff"]
    previous = None
    for x in _values(args.values):
        if args.axis == "B":
            envelope = StbrSpec(args.N, args.r, x)
        else:
            envelope = StbrSpec(args.N, x, args.B)
        outcome = search(_problem(args, envelope), jobs=args.jobs)
        h = outcome.best_utility
        diff = "" if previous is None else f"{h - previous:.4f}"
        rows.append(f"{x},{outcome.baseline_utility:.4f},{h:.4f},{diff}")
        previous = h
    _emit(args, "\n".join(rows))
    return EXIT_OK


def cmd_reproduce_table(args) -> int:
    rows = reference.TABLE
    if args.rows:
        wanted = {tuple(_ints(r)) for r in args.rows}
        rows = tuple(r for r in rows if r.envelope in wanted)
        if len(rows) != len(wanted):
            raise ValueError(f"unknown envelopes in {args.rows}")
    outcomes = []
    failed = False
    for row in rows:
        problem = SearchProblem(StbrSpec(*row.envelope), cache_size=int(os.environ.get(CACHE_ENV, DEFAULT_CACHE_SIZE)))
        outcome = search(problem, jobs=args.jobs)
        outcomes.append(outcome)
        for problem_text in reference.compare(outcome, row):
            failed = True
            print(f"MISMATCH {row.envelope}: {problem_text}", file=sys.stderr)
    _emit(args, _outcome_json(outcomes) if args.format == "json" else write_csv(outcomes))
    return EXIT_MISMATCH if failed and args.golden else EXIT_OK


def cmd_sample(args) -> int:
    sol = solve(_regulator(args))
    mean, se = estimate_utility(sol, args.n, args.seed)
    exact = information_utility(sol)
    report = {
        "samples": args.n,
        "seed": args.seed,
        "mean_bits": mean,
        "stderr": se,
        "ci95": [mean - 1.96 * se, mean + 1.96 * se],
        "plugin_bits": plugin_entropy(list(sample_schedules(sol, args.n, args.seed))),
        "exact_bits": exact,
    }
    if args.format == "json":
        _emit(args, json.dumps(report, indent=2))
    else:
        _emit(args, "\n".join(f"{k} = {v}" for k, v in report.items()))
    return EXIT_OK


def _read_payload(path: str, text_bits: bool) -> str:
    data = Path(path).read_bytes()
    if text_bits:
        return data.decode("ascii").strip()
    return "".join(format(b, "08b") for b in data)


def cmd_encode(args) -> int:
    sol = solve(_regulator(args))
    payload = _read_payload(args.input, args.text)
    coded = codec.encode_chain(sol, payload) if args.chain else codec.encode(sol, payload)
    if coded.payload_length < len(payload):
        log.warning("frame carries %d of %d payload bits", coded.payload_length, len(payload))
    Path(args.out).write_bytes(coded.to_bytes())
    print(
        f"frames={len(coded.frames)} payload_bits={coded.payload_length} capacity={coded.capacity} "
        f"overt={coded.overt_bits} covert={coded.covert_bits}",
        file=sys.stderr,
    )
    return EXIT_OK


def cmd_decode(args) -> int:
    sol = solve(_regulator(args))
    coded = codec.from_bytes(sol, Path(args.input).read_bytes())
    bits = codec.decode(sol, coded)
    if args.text:
        Path(args.out).write_text(bits + "\n")
    else:
        if len(bits) % 8:
            raise ValueError(f"{len(bits)} payload bits are not whole bytes; use --text")
        Path(args.out).write_bytes(int(bits, 2).to_bytes(len(bits) // 8, "big") if bits else b"")
    return EXIT_OK


def _add_regulator(p: argparse.ArgumentParser) -> None:
    g = p.add_mutually_exclusive_group()
    g.add_argument("--stbr", metavar="N,r,B")
    g.add_argument("--gtbr", nargs="+", metavar="KEY=VALUE")
    g.add_argument("--spec", metavar="FILE")


def _add_search(p: argparse.ArgumentParser) -> None:
    p.add_argument("--mode", choices=(EQUALITY, INEQUALITY), default=EQUALITY,
                   help="aggregate bucket depth equal to, or at most, (N-1)B")
    p.add_argument("--window", default="auto",
                   help="bucket depth window w (int), 'none' for unbounded, 'auto' (default)")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--max-candidates", type=int)
    p.add_argument("--time-limit", type=float)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gtbr", description=__doc__.split("\n")[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("utility", help="information utility of a regulator")
    _add_regulator(p)
    p.add_argument("--format", choices=("text", "json", "csv"), default="text")
    p.add_argument("--out")
    p.set_defaults(func=cmd_utility)

    p = sub.add_parser("optimize", help="entropy-optimal GTBR inside an STBR envelope")
    _add_regulator(p)
    _add_search(p)
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--out")
    p.set_defaults(func=cmd_optimize)

    p = sub.add_parser("sweep", help="optimal utility along the B or r axis")
    p.add_argument("--axis", choices=("B", "r"), required=True)
    p.add_argument("--values", required=True, help="lo:hi (inclusive) or a comma list")
    p.add_argument("--N", type=int, required=True)
    p.add_argument("--r", type=int, help="fixed rate when sweeping B")
    p.add_argument("--B", type=int, help="fixed depth when sweeping r")
    _add_search(p)
    p.add_argument("--out")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("reproduce-table", help="recompute the published optimal regulators")
    p.add_argument("--rows", nargs="+", metavar="N,r,B", help="only these envelopes")
    p.add_argument("--golden", action="store_true", help="exit 4 if any row differs from the published values")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--out")
    p.set_defaults(func=cmd_reproduce_table)

    p = sub.add_parser("sample", help="Monte Carlo check of the optimal length law")
    _add_regulator(p)
    p.add_argument("--n", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--format", choices=("text", "json"), default="text")
    p.add_argument("--out")
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("encode", help="encode a payload into packet lengths and contents")
    _add_regulator(p)
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--text", action="store_true", help="payload file holds '0'/'1' characters")
    p.add_argument("--chain", action="store_true", help="spread the whole payload over chained frames")
    p.set_defaults(func=cmd_encode)

    p = sub.add_parser("decode", help="recover the payload from an encoded frame file")
    _add_regulator(p)
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--text", action="store_true", help="write '0'/'1' characters")
    p.set_defaults(func=cmd_decode)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.command == "sweep":
        if (args.axis == "B" and args.r is None) or (args.axis == "r" and args.B is None):
            parser.error("sweeping B needs --r, sweeping r needs --B")
    try:
        return args.func(args)
    except ResourceLimit as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    except (GtbrError, ValueError, OSError, KeyError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
