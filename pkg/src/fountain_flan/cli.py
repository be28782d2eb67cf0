"""``fountain-flan`` command line: analyze, simulate, enumerate, compare.

Every output file starts with a run manifest.  In CSV the manifest is a block
of ``#`` lines; in JSON it is the ``manifest`` key.  The timestamp lives only
in the manifest, so the data section of two runs with the same manifest is
byte-identical.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import logging
import sys
from datetime import datetime, timezone
from fractions import Fraction
from itertools import combinations
from pathlib import Path

from . import __version__
from .analysis import AnalysisRequest, avg_bit_erasure, edge_distribution, integrated_error, \
    stopping_set_probability
from .decoder import enumerate_stopping_sets, maximal_uncorrectable_set
from .ensemble import load_code, load_degree_spec, sample_code, to_fraction
from .exceptions import GuardViolation, InputFormatError, SpecError
from .simulate import SimConfig, compare_report, simulate

CSV_FORMAT = "fountain-flan-csv/1"
JSON_FORMAT = "fountain-flan-json/1"
MODE_NAMES = {"mc": "monte_carlo", "exhaustive": "exhaustive_patterns",
              "tiny-ensemble": "exhaustive_tiny_ensemble"}

EXIT_OK, EXIT_USAGE, EXIT_GUARD, EXIT_FORMAT = 0, 2, 3, 4


class UsageError(ValueError):
    pass


def parse_epsilons(text: str) -> list[Fraction]:
    """``"0.1,1/4"`` or an inclusive ``start:stop:step`` range, all exact."""
    text = text.strip()
    try:
        if ":" in text:
            start, stop, step = (Fraction(p.strip()) for p in text.split(":"))
            if step <= 0:
                raise UsageError("epsilon step must be positive")
            out = []
            x = start
            while x <= stop:
                out.append(x)
                x += step
            return out
        return [to_fraction(p) for p in text.split(",") if p.strip()]
    except (ValueError, ZeroDivisionError) as exc:
        if isinstance(exc, UsageError):
            raise
        raise UsageError(f"bad epsilon list {text!r}: {exc}") from exc


def fmt(value, as_float: bool = False) -> str:
    if value is None:
        return ""
    if isinstance(value, Fraction):
        return repr(float(value)) if as_float else f"{value.numerator}/{value.denominator}"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, (list, tuple)):
        return ";".join(str(v) for v in value)
    return str(value)


def _file_hash(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def build_manifest(command: str, args: argparse.Namespace) -> dict:
    params = {
        k: (str(v) if isinstance(v, Path) else v)
        for k, v in sorted(vars(args).items())
        if k not in {"func", "out"}
    }
    inputs = {}
    for key in ("dist", "code"):
        path = getattr(args, key, None)
        if path:
            inputs[str(path)] = _file_hash(path)
    return {
        "command": command,
        "params": params,
        "seed": getattr(args, "seed", None),
        "version": __version__,
        "inputs": inputs,
    }


def render(manifest: dict, header: list[str] | None, rows, fmt_name: str, data=None) -> str:
    stamp = datetime.now(timezone.utc).isoformat(timespec="seconds")
    if fmt_name == "json":
        if data is None:
            data = {"columns": header, "rows": rows}
        doc = {"format": JSON_FORMAT, "manifest": dict(manifest, timestamp=stamp), "data": data}
        return json.dumps(doc, indent=2, sort_keys=True) + "\n"
    buf = io.StringIO()
    buf.write(f"# {CSV_FORMAT}\n")
    buf.write("# manifest: " + json.dumps(manifest, sort_keys=True) + "\n")
    buf.write(f"# timestamp: {stamp}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def data_section(text: str) -> str:
    """Everything except the manifest: what reruns must reproduce byte for byte."""
    if text.lstrip().startswith("{"):
        return json.dumps(json.loads(text)["data"], sort_keys=True)
    return "".join(line for line in text.splitlines(keepends=True) if not line.startswith("#"))


def _emit(args, text: str) -> None:
    if args.out in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(args.out).write_text(text)


def _spec(args):
    if not args.dist:
        raise UsageError("--dist is required")
    return load_degree_spec(args.dist)


def cmd_analyze(args) -> int:
    spec = _spec(args)
    if args.k is None or args.n is None:
        raise UsageError("--k and --n are required")
    as_float = args.float
    if args.what == "theorem1":
        sizes = [args.e_size] if args.e_size is not None else range(args.n + 1)
        header = ["e_size", "L", "p"]
        rows = []
        for e_size in sizes:
            for L, p in edge_distribution(spec, args.n, e_size).items():
                rows.append([e_size, L, fmt(p, as_float)])
    elif args.what == "stopping":
        smax = args.k if args.smax is None else args.smax
        header = ["s", "stopping_probability"]
        rows = [
            [s, fmt(stopping_set_probability(args.k, args.n, spec, s, args.zmax, args.eq14_base), as_float)]
            for s in range(1, smax + 1)
        ]
    else:
        if not args.epsilon:
            raise UsageError("--epsilon is required")
        rows = []
        for eps in parse_epsilons(args.epsilon):
            req = AnalysisRequest(args.k, args.n, spec, eps, s_max=args.smax, z_max=args.zmax,
                                  eq14_binomial_base=args.eq14_base)
            if args.what == "pb":
                rep = avg_bit_erasure(req)
                rows.append([fmt(eps, as_float), fmt(rep.pb_uncorrectable, as_float),
                             rep.clamp_events, fmt(rep.flags)])
            else:
                rep = integrated_error(req)
                flags = rep.flags + ([f"clamp_events={rep.clamp_events}"] if rep.clamp_events else [])
                rows.append([fmt(eps, as_float), fmt(rep.pb_uncorrectable, as_float),
                             fmt(rep.stopping_term, as_float), fmt(rep.stopping_term_per_bit, as_float),
                             fmt(rep.integrated, as_float), fmt(flags)])
        if args.what == "pb":
            header = ["epsilon", "pb_uncorrectable", "clamp_events", "flags"]
        else:
            header = ["epsilon", "pb_uncorrectable", "stopping_term", "stopping_term_per_bit",
                      "integrated", "flags"]
    _emit(args, render(build_manifest("analyze", args), header, rows, args.format))
    return EXIT_OK


def _sim_config(args, metric=None) -> SimConfig:
    mode = MODE_NAMES[args.mode]
    spec = load_degree_spec(args.dist) if args.dist else None
    code = load_code(args.code) if args.code else None
    if code is None and mode == "exhaustive_patterns":
        if spec is None:
            raise UsageError("exhaustive mode needs --code or --dist")
        code = sample_code(args.k, args.n, spec, args.seed)
    if code is not None:
        if args.k is not None and args.k != code.k or args.n is not None and args.n != code.n:
            raise UsageError(f"--k/--n disagree with the code file (k={code.k}, n={code.n})")
        k, n = code.k, code.n
    else:
        if args.k is None or args.n is None:
            raise UsageError("--k and --n are required without --code")
        k, n = args.k, args.n
    if not args.epsilon:
        raise UsageError("--epsilon is required")
    return SimConfig(k, n, spec, tuple(parse_epsilons(args.epsilon)), trials=args.trials,
                     seed=args.seed, mode=mode, metric=metric or args.metric, code=code)


def cmd_simulate(args) -> int:
    cfg = _sim_config(args)
    res = simulate(cfg)
    header = ["epsilon", "estimate", "stderr", "trials", "mode", "metric"]
    rows = []
    for pt in res.points:
        est = pt.exact if pt.exact is not None else pt.estimate
        rows.append([fmt(pt.epsilon, args.float), fmt(est, args.float), fmt(pt.stderr),
                     pt.trials, args.mode, res.metric])
    manifest = build_manifest("simulate", args)
    manifest["code_hash"] = res.code_hash
    _emit(args, render(manifest, header, rows, args.format))
    return EXIT_OK


def cmd_enumerate(args) -> int:
    code = load_code(args.code)
    if args.what == "stopping":
        max_size = args.max_size if args.max_size is not None else code.k
        rep = enumerate_stopping_sets(code, max_size)
        data = {"sets": [sorted(s) for s in rep.sets], "max_size": rep.max_size}
    else:
        erasure = [int(t) for t in (args.erasure or "").split(",") if t.strip()]
        U = sorted(maximal_uncorrectable_set(code, erasure))
        max_size = args.max_size if args.max_size is not None else len(U)
        if len(U) > 24:
            raise GuardViolation(f"uncorrectable-set listing needs |U| <= 24, got {len(U)}")
        sets = [list(c) for r in range(1, min(max_size, len(U)) + 1) for c in combinations(U, r)]
        data = {"sets": sets, "max_size": max((len(s) for s in sets), default=0),
                "maximal": U, "erasure": sorted(set(erasure))}
    text = render(build_manifest("enumerate", args), None, None, "json", data=data)
    _emit(args, text)
    return EXIT_OK


def cmd_compare(args) -> int:
    spec = _spec(args)
    cfg = _sim_config(args)
    alt_metric = "trivial_bit" if cfg.metric != "trivial_bit" else "bit"
    emp = simulate(cfg)
    alt = simulate(_sim_config(args, alt_metric))
    reports = [
        integrated_error(AnalysisRequest(cfg.k, cfg.n, spec, eps, s_max=args.smax, z_max=args.zmax,
                                         eq14_binomial_base=args.eq14_base))
        for eps in cfg.epsilons
    ]
    as_float = args.float
    header = ["epsilon", "pb_uncorrectable", "integrated", "empirical", f"empirical_{alt_metric}",
              "stderr", "gap", "rel_gap", "verdict", "clamp_events"]
    rows = []
    for r in compare_report(reports, emp, alt):
        emp_val = r.empirical_exact if r.empirical_exact is not None else r.empirical
        rows.append([fmt(r.epsilon, as_float), fmt(r.pb_uncorrectable, as_float),
                     fmt(r.integrated, as_float), fmt(emp_val, as_float), fmt(r.empirical_alt, as_float),
                     fmt(r.stderr), fmt(r.gap), fmt(r.rel_gap), r.verdict, r.clamp_events])
    manifest = build_manifest("compare", args)
    manifest["code_hash"] = emp.code_hash
    _emit(args, render(manifest, header, rows, args.format))
    return EXIT_OK


def _add_common(p, *, sim=False, ana=False):
    p.add_argument("--k", type=int)
    p.add_argument("--n", type=int)
    p.add_argument("--dist", help="degree spec JSON file")
    p.add_argument("--epsilon", help="comma list or start:stop:step")
    p.add_argument("--out", default="-")
    p.add_argument("--format", choices=["csv", "json"], default="csv")
    p.add_argument("--float", action="store_true", help="emit doubles instead of num/den")
    if ana:
        p.add_argument("--smax", type=int)
        p.add_argument("--zmax", type=int)
        p.add_argument("--eq14-base", dest="eq14_base", choices=["n", "k"], default="n")
    if sim:
        p.add_argument("--trials", type=int, default=10_000)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--metric", choices=["bit", "trivial_bit", "block"], default="bit")
        p.add_argument("--code", help="fixed code JSON file")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fountain-flan", description="Finite-length erasure analysis of LT codes.")
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", help="analytical curves")
    _add_common(p, ana=True)
    p.add_argument("--what", choices=["theorem1", "pb", "stopping", "integrated"], default="integrated")
    p.add_argument("--e-size", dest="e_size", type=int)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("simulate", help="Monte Carlo or exhaustive decoding")
    _add_common(p, sim=True)
    p.add_argument("--mode", choices=list(MODE_NAMES), default="mc")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("enumerate", help="stopping or uncorrectable sets of a code")
    p.add_argument("--code", required=True)
    p.add_argument("--what", choices=["stopping", "uncorrectable"], default="stopping")
    p.add_argument("--max-size", dest="max_size", type=int)
    p.add_argument("--erasure", default="")
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_enumerate)

    p = sub.add_parser("compare", help="analytical vs empirical")
    _add_common(p, sim=True, ana=True)
    p.add_argument("--mode", choices=list(MODE_NAMES), default="tiny-ensemble")
    p.set_defaults(func=cmd_compare)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except GuardViolation as exc:
        print(f"fountain-flan: guard violation: {exc}", file=sys.stderr)
        return EXIT_GUARD
    except (InputFormatError, SpecError, FileNotFoundError) as exc:
        print(f"fountain-flan: input error: {exc}", file=sys.stderr)
        return EXIT_FORMAT
    except ValueError as exc:
        print(f"fountain-flan: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
