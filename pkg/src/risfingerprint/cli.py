"""Command-line entry point: ``generate``, ``eval`` and ``trends``.

Validation failures exit nonzero and print one JSON object on stderr.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import __version__
from .config import CASES, ConfigError, RunConfig
from .fingerprint import DatabaseFormatError, FingerprintDb
from .pipeline import (
    TREND_CASES,
    run_eval,
    run_generate,
    run_trends,
    write_eval,
    write_generate,
    write_trends,
)

EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_IO = 4
EXIT_VALUE = 5


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="risfp", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="generate a fingerprint database")
    g.add_argument("--config", help="YAML config (defaults when omitted)")
    g.add_argument("--seed", type=int, help="master seed (overrides the config)")
    g.add_argument("--out", required=True, help="output directory")
    g.add_argument("--case", choices=CASES, help="A: full model, B: no RIS, C: no spatial consistency")
    g.add_argument("--emit-maps", action="store_true", help="write the consistency maps")
    g.add_argument("--emit-radiomaps", action="store_true", help="write one RSS grid per measurement")

    e = sub.add_parser("eval", help="evaluate KNN localisation on a database")
    e.add_argument("--db", required=True, help="database CSV")
    e.add_argument("--k", type=int, default=5)
    e.add_argument("--split-seed", type=int, default=0)
    e.add_argument("--train-fraction", type=float, default=0.8)
    e.add_argument("--out", help="output directory (default: next to the database)")

    t = sub.add_parser("trends", help="sweep cases, measurement counts and RIS sizes")
    t.add_argument("--config", help="YAML config (defaults when omitted)")
    t.add_argument("--seeds", type=int, nargs="+", required=True)
    t.add_argument("--out", required=True)
    t.add_argument("--k", type=int, help="KNN neighbours (default: config eval.k)")
    t.add_argument("--cases", nargs="+", choices=CASES, default=list(TREND_CASES))
    t.add_argument("--quiet", action="store_true")
    return ap


def _load(path) -> RunConfig:
    return RunConfig.load(path) if path else RunConfig.default()


def _generate(args) -> dict:
    cfg = _load(args.config)
    if args.case:
        cfg = cfg.with_case(args.case)
    result = run_generate(cfg, args.seed)
    files = write_generate(result, args.out, args.emit_maps, args.emit_radiomaps)
    return {"files": [str(f) for f in files], "records": len(result.db)}


def _eval(args) -> dict:
    db = FingerprintDb.read_csv(args.db)
    if not 1 <= args.k:
        raise ValueError("--k must be at least 1")
    report = run_eval(db, args.k, args.split_seed, args.train_fraction)
    out = args.out or Path(args.db).resolve().parent
    files = write_eval(report, out, args.db)
    return {"files": [str(f) for f in files], "rmse_m": report.rmse}


def _trends(args) -> dict:
    cfg = _load(args.config)
    if len(args.seeds) < 5:
        print("warning: fewer than 5 seeds; medians are noisy", file=sys.stderr)

    def progress(case, n, i, seed):
        if not args.quiet:
            print(f"case {case} N={n} I={i} seed={seed}", file=sys.stderr)

    trend = run_trends(cfg, args.seeds, cases=tuple(args.cases), k=args.k, progress=progress)
    files = write_trends(trend, args.out, args.seeds)
    return {"files": [str(f) for f in files]}


def _fail(code: int, payload: dict) -> int:
    print(json.dumps(payload), file=sys.stderr)
    return code


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    handler = {"generate": _generate, "eval": _eval, "trends": _trends}[args.command]
    try:
        summary = handler(args)
    except ConfigError as exc:
        return _fail(EXIT_CONFIG, exc.to_dict())
    except DatabaseFormatError as exc:
        return _fail(EXIT_DATA, {"error": "database", "message": str(exc), "row": exc.row,
                                 "file": getattr(args, "db", None)})
    except OSError as exc:
        return _fail(EXIT_IO, {"error": "io", "message": exc.strerror or str(exc),
                               "file": exc.filename})
    except ValueError as exc:
        return _fail(EXIT_VALUE, {"error": "value", "message": str(exc)})
    print(json.dumps(summary))
    return 0


if __name__ == "__main__":
    sys.exit(main())
