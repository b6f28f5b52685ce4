"""``dtwa-ising`` command line: correlate, scan and verify.

Exit codes: 0 ok, 1 usage, 2 domain error, 3 acceptance failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from pathlib import Path

from . import acceptance
from .config import ANALYSES, METHODS, SCANS, SCHEMA_VERSION, ExperimentConfig, config_from_mapping, load_mapping
from .experiments import SUMMARY_COLUMNS, compute_series, format_row, run_scan

EXIT_OK, EXIT_USAGE, EXIT_DOMAIN, EXIT_ACCEPTANCE = 0, 1, 2, 3
SERIES_COLUMNS = ("t", "d", "C", "stderr", "method")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _times(text: str) -> dict[str, str]:
    """``0,0.5,1`` is a list; ``start:end:step`` is an inclusive grid."""
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise UsageError("--times range must be start:end:step")
        return dict(zip(("t_start", "t_end", "t_step"), parts))
    return {"t_list": text}


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", metavar="PATH", help="config file, or a previous output to reproduce")
    p.add_argument("--n", type=int, help="number of sites")
    p.add_argument("--j", type=float, help="Ising coupling (default 1)")
    p.add_argument("--h-i", type=float, help="initial field")
    p.add_argument("--h-f", type=float, help="post-quench field")
    p.add_argument("--times", help="comma list, or start:end:step")
    p.add_argument("--distances", help="comma list of distances (default 0..N/2)")
    p.add_argument("--method", choices=METHODS)
    p.add_argument("--order", type=int, choices=(1, 2))
    p.add_argument("--scheme", choices=("s4", "s8"))
    p.add_argument("--samples", type=int, metavar="R")
    p.add_argument("--seed", type=int, metavar="U64")
    p.add_argument("--tol", type=float)
    p.add_argument("--integrator", choices=("dp5", "rk4"))
    p.add_argument("--threads", type=int, metavar="K")
    p.add_argument("--out", metavar="PATH", help="output file (default stdout)")
    p.add_argument("--json", action="store_true", help="write JSON instead of CSV")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="dtwa-ising", description="Quench dynamics of the transverse-field Ising chain.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("correlate", help="C^xx_d(t) on a (t, d) grid")
    _add_common(p)
    p.add_argument("--checkpoint", metavar="PATH", help="dTWA moment checkpoint; resumed if it exists")

    p = sub.add_parser("scan", help="summary analyses over a list of parameter values")
    _add_common(p)
    p.add_argument("--scan", choices=SCANS)
    p.add_argument("--values", help="comma list of scan values")
    p.add_argument("--analyses", help=f"comma list from {', '.join(ANALYSES)}")
    p.add_argument("--reference", choices=METHODS, help="method used for residuals")
    p.add_argument("--reference-n", type=int, help="chain length of the late-time exact reference")
    p.add_argument("--reference-t", type=float, help="time of the late-time exact reference")
    p.add_argument("--plateau-range", help="lo,hi distances of the plateau average")

    p = sub.add_parser("verify", help="run the acceptance checks")
    p.add_argument("--quick", action="store_true", help="fast subset only")
    p.add_argument("--json", action="store_true")
    p.add_argument("--only", help="comma list of check names, e.g. A1,A5")
    return parser


_FLAG_KEYS = {
    "n": "n", "j": "j", "h_i": "h_i", "h_f": "h_f", "distances": "distances", "method": "method",
    "order": "order", "scheme": "scheme", "samples": "samples", "seed": "seed", "tol": "tol",
    "integrator": "integrator", "threads": "threads", "values": "scan_values", "scan": "scan",
    "analyses": "analyses", "reference": "reference", "reference_n": "reference_n",
    "reference_t": "reference_t", "plateau_range": "plateau_range",
}
DEFAULTS = {"n": "20", "h_i": "1000.0", "h_f": "1.1", "t_list": "0.0"}


def resolve_config(args: argparse.Namespace) -> ExperimentConfig:
    """Config file (if any) overlaid with explicit flags; flags win."""
    values = load_mapping(args.config) if args.config else dict(DEFAULTS)
    if args.times is not None:
        for key in ("t_list", "t_start", "t_end", "t_step"):
            values.pop(key, None)
        values.update(_times(args.times))
    for attr, key in _FLAG_KEYS.items():
        v = getattr(args, attr, None)
        if v is not None:
            values[key] = v if isinstance(v, str) else repr(v)
    for key, v in DEFAULTS.items():
        if key != "t_list":
            values.setdefault(key, v)
    if not any(k in values for k in ("t_list", "t_start", "t_end")):
        values["t_list"] = DEFAULTS["t_list"]
    return config_from_mapping(values).validated()


def _clean(x):
    if isinstance(x, float) and not math.isfinite(x):
        return None
    return x


def _header(command: str, cfg: ExperimentConfig, notes: list[str]) -> list[str]:
    lines = [f"# dtwa-ising {command}", f"# schema_version = {SCHEMA_VERSION}"]
    lines += [f"#: {line}" for line in cfg.header_lines()]
    lines += [f"# {note}" for note in notes]
    return lines


def render(command: str, cfg: ExperimentConfig, columns, rows: list[list], notes: list[str], as_json: bool) -> str:
    """CSV with a ``#`` metadata header, or the equivalent JSON document."""
    if as_json:
        config = dict(line.split(" = ", 1) for line in cfg.header_lines())
        doc = {
            "command": command,
            "schema_version": SCHEMA_VERSION,
            "config": config,
            "notes": notes,
            "columns": list(columns),
            "rows": [dict(zip(columns, map(_clean, r))) for r in rows],
        }
        return json.dumps(doc, indent=1) + "\n"
    buf = io.StringIO()
    buf.write("\n".join(_header(command, cfg, notes)) + "\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for r in rows:
        writer.writerow([repr(x) if isinstance(x, float) else x for x in r])
    return buf.getvalue()


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def cmd_correlate(args) -> int:
    cfg = resolve_config(args)
    run = compute_series(cfg, checkpoint=args.checkpoint)
    s = run.series
    rows = [
        [float(t), int(d), float(s.values[i, k]), float(s.stderr[i, k]), s.method]
        for i, t in enumerate(s.times)
        for k, d in enumerate(s.distances)
    ]
    notes = [f"{k} = {v}" for k, v in run.notes.items()]
    _emit(render("correlate", cfg, SERIES_COLUMNS, rows, notes, args.json), args.out)
    return EXIT_OK


def cmd_scan(args) -> int:
    cfg = resolve_config(args)
    rows, notes = run_scan(cfg)
    if args.json:
        table = [[row.get(c) for c in SUMMARY_COLUMNS] for row in rows]
    else:
        table = [format_row(row) for row in rows]
    _emit(render("scan", cfg, SUMMARY_COLUMNS, table, notes, args.json), args.out)
    return EXIT_OK


def cmd_verify(args) -> int:
    if args.only:
        names = [n.strip().upper() for n in args.only.split(",") if n.strip()]
        unknown = [n for n in names if n not in acceptance.CHECKS]
        if unknown:
            raise UsageError(f"unknown checks {unknown}")
    else:
        names = list(acceptance.QUICK if args.quick else acceptance.CHECKS)
    echo = None if args.json else (lambda line: print(line, flush=True))
    results = []
    for name in names:
        res = acceptance.run_check(name)
        if echo:
            echo(res.line())
        results.append(res)
    failed = [r.name for r in results if not r.passed]
    if args.json:
        print(json.dumps([r.__dict__ for r in results], indent=1))
    else:
        print(f"{len(results) - len(failed)}/{len(results)} passed" + (f"; failed: {', '.join(failed)}" if failed else ""))
    return EXIT_ACCEPTANCE if failed else EXIT_OK


def _error_line(exc: BaseException) -> str:
    doc = {"error": type(exc).__name__, "message": str(exc)}
    if getattr(exc, "invariant", None):
        doc["invariant"] = exc.invariant
    return json.dumps(doc)


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # --help or a usage error
        return int(exc.code or 0)
    handler = {"correlate": cmd_correlate, "scan": cmd_scan, "verify": cmd_verify}[args.command]
    try:
        return handler(args)
    except UsageError as exc:
        print(f"dtwa-ising: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ValueError, ArithmeticError, OSError, KeyError) as exc:
        print(_error_line(exc), file=sys.stderr)
        return EXIT_DOMAIN


if __name__ == "__main__":
    sys.exit(main())
