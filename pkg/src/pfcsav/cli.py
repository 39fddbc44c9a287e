"""Command line entry point: ``pfcsav {run,study-time,study-space,report}``.

Exit codes: 0 success, 2 bad configuration or arguments, 3 numerical
failure, 4 file-system error.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .config import ConfigError, load_config
from .model import SavRadicandError
from .integrator import StepError
from .runner import RunError, convergence_study, run, space_study, write_study

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_IO = 0, 2, 3, 4

BEGIN = "----- BEGIN {} -----"
END = "----- END {} -----"


def _ints(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="pfcsav", description="PFC solver with variable-step BDF2-SAV")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="verb", required=True)

    def common(p, figures=True):
        p.add_argument("--config", required=True, type=Path)
        p.add_argument("--out", type=Path, help="output directory (overrides [output] dir)")
        if figures:
            p.add_argument("--figures", action="store_true", help="also render PNG figures")

    common(sub.add_parser("run", help="integrate one configuration"))

    st = sub.add_parser("study-time", help="temporal convergence table")
    common(st)
    st.add_argument("--steps", type=_ints, default=[10, 20, 40, 80],
                    help="base step counts on [0, T] (default 10,20,40,80)")
    st.add_argument("--mesh", choices=["uniform", "perturbed"], default="uniform")
    st.add_argument("--reference-steps", type=int, default=None)

    ss = sub.add_parser("study-space", help="spatial convergence table")
    common(ss)
    ss.add_argument("--grids", type=_ints, default=[8, 16, 32])
    ss.add_argument("--reference-M", type=int, default=None)

    rp = sub.add_parser("report", help="render figures from an output directory")
    rp.add_argument("--out", type=Path, required=True)
    return ap


def _out_dir(cfg, args) -> Path:
    out = args.out or cfg.output_dir or Path("pfc_out")
    out.mkdir(parents=True, exist_ok=True)
    return out


def _print_block(name: str, body: str) -> None:
    print(BEGIN.format(name))
    print(body.rstrip("\n"))
    print(END.format(name))


def _figures(out: Path) -> None:
    from .report import render

    for path in render(out):
        print(f"figure: {path}")


def cmd_run(args) -> int:
    cfg = load_config(args.config)
    out = _out_dir(cfg, args)
    res = run(replace(cfg, output_dir=out))
    _print_block("SUMMARY", json.dumps(res.summary, sort_keys=True))
    if args.figures:
        _figures(out)
    return EXIT_OK


def cmd_study_time(args) -> int:
    cfg = load_config(args.config)
    out = _out_dir(cfg, args)
    rows, _ = convergence_study(cfg, args.steps, args.mesh, args.reference_steps)
    path = out / "study_time.csv"
    write_study(rows, path)
    _print_block("STUDY-TIME", path.read_text())
    if args.figures:
        _figures(out)
    return EXIT_OK


def cmd_study_space(args) -> int:
    cfg = load_config(args.config)
    out = _out_dir(cfg, args)
    rows = space_study(cfg, args.grids, args.reference_M)
    path = out / "study_space.csv"
    write_study(rows, path)
    _print_block("STUDY-SPACE", path.read_text())
    if args.figures:
        _figures(out)
    return EXIT_OK


def cmd_report(args) -> int:
    if not args.out.is_dir():
        raise FileNotFoundError(f"no such output directory: {args.out}")
    _figures(args.out)
    return EXIT_OK


COMMANDS = {"run": cmd_run, "study-time": cmd_study_time, "study-space": cmd_study_space,
            "report": cmd_report}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.verb](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (RunError, StepError, SavRadicandError, FloatingPointError, np.linalg.LinAlgError) as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
