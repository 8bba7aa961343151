"""Command line entry point: ``rabicat <command> --config FILE``.

Exit status: 0 success, 1 invariant or numerical failure, 2 configuration error.
"""

from __future__ import annotations

import argparse
import csv
import io
import sys
from dataclasses import replace
from typing import Sequence

from . import spectra
from .config import RunConfig, load_config, with_levels
from .exceptions import ConfigError, RabicatError, RangeError

COMMANDS = ("spectrum", "sweep", "bias-scan", "catness", "verify")
FLOAT_FMT = "%.12e"


def _fmt(x) -> str:
    if isinstance(x, str):
        return x
    if isinstance(x, bool):
        return "1" if x else "0"
    if isinstance(x, int):
        return str(x)
    return FLOAT_FMT % x


def to_csv(header: Sequence[str], rows: Sequence[Sequence]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(x) for x in row])
    return buf.getvalue()


def sweep_csv(rows: Sequence[spectra.SweepRow]) -> str:
    return to_csv(spectra.SWEEP_COLUMNS, [r.values() for r in rows])


def spectrum_csv(cfg: RunConfig) -> str:
    t = spectra.resolve_truncation(cfg.model, cfg.params, cfg.trunc)
    dec = spectra.diagonalize(spectra.hamiltonian_builder(cfg.model, cfg.params), cfg.levels, t)
    rows = [
        (k, float(e), float(dec.tail_mass[k]), float(dec.residuals[k]), int(dec.trunc_used.n_max),
         "ok" if dec.converged[k] else "unconverged")
        for k, e in enumerate(dec.eigenvalues)
    ]  # fmt: skip
    return to_csv(("level", "energy", "tail_mass", "residual", "n_max", "status"), rows)


def bias_scan_csv(cfg: RunConfig) -> str:
    rows = spectra.bias_scan(cfg.params, cfg.epsilon_grid, cfg.model, cfg.trunc)
    return to_csv(
        ("epsilon", "exact_gap", "approximant_gap", "status"),
        [(r.epsilon, r.exact_gap, r.approximant_gap, r.status) for r in rows],
    )


def catness_csv(cfg: RunConfig) -> str:
    rows = spectra.catness_table(cfg.model, cfg.params, cfg.trunc, cfg.levels)
    header = ("level", "energy", "entropy", "parity", "photon_number", "best_n", "best_branch",
              "approximant_energy", "fidelity")  # fmt: skip
    return to_csv(header, [tuple(r.__dict__.values()) for r in rows])


def _build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="rabicat", description=__doc__.splitlines()[0])
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("--config", help="key=value configuration file (optional for verify)")
    ap.add_argument("--out", help="output CSV path; stdout when omitted")
    ap.add_argument("--levels", type=int, help="number of levels (overrides the config)")
    ap.add_argument(
        "--seedless",
        action="store_true",
        help="accepted for interface compatibility; nothing here is random",
    )
    return ap


def _emit(text: str, out: str | None) -> None:
    if out:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def main(argv: Sequence[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config) if args.config else None
        if cfg is not None and args.levels is not None:
            cfg = with_levels(cfg, args.levels)
        elif args.levels is not None and args.levels < 2:
            raise RangeError("levels must be >= 2")
        if cfg is None and args.command != "verify":
            raise ConfigError(f"{args.command} needs --config")
        if args.command == "sweep" and not cfg.g_grid:
            raise RangeError("sweep needs a non-empty g_grid")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2

    out = args.out or (cfg.out if cfg else None)
    try:
        if args.command == "verify":
            from .verify import run_checks

            results = run_checks(log=lambda s: print(s, flush=True))
            if out:
                _emit(
                    to_csv(("module", "check", "value", "limit", "passed"),
                           [(r.module, r.name, r.value, r.limit, r.passed) for r in results]),
                    out,
                )  # fmt: skip
            return 0 if all(r.passed for r in results) else 1
        if args.command == "spectrum":
            text = spectrum_csv(cfg)
        elif args.command == "sweep":
            rows = spectra.coupling_sweep(cfg.params, cfg.g_grid, cfg.model, cfg.trunc, cfg.resolvent_n or None)
            text = sweep_csv(rows)
        elif args.command == "bias-scan":
            text = bias_scan_csv(cfg)
        else:
            text = catness_csv(cfg)
    except RabicatError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    _emit(text, out)
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
