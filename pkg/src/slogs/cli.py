"""Command-line entry point.

Exit codes: 0 success, 1 invalid configuration, 2 experiment invalid
(blow-up quota exceeded, or a failed self-test), 3 internal error.
Diagnostics go to standard error; data goes to files only.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
import time
import traceback
from pathlib import Path

from . import config as cfgmod
from . import oracles
from .errors import ConfigurationError
from .experiments import run

log = logging.getLogger("slogs")

COMMANDS = {
    "simulate": cfgmod.Kind.SINGLE_RUN,
    "converge": cfgmod.Kind.EPS_CONVERGENCE,
    "hoelder": cfgmod.Kind.TEMPORAL_HOELDER,
    "momentsweep": cfgmod.Kind.MOMENT_SWEEP,
    "massdrift": cfgmod.Kind.MASS_DRIFT,
    "check": cfgmod.Kind.INEQUALITY_CHECK,
}

EXIT_OK, EXIT_CONFIG, EXIT_INVALID, EXIT_INTERNAL = 0, 1, 2, 3


def _default_workers() -> int:
    env = os.environ.get("SLOGS_WORKERS")
    if env is None:
        return 1
    try:
        return max(1, int(env))
    except ValueError:
        return 1


def _u64(text: str) -> int:
    v = int(text, 0)
    if not 0 <= v < 2 ** 64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="slogs", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="TOML experiment config")
    common.add_argument("--out", type=Path, help="output directory (overrides experiment.output_dir)")
    common.add_argument("--seed", type=_u64, help="master seed (overrides noise.seed)")
    common.add_argument("--workers", type=int, default=None,
                        help="worker processes (default: $SLOGS_WORKERS or 1)")
    common.add_argument("--quiet", action="store_true", help="only report errors")
    for name in list(COMMANDS) + ["selftest"]:
        sub.add_parser(name, parents=[common])
    return p


def load_spec(command: str, path: Path | None) -> cfgmod.ExperimentSpec:
    kind = COMMANDS[command]
    if path is None:
        if kind is cfgmod.Kind.INEQUALITY_CHECK:
            return cfgmod.build({"experiment.kind": kind.value})
        raise ConfigurationError(f"'{command}' needs --config")
    if not path.is_file():
        raise ConfigurationError(f"config file not found: {path}")
    try:
        raw = cfgmod.tomllib.loads(path.read_text(encoding="utf-8"))
    except cfgmod.tomllib.TOMLDecodeError as exc:
        raise ConfigurationError(f"{path}: not valid TOML: {exc}") from None
    except (OSError, UnicodeDecodeError) as exc:
        raise ConfigurationError(f"{path}: {exc}") from None
    flat = cfgmod.flatten(raw)
    given = flat.setdefault("experiment.kind", kind.value)
    if given != kind.value:
        raise ConfigurationError(f"config kind {given!r} does not match command '{command}'")
    return cfgmod.build(flat)


def _selftest(args) -> int:
    t0 = time.perf_counter()
    ok = True
    for r in oracles.run_all():
        ok &= r.ok
        log.info("%-26s error %.3e  tol %.1e  %s", r.name, r.error, r.tolerance,
                 "ok" if r.ok else "FAIL")
    log.info("selftest %s in %.1f s", "passed" if ok else "FAILED", time.perf_counter() - t0)
    return EXIT_OK if ok else EXIT_INVALID


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO,
                        format="%(message)s", stream=sys.stderr, force=True)
    try:
        if args.command == "selftest":
            return _selftest(args)
        spec = load_spec(args.command, args.config)
        if args.seed is not None:
            spec = spec.with_seed(args.seed)
        workers = args.workers if args.workers is not None else _default_workers()
        if workers < 1:
            raise ConfigurationError("--workers must be >= 1")
        out = args.out or Path(spec.output_dir)
        t0 = time.perf_counter()
        record = run(spec, workers)
        record.write(out)
        log.info("%s: %d completed, %d excluded, %.1f s -> %s", record.kind, record.completed,
                 record.excluded, time.perf_counter() - t0, out)
        for name, fit in record.fits.items():
            if fit:
                log.info("  %-22s slope %.4f +- %.4f  R2 %.4f", name, fit["slope"],
                         fit["slope_stderr"], fit["r_squared"])
        if not record.valid:
            log.error("experiment invalid: %d of %d samples excluded", record.excluded,
                      record.n_samples)
            return EXIT_INVALID
        return EXIT_OK
    except ConfigurationError as exc:
        log.error("configuration error: %s", exc)
        return EXIT_CONFIG
    except Exception:  # noqa: BLE001 - reported as internal error
        log.error("internal error:\n%s", traceback.format_exc())
        return EXIT_INTERNAL


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
