"""Command-line entry point ``anisodd``.

Exit status: 0 on success, 1 for invalid input (configuration, units,
lattice files, too few samples), 2 for numerical failures.
"""

from __future__ import annotations

import argparse
import sys
import warnings
from importlib import resources

import numpy as np

from .config import ConfigError, load_config
from .ensemble import InsufficientSamplesError, LatticeError, QuadratureError
from .exactsim import DimensionError, InsufficientTrajectoriesError
from .runs import RUNNERS
from .sequence import SequenceError
from .units import UnitError

INPUT_ERRORS = (ConfigError, UnitError, LatticeError, SequenceError, InsufficientSamplesError,
                InsufficientTrajectoriesError, DimensionError)
NUMERIC_ERRORS = (QuadratureError, FloatingPointError, np.linalg.LinAlgError, ArithmeticError)


def example_config_path():
    return resources.files("anisodd") / "data" / "er_yso_example.toml"


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="anisodd",
                                description="Dipolar decoherence of anisotropic spin ensembles.")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", "-c", help="TOML run configuration (default: packaged example)")
    common.add_argument("--seed", type=int, help="override run.seed")
    common.add_argument("--out", "-o", help="output directory (overrides run.out)")
    common.add_argument("--realizations", type=int, help="Monte Carlo realisations per estimate")
    common.add_argument("--workers", type=int, help="worker processes for sweeps")
    sub = p.add_subparsers(dest="command", required=True, metavar="COMMAND")
    helps = {
        "sweep": "T2 and flip-flop lifetime along a field rotation",
        "predict": "coherence report for one field direction",
        "fidelity": "ensemble flip probability of finite pulses",
        "oracle": "exact small-cluster checks",
        "noise": "XY-4 T2 scaling under classical OU noise",
        "export-sequence": "write pulse timetables",
    }
    for name, h in helps.items():
        sub.add_parser(name, parents=[common], help=h, description=h)
    sub.add_parser("example-config", help="print the annotated example configuration")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "example-config":
        sys.stdout.write(example_config_path().read_text())
        return 0
    for name in ("seed", "realizations", "workers"):
        v = getattr(args, name)
        if v is not None and v < (0 if name == "seed" else 1):
            print(f"anisodd: error: --{name} must be {'non-negative' if name == 'seed' else 'positive'}",
                  file=sys.stderr)
            return 1
    overrides = {k: getattr(args, k) for k in ("seed", "realizations", "out", "workers")}
    try:
        if args.config:
            cfg = load_config(args.config, overrides)
        else:
            with resources.as_file(example_config_path()) as path:
                cfg = load_config(path, overrides)
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            with np.errstate(invalid="raise", divide="raise", over="raise"):
                result = RUNNERS[args.command](cfg)
    except INPUT_ERRORS as e:
        print(f"anisodd: error: {e}", file=sys.stderr)
        return 1
    except NUMERIC_ERRORS as e:
        print(f"anisodd: numerical error: {type(e).__name__}: {e}", file=sys.stderr)
        return 2
    for w in [*result.warnings, *(str(c.message) for c in caught)]:
        print(f"anisodd: warning: {w}", file=sys.stderr)
    sys.stdout.write(result.report)
    for f in result.files:
        print(f"wrote {f}")
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
