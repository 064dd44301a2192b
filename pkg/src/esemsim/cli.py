"""Command line entry point.

Example:
    esemsim --trials 50 --seed 7 --protocol both --algorithm both --out runs/demo
"""

import argparse
import json
import logging
import sys

from .errors import ConfigError, EsemSimError, InfeasiblePlan
from .experiment import ALGORITHMS, ExperimentConfig, run_experiment, write_results
from .network import NetworkConfig
from .protocol import FULL_IA, PARTIAL_IA
from .report import emit_plot_data

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_INFEASIBLE = 3

_PROTOCOL_CHOICES = {
    "full": [FULL_IA],
    "partial": [PARTIAL_IA],
    "both": [FULL_IA, PARTIAL_IA],
}
_ALGORITHM_CHOICES = {
    "esem": ["esem"],
    "epa": ["epa"],
    "both": list(ALGORITHMS),
}

# ExperimentConfig keys settable from a config file.
_AXIS_KEYS = ("p_max_b_dbm", "p_max_r_dbm", "m", "isd_km", "s_r", "s_u")
_SCALAR_KEYS = ("trials", "seed", "include_nonconverged")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="esemsim",
        description="Relay-aided multicell downlink energy-efficiency simulator",
    )
    p.add_argument("--config", help="JSON file with experiment settings")
    p.add_argument("--protocol", choices=sorted(_PROTOCOL_CHOICES), default="both")
    p.add_argument("--algorithm", choices=sorted(_ALGORITHM_CHOICES), default="both")
    p.add_argument("--trials", type=int, help="Monte Carlo trials per grid point")
    p.add_argument("--seed", type=int, help="master seed")
    p.add_argument("--out", default="results", help="output directory")
    p.add_argument("--grid-point", type=int, default=None,
                   help="run a single sweep point by index")
    p.add_argument("--emit-plot-data", action="store_true",
                   help="also write per-axis aggregate tables and figures")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def load_config(path: str) -> ExperimentConfig:
    try:
        with open(path) as f:
            raw = json.load(f)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError("config root must be a JSON object")
    kwargs = {}
    base_kwargs = raw.pop("network", {})
    for key in list(raw):
        if key in _AXIS_KEYS:
            val = raw.pop(key)
            kwargs[key] = list(val) if isinstance(val, (list, tuple)) else [val]
        elif key in _SCALAR_KEYS:
            kwargs[key] = raw.pop(key)
    if raw:
        raise ConfigError(f"unknown config keys: {sorted(raw)}")
    try:
        base = NetworkConfig(**base_kwargs) if base_kwargs else None
    except TypeError as exc:
        raise ConfigError(f"bad network settings: {exc}") from exc
    return ExperimentConfig(base=base, **kwargs)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        exp = load_config(args.config) if args.config else ExperimentConfig()
        exp.protocols = _PROTOCOL_CHOICES[args.protocol]
        exp.algorithms = _ALGORITHM_CHOICES[args.algorithm]
        if args.trials is not None:
            exp.trials = args.trials
        if args.seed is not None:
            exp.seed = args.seed
        exp.validate()
        rows = run_experiment(exp, grid_point=args.grid_point)
        paths = write_results(rows, exp, args.out)
        print(f"wrote {len(rows)} rows to {paths['results']}")
        if args.emit_plot_data:
            from .experiment import aggregate_rows

            written = emit_plot_data(
                aggregate_rows(rows, exp.include_nonconverged), args.out
            )
            for path in written:
                print(f"wrote {path}")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except InfeasiblePlan as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except EsemSimError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
