"""Command-line interface.

Subcommands: gen (dataset generation), thin (binomial thinning), eval
(cross-validated baseline evaluation), linkbudget (inverse-square
calculator), golden (preprocessing parity vectors).

Exit codes: 0 success, 2 usage/config error, 3 runtime failure. All
subcommands rerun byte-identically on identical inputs; manifests carry a
timestamp unless --reproducible is given.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys

from .errors import ConfigError, TofForgeError
from .linkbudget import SignalAnchor, required_pulse_energy

log = logging.getLogger("tof_forge")

SEED_ENV_VAR = "TOF_FORGE_SEED"


def _resolve_seed(flag_value, config_value=None):
    """Priority: --seed flag, then config file, then TOF_FORGE_SEED env."""
    if flag_value is not None:
        return flag_value
    if config_value is not None:
        return config_value
    env = os.environ.get(SEED_ENV_VAR)
    if env is not None:
        try:
            return int(env)
        except ValueError:
            raise ConfigError(f"{SEED_ENV_VAR} must be an integer, got {env!r}") from None
    return None


def cmd_gen(args) -> int:
    from .dataio import generate_to_dir
    from .presets import PRESETS, load_config, spec_from_config

    if (args.preset is None) == (args.config is None):
        raise ConfigError("gen needs exactly one of --preset or --config")
    if args.preset is not None:
        if args.preset not in PRESETS:
            raise ConfigError(f"unknown preset {args.preset!r}; "
                              f"available: {sorted(PRESETS)}")
        seed = _resolve_seed(args.seed)
        spec = PRESETS[args.preset](seed=seed)
    else:
        config = load_config(args.config)
        seed = _resolve_seed(args.seed, config.get("seed"))
        if seed is not None:
            config = dict(config, seed=seed)
        spec = spec_from_config(config)
    log.info("generating %s grid: %d samples -> %s", spec.dataset_kind,
             spec.sample_count(), args.out)
    generate_to_dir(spec, args.out, workers=args.workers,
                    keep_partial=args.keep_partial, reproducible=args.reproducible)
    print(f"wrote {args.out}")
    return 0


def cmd_thin(args) -> int:
    from .dataio import read_dataset, write_dataset
    from .forge import thin_dataset

    if not 0.0 <= args.ratio <= 1.0:
        raise ConfigError(f"--ratio must lie in [0, 1], got {args.ratio}")
    seed = _resolve_seed(args.seed)
    if seed is None:
        seed = 0
    ds = read_dataset(args.input)
    out = thin_dataset(ds, args.ratio, seed)
    write_dataset(out, args.out, reproducible=args.reproducible)
    print(f"wrote {args.out}")
    return 0


def cmd_eval(args) -> int:
    from .dataio import read_dataset
    from .evaluate import CentroidClassifier, evaluate_dataset, write_report

    if args.model != "centroid":
        raise ConfigError(f"unknown model {args.model!r}; built-in models: centroid")
    ds = read_dataset(args.dataset)
    seed = _resolve_seed(args.seed)
    report = evaluate_dataset(ds, {"centroid": CentroidClassifier()},
                              n_folds=args.folds, seed=0 if seed is None else seed)
    write_report(report, args.out, ds=ds)
    print(f"wrote {args.out}")
    for cell, model, mean, std in report.summary_lines():
        print(f"{cell}\t{model}\t{mean:.4f}\t+-{std:.4f}")
    return 0


def cmd_linkbudget(args) -> int:
    anchor = SignalAnchor(args.ns_ref, args.d_ref)
    distances = [float(t) for t in args.at.split(",") if t]
    if not distances:
        raise ConfigError("--at needs at least one distance")
    header = "d_km\tn_s"
    if args.energy_ref is not None:
        header += "\tpulse_energy_j"
    print(header)
    for d in distances:
        n_s = anchor.signal_at(d)
        line = f"{d:g}\t{n_s:.6g}"
        if args.energy_ref is not None:
            e = required_pulse_energy(anchor.n_s, d,
                                      (anchor.n_s, anchor.d_km, args.energy_ref))
            line += f"\t{e:.6g}"
        print(line)
    return 0


def cmd_golden(args) -> int:
    from .dataio import read_dataset, write_golden_vectors

    ds = read_dataset(args.dataset)
    write_golden_vectors(ds, args.out, count=args.count)
    print(f"wrote {args.out}")
    return 0


def cmd_export(args) -> int:
    from .dataio import export_csv, read_dataset

    ds = read_dataset(args.dataset)
    export_csv(ds, args.out)
    print(f"wrote {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tof-forge",
        description="Photon-counting LiDAR histogram simulator and evaluation toolkit")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen", help="generate a labeled histogram dataset")
    gen.add_argument("--preset", help="comparison | distance")
    gen.add_argument("--config", help="JSON config file (see README)")
    gen.add_argument("--seed", type=int, help=f"master seed (fallback: ${SEED_ENV_VAR})")
    gen.add_argument("--out", required=True, help="output dataset directory")
    gen.add_argument("--workers", type=int, default=1)
    gen.add_argument("--reproducible", action="store_true",
                     help="omit timestamps so reruns are byte-identical")
    gen.add_argument("--keep-partial", action="store_true",
                     help="skip out-of-window cells instead of aborting")
    gen.set_defaults(func=cmd_gen)

    thin = sub.add_parser("thin", help="binomial-thin an existing dataset")
    thin.add_argument("--input", required=True)
    thin.add_argument("--ratio", type=float, required=True)
    thin.add_argument("--seed", type=int)
    thin.add_argument("--out", required=True)
    thin.add_argument("--reproducible", action="store_true")
    thin.set_defaults(func=cmd_thin)

    ev = sub.add_parser("eval", help="cross-validated baseline evaluation")
    ev.add_argument("--dataset", required=True)
    ev.add_argument("--model", default="centroid")
    ev.add_argument("--folds", type=int, default=10)
    ev.add_argument("--seed", type=int)
    ev.add_argument("--out", required=True, help="report output directory")
    ev.set_defaults(func=cmd_eval)

    lb = sub.add_parser("linkbudget", help="inverse-square signal/energy calculator")
    lb.add_argument("--ns-ref", type=float, default=5000.0,
                    help="signal photons at the reference range")
    lb.add_argument("--d-ref", type=float, default=5.0, help="reference range, km")
    lb.add_argument("--at", required=True, help="comma-separated query ranges, km")
    lb.add_argument("--energy-ref", type=float,
                    help="pulse energy (J) at the reference range; adds an energy column")
    lb.set_defaults(func=cmd_linkbudget)

    gold = sub.add_parser("golden", help="emit preprocessing parity vectors (.npz)")
    gold.add_argument("--dataset", required=True)
    gold.add_argument("--out", required=True)
    gold.add_argument("--count", type=int, default=100)
    gold.set_defaults(func=cmd_golden)

    exp = sub.add_parser("export", help="export a dataset to CSV")
    exp.add_argument("--dataset", required=True)
    exp.add_argument("--out", required=True, help="output .csv path")
    exp.set_defaults(func=cmd_export)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (TofForgeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
