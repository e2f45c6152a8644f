"""Command-line entry point: ``onebit-ofdm <experiment> [options]``."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from onebit_ofdm.config import ConfigError, Dac, Precoder, load_config, reference_scenario
from onebit_ofdm.engine import (
    DEFAULT_OSRS,
    Experiment,
    ExperimentKind,
    osr_to_n,
    parse_float_list,
    run,
)

_DEFAULT_SNR = {
    ExperimentKind.BER_UNCODED: "-10,-5,0,5,10,15,20",
    ExperimentKind.BER_CODED: "-6,-4,-2,0,2,4,6",
    ExperimentKind.SUM_RATE: "-10,-5,0,5,10,13,15,20,25,30",
    ExperimentKind.PSD: "10",
    ExperimentKind.OSR_SWEEP: "10",
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="onebit-ofdm",
        description="Massive MU-MIMO-OFDM downlink with 1-bit DACs: simulation and Bussgang analysis.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for kind in ExperimentKind:
        p = sub.add_parser(kind.value)
        p.add_argument("--config", type=Path, help="JSON scenario file (default: B=128 U=16 N=512 S=300 L=4 reference scenario)")
        p.add_argument("--snr-db", nargs="+", default=[_DEFAULT_SNR[kind]],
                       help="SNR points P/N0 in dB, comma- or space-separated")
        p.add_argument("--trials", type=int, default=None, help="trial budget per point")
        p.add_argument("--seed", type=int, default=None, help="master seed (overrides the config)")
        p.add_argument("--out", type=Path, default=Path(f"{kind.value}.csv"))
        p.add_argument("--precoder", choices=[p.value for p in Precoder], default=None,
                       help="restrict to one precoder (default: both)")
        p.add_argument("--dac", choices=[d.value for d in Dac], default=None,
                       help="restrict to one DAC mode (default: both)")
        p.add_argument("--min-trials", type=int, default=10)
        p.add_argument("--target-errors", type=int, default=200,
                       help="stop a point after this many bit errors (0 disables)")
        p.add_argument("--workers", type=int, default=1, help="worker processes for trials")
        p.add_argument("-v", "--verbose", action="store_true")
        if kind is ExperimentKind.OSR_SWEEP:
            p.add_argument("--osr", nargs="+", default=[",".join(str(o) for o in DEFAULT_OSRS)],
                           help="oversampling ratios N/S at fixed S")
            p.add_argument("--n-values", nargs="+", default=None,
                           help="DFT sizes instead of --osr")
        if kind is ExperimentKind.PSD:
            p.add_argument("--symbols", type=int, default=0,
                           help="OFDM symbols per channel draw for the periodogram (0: analytic only)")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    kind = ExperimentKind(args.command)
    try:
        cfg = load_config(args.config) if args.config else reference_scenario()
        if args.seed is not None:
            cfg = cfg.replace(seed=args.seed)
        snr = parse_float_list(args.snr_db)
        cfg = cfg.with_snr_db(snr[0])
        trials = args.trials
        if trials is None:
            trials = 20 if kind is ExperimentKind.PSD else 500
        n_values: tuple[int, ...] = ()
        if kind is ExperimentKind.OSR_SWEEP:
            if args.n_values:
                n_values = tuple(int(v) for v in parse_float_list(args.n_values))
            else:
                n_values = tuple(osr_to_n(cfg.S, o) for o in parse_float_list(args.osr))
        exp = Experiment(
            kind=kind,
            config=cfg,
            snr_db=snr,
            trials=trials,
            out=args.out,
            precoders=(Precoder(args.precoder),) if args.precoder else tuple(Precoder),
            dacs=(Dac(args.dac),) if args.dac else tuple(Dac),
            n_values=n_values,
            min_trials=args.min_trials,
            target_errors=args.target_errors or None,
            psd_symbols=getattr(args, "symbols", 0),
            workers=args.workers,
        )
        path = run(exp)
    except (ConfigError, ValueError, OSError) as exc:
        print(f"onebit-ofdm: error: {exc}", file=sys.stderr)
        return 2
    print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
