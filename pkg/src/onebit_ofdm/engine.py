"""Experiment orchestration: BER, coded BER, sum-rate, PSD and OSR sweeps.

Every experiment writes one CSV (schema in :data:`metrics.CSV_COLUMNS`) and
a JSON sidecar with the resolved configuration.  The CSV depends only on
the configuration, seed and trial budget; the timestamp lives in the
sidecar.
"""

from __future__ import annotations

import datetime as _dt
import enum
import itertools
import json
import logging
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Sequence

import numpy as np

from onebit_ofdm import __version__
from onebit_ofdm.coding import CodeConfig, coded_ber_sim
from onebit_ofdm.config import Dac, Precoder, SystemConfig, default_occupied, validate
from onebit_ofdm.metrics import (
    MetricRecord,
    analytic_curves,
    psd_experiment,
    uncoded_ber_sim,
    write_csv,
)
from onebit_ofdm.rng import seed_schedule

__all__ = ["Experiment", "ExperimentKind", "run", "seed_schedule", "osr_to_n", "DEFAULT_OSRS"]

log = logging.getLogger(__name__)

DEFAULT_OSRS = (1.0, 1.25, 1.5, 1.7, 2.0, 2.5, 3.0)
DEFAULT_ANALYTIC_TRIALS = 500
DEFAULT_SIM_TRIALS = 500


class ExperimentKind(str, enum.Enum):
    BER_UNCODED = "ber-uncoded"
    BER_CODED = "ber-coded"
    SUM_RATE = "sum-rate"
    PSD = "psd"
    OSR_SWEEP = "osr-sweep"


def osr_to_n(S: int, osr: float) -> int:
    """DFT size realizing an oversampling ratio at fixed occupied count."""
    return int(round(S * Fraction(str(osr))))


@dataclass(frozen=True)
class Experiment:
    """One experiment over every (precoder, DAC) combination listed.

    For ``osr-sweep`` the sweep axis is ``n_values`` (DFT sizes at the base
    config's ``S``) and ``snr_db`` usually holds a single point.
    """

    kind: ExperimentKind
    config: SystemConfig
    snr_db: tuple[float, ...] = (-10.0, -5.0, 0.0, 5.0, 10.0, 15.0, 20.0)
    trials: int = DEFAULT_SIM_TRIALS
    out: Path = Path("results.csv")
    precoders: tuple[Precoder, ...] = (Precoder.MRT, Precoder.ZF)
    dacs: tuple[Dac, ...] = (Dac.ONE_BIT, Dac.INFINITE)
    n_values: tuple[int, ...] = ()
    min_trials: int = 10
    target_errors: int | None = 200
    psd_symbols: int = 0
    workers: int = 1
    code: CodeConfig = field(default_factory=CodeConfig)

    def check(self) -> None:
        validate(self.config)
        if self.trials < 1:
            raise ValueError("trial budget must be >= 1")
        if self.kind is not ExperimentKind.PSD and not self.snr_db:
            raise ValueError("SNR sweep is empty")
        if self.kind is ExperimentKind.OSR_SWEEP:
            if not self.n_values:
                raise ValueError("OSR sweep is empty")
            for n in self.n_values:
                if n < self.config.S:
                    raise ValueError(f"N={n} is smaller than S={self.config.S}")
                if n < self.config.L:
                    raise ValueError(f"N={n} is smaller than L={self.config.L}")

    def to_dict(self) -> dict:
        return {
            "kind": self.kind.value,
            "snr_db": list(self.snr_db),
            "trials": self.trials,
            "precoders": [p.value for p in self.precoders],
            "dacs": [d.value for d in self.dacs],
            "n_values": list(self.n_values),
            "min_trials": self.min_trials,
            "target_errors": self.target_errors,
            "psd_symbols": self.psd_symbols,
            "code": {
                "K": self.code.K,
                "generators": [oct(g) for g in self.code.generators],
                "codeword_bits": self.code.codeword_bits,
                "span": self.code.span,
                "interleaver_seed": self.code.interleaver_seed,
            },
        }


def _combos(exp: Experiment):
    for prec, dac in itertools.product(exp.precoders, exp.dacs):
        yield exp.config.replace(precoder=prec, dac=dac)


def _psd_records(cfg: SystemConfig, exp: Experiment) -> list[MetricRecord]:
    res = psd_experiment(cfg, exp.trials, exp.psd_symbols)
    sid = f"B{cfg.B}-U{cfg.U}-N{cfg.N}-S{cfg.S}-L{cfg.L}"
    rows = []
    series = [("psd-tx", res.tx_analytic), ("psd-rx", res.rx_analytic)]
    if res.tx_estimate is not None:
        series += [("psd-tx-sim", res.tx_estimate), ("psd-rx-sim", res.rx_estimate)]
    for name, values in series:
        for k, v in enumerate(values):
            rows.append(
                MetricRecord(sid, cfg.precoder.value, cfg.dac.value, cfg.snr_db, f"{name}@{k}", float(v), 0.0, exp.trials)
            )
    return rows


def collect(exp: Experiment) -> list[MetricRecord]:
    """Run the experiment and return its records without writing files."""
    exp.check()
    records: list[MetricRecord] = []
    for cfg in _combos(exp):
        log.info("%s: precoder=%s dac=%s", exp.kind.value, cfg.precoder.value, cfg.dac.value)
        if exp.kind is ExperimentKind.BER_UNCODED:
            records += uncoded_ber_sim(
                cfg, exp.snr_db, exp.trials, min_trials=exp.min_trials,
                target_errors=exp.target_errors, workers=exp.workers,
            )
        elif exp.kind is ExperimentKind.BER_CODED:
            records += coded_ber_sim(
                cfg, exp.code, exp.snr_db, exp.trials, min_trials=min(exp.min_trials, 2),
                target_errors=exp.target_errors,
            )
        elif exp.kind is ExperimentKind.SUM_RATE:
            records += [
                r for r in analytic_curves(cfg, exp.snr_db, exp.trials, workers=exp.workers)
                if r.metric == "sum-rate"
            ]
        elif exp.kind is ExperimentKind.PSD:
            records += _psd_records(cfg, exp)
        elif exp.kind is ExperimentKind.OSR_SWEEP:
            for n in exp.n_values:
                sub = validate(cfg.replace(N=int(n), occupied=default_occupied(int(n), cfg.S)))
                sid = f"B{sub.B}-U{sub.U}-N{sub.N}-S{sub.S}-L{sub.L}-osr{float(sub.osr):.4g}"
                records += uncoded_ber_sim(
                    sub, exp.snr_db, exp.trials, min_trials=exp.min_trials,
                    target_errors=exp.target_errors, workers=exp.workers, scenario_id=sid,
                )
        else:  # pragma: no cover
            raise ValueError(f"unknown experiment kind {exp.kind}")
    return records


def run(exp: Experiment) -> Path:
    """Run ``exp``, write the CSV to ``exp.out`` and a ``.json`` sidecar
    next to it.  Returns the CSV path."""
    records = collect(exp)
    out = Path(exp.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    write_csv(records, out)
    sidecar = {
        "software": "onebit_ofdm",
        "version": __version__,
        "numpy": np.__version__,
        "created": _dt.datetime.now(_dt.timezone.utc).isoformat(),
        "csv": out.name,
        "experiment": exp.to_dict(),
        "config": exp.config.to_dict(),
    }
    out.with_suffix(".json").write_text(json.dumps(sidecar, indent=2) + "\n")
    return out


def parse_float_list(values: Sequence[str]) -> tuple[float, ...]:
    """Accept space- and/or comma-separated numbers."""
    out = []
    for v in values:
        out += [float(x) for x in str(v).split(",") if x.strip()]
    return tuple(out)
