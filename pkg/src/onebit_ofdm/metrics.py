"""BER, sum-rate and PSD metrics, both closed-form and simulated."""

from __future__ import annotations

import csv
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
from scipy.special import erfc

from onebit_ofdm.bussgang import SindrGrid, analyze, quadratic_diag, to_frequency_blocks
from onebit_ofdm.channel import ChannelRealization, draw_channel
from onebit_ofdm.config import SystemConfig, n0_from_snr_db
from onebit_ofdm.ofdm import (
    apply_channel,
    extract_subcarriers,
    map_subcarriers,
    precode,
    precoded_time_signal,
    quantize,
    receive_dft,
)
from onebit_ofdm.precoding import build_precoder
from onebit_ofdm.rng import crandn, seed_schedule

TARGET_ERRORS = 200

CSV_COLUMNS = ("scenario_id", "precoder", "dac_mode", "snr_db", "metric", "value", "stderr", "trials")


@dataclass(frozen=True)
class MetricRecord:
    scenario_id: str
    precoder: str
    dac_mode: str
    snr_db: float
    metric: str
    value: float
    stderr: float
    trials: int


def write_csv(records: Iterable[MetricRecord], path) -> None:
    with open(Path(path), "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for rec in records:
            writer.writerow([_fmt(getattr(rec, f.name)) for f in fields(rec)])


def read_csv(path) -> list[MetricRecord]:
    with open(Path(path), newline="") as fh:
        rows = list(csv.DictReader(fh))
    return [
        MetricRecord(
            r["scenario_id"], r["precoder"], r["dac_mode"], float(r["snr_db"]),
            r["metric"], float(r["value"]), float(r["stderr"]), int(r["trials"]),
        )
        for r in rows
    ]


def _fmt(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def qfunc(x):
    """Gaussian tail probability ``Q(x) = erfc(x/sqrt(2))/2``."""
    return 0.5 * erfc(np.asarray(x, dtype=float) / np.sqrt(2.0))


def ber_qpsk_approx(grid: SindrGrid) -> float:
    """Uncoded QPSK BER under a Gaussian model of interference, distortion
    and noise: the mean of ``Q(sqrt(gamma))`` over users and occupied
    subcarriers."""
    return float(np.mean(qfunc(np.sqrt(grid.gamma))))


def sum_rate(grid: SindrGrid) -> float:
    """Achievable sum rate in bits per channel use,
    ``(1/S) sum_k sum_u log2(1 + gamma)``."""
    return float(np.sum(np.log2(1.0 + grid.gamma)) / grid.gamma.shape[0])


def qpsk_map(bits: np.ndarray) -> np.ndarray:
    """Gray-mapped QPSK: bit pair (b0, b1) -> ((1-2 b0) + j(1-2 b1))/sqrt(2).

    ``bits`` has a trailing axis of length 2.
    """
    bits = np.asarray(bits, dtype=np.int8)
    return ((1 - 2 * bits[..., 0]) + 1j * (1 - 2 * bits[..., 1])) / np.sqrt(2)


def detect_qpsk(y: np.ndarray) -> np.ndarray:
    """Quadrant decisions; returns bits with a trailing axis of length 2."""
    y = np.asarray(y)
    return np.stack([y.real < 0, y.imag < 0], axis=-1).astype(np.uint8)


def mean_and_stderr(values: Sequence[float]) -> tuple[float, float]:
    n = len(values)
    mean = math.fsum(values) / n
    if n < 2:
        return mean, 0.0
    var = math.fsum((v - mean) ** 2 for v in values) / (n - 1)
    return mean, math.sqrt(var / n)


def _scenario_id(cfg: SystemConfig) -> str:
    return f"B{cfg.B}-U{cfg.U}-N{cfg.N}-S{cfg.S}-L{cfg.L}"


# ---------------------------------------------------------------------------
# uncoded BER


@dataclass(frozen=True)
class UncodedTrial:
    errors: tuple[int, ...]
    bits: int
    analytic: tuple[float, ...]


def uncoded_trial(
    cfg: SystemConfig,
    snr_db: Sequence[float],
    trial: int,
    active: Sequence[bool] | None = None,
    analytic: bool = True,
) -> UncodedTrial:
    """One channel draw, one OFDM symbol of random QPSK per user.

    Simulated bit errors and the closed-form BER are computed for every
    SNR point on the same channel; inactive points are skipped.
    """
    if active is None:
        active = [True] * len(snr_db)
    ch = draw_channel(cfg, seed_schedule(cfg.seed, trial, "channel"))
    pre = build_precoder(ch, cfg)
    bits = seed_schedule(cfg.seed, trial, "data").integers(0, 2, size=(cfg.S, cfg.U, 2), dtype=np.uint8)
    grid = map_subcarriers(qpsk_map(bits), cfg.occupied, cfg.N)
    x = quantize(precoded_time_signal(precode(grid, pre.matrices)), cfg)
    y_clean = apply_channel(x, ch)

    errors = []
    for i, snr in enumerate(snr_db):
        if not active[i]:
            errors.append(0)
            continue
        N0 = n0_from_snr_db(snr, cfg.P)
        y = y_clean + crandn(seed_schedule(cfg.seed, trial, "noise", i), y_clean.shape, var=N0)
        yhat = extract_subcarriers(receive_dft(y), cfg.occupied)
        errors.append(int(np.count_nonzero(detect_qpsk(yhat) != bits)))

    approx: list[float] = []
    if analytic:
        base = analyze(ch, pre, cfg).grid
        approx = [
            ber_qpsk_approx(base.with_noise(n0_from_snr_db(snr, cfg.P))) if active[i] else math.nan
            for i, snr in enumerate(snr_db)
        ]
    return UncodedTrial(tuple(errors), bits.size, tuple(approx))


def _run_trials(fn, args_list, workers: int):
    if workers <= 1:
        return [fn(*args) for args in args_list]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, *zip(*args_list)))


def uncoded_ber_sim(
    cfg: SystemConfig,
    snr_db: Sequence[float],
    trials: int,
    *,
    min_trials: int = 10,
    target_errors: int | None = TARGET_ERRORS,
    analytic: bool = True,
    workers: int = 1,
    scenario_id: str | None = None,
) -> list[MetricRecord]:
    """Monte Carlo uncoded BER with the closed-form companion.

    Each SNR point keeps drawing trials until ``target_errors`` bit errors
    are collected (and at least ``min_trials`` trials ran) or the budget
    ``trials`` is spent.  The analytic BER is averaged over the same
    channel draws as the simulated one.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    snr_db = [float(s) for s in snr_db]
    n_pts = len(snr_db)
    per_trial_ber: list[list[float]] = [[] for _ in range(n_pts)]
    per_trial_approx: list[list[float]] = [[] for _ in range(n_pts)]
    errors = [0] * n_pts
    min_trials = min(min_trials, trials)

    def still_active(i: int) -> bool:
        done = len(per_trial_ber[i])
        if done >= trials:
            return False
        if target_errors is None or done < min_trials:
            return True
        return errors[i] < target_errors

    t = 0
    chunk = max(1, workers)
    while any(still_active(i) for i in range(n_pts)):
        active = [still_active(i) for i in range(n_pts)]
        batch = [(cfg, snr_db, t + j, active, analytic) for j in range(chunk)]
        for res in _run_trials(uncoded_trial, batch, workers):
            for i in range(n_pts):
                if not (active[i] and still_active(i)):
                    continue
                errors[i] += res.errors[i]
                per_trial_ber[i].append(res.errors[i] / res.bits)
                if analytic:
                    per_trial_approx[i].append(res.analytic[i])
        t += chunk

    sid = scenario_id or _scenario_id(cfg)
    records = []
    for i, snr in enumerate(snr_db):
        vals = per_trial_ber[i]
        mean, se = mean_and_stderr(vals)
        if len(vals) < 2:
            nbits = 2 * cfg.U * cfg.S
            se = math.sqrt(max(mean * (1 - mean), 0.0) / nbits)
        records.append(MetricRecord(sid, cfg.precoder.value, cfg.dac.value, snr, "uncoded-ber-sim", mean, se, len(vals)))
        if analytic:
            amean, ase = mean_and_stderr(per_trial_approx[i])
            records.append(
                MetricRecord(sid, cfg.precoder.value, cfg.dac.value, snr, "uncoded-ber-analytic", amean, ase, len(vals))
            )
    return records


# ---------------------------------------------------------------------------
# closed-form curves


def analytic_trial(cfg: SystemConfig, trial: int) -> SindrGrid:
    """SINDR terms for one channel draw (noise level taken from ``cfg``)."""
    ch = draw_channel(cfg, seed_schedule(cfg.seed, trial, "channel"))
    return analyze(ch, build_precoder(ch, cfg), cfg).grid


def analytic_curves(
    cfg: SystemConfig,
    snr_db: Sequence[float],
    trials: int,
    *,
    workers: int = 1,
    scenario_id: str | None = None,
) -> list[MetricRecord]:
    """Trial-averaged closed-form BER and sum-rate lower bound.

    The Bussgang terms do not depend on the noise level, so one analysis per
    channel draw serves every SNR point.
    """
    grids = _run_trials(analytic_trial, [(cfg, t) for t in range(trials)], workers)
    sid = scenario_id or _scenario_id(cfg)
    records = []
    for snr in snr_db:
        N0 = n0_from_snr_db(snr, cfg.P)
        bers = [ber_qpsk_approx(g.with_noise(N0)) for g in grids]
        rates = [sum_rate(g.with_noise(N0)) for g in grids]
        for name, vals in (("uncoded-ber-analytic", bers), ("sum-rate", rates)):
            mean, se = mean_and_stderr(vals)
            records.append(MetricRecord(sid, cfg.precoder.value, cfg.dac.value, float(snr), name, mean, se, trials))
    return records


# ---------------------------------------------------------------------------
# PSD


def psd_transmit_analytic(Cx) -> np.ndarray:
    """Per-subcarrier transmit PSD averaged over antennas,
    ``trace(Chat_x,k)/B``."""
    Ck = to_frequency_blocks(Cx)
    return np.real(np.trace(Ck, axis1=1, axis2=2)) / Cx.B


def psd_receive_analytic(ch: ChannelRealization, Cx) -> np.ndarray:
    """Noiseless receive PSD averaged over users,
    ``trace(H_k Chat_x,k H_k^H)/U``."""
    Ck = to_frequency_blocks(Cx)
    return np.real(quadratic_diag(ch.freq, Ck)).sum(axis=1) / ch.U


def psd_estimate(signals: np.ndarray, min_symbols: int = 100) -> np.ndarray:
    """Averaged periodogram of time signals with shape (symbols, N, D).

    Uses the unitary DFT, so the estimate is directly comparable to the
    analytic PSDs.
    """
    signals = np.asarray(signals)
    if signals.ndim != 3:
        raise ValueError("signals must have shape (symbols, N, D)")
    if signals.shape[0] < min_symbols:
        raise ValueError(f"need at least {min_symbols} OFDM symbols, got {signals.shape[0]}")
    spec = np.abs(np.fft.fft(signals, axis=1, norm="ortho")) ** 2
    return spec.mean(axis=(0, 2))


def normalize_psd_db(psd: np.ndarray, occupied) -> np.ndarray:
    """PSD in dB relative to its in-band maximum."""
    psd = np.asarray(psd, dtype=float)
    ref = np.max(psd[np.asarray(occupied, dtype=int)])
    with np.errstate(divide="ignore"):
        return 10 * np.log10(psd / ref)


def out_of_band_indices(cfg: SystemConfig) -> np.ndarray:
    """Guard subcarriers outside the occupied band (the empty DC carrier is
    in-band and excluded)."""
    guards = np.asarray(cfg.plan.guards, dtype=int)
    if cfg.S < cfg.N - 1 and 0 not in cfg.occupied:
        guards = guards[guards != 0]
    return guards


def oob_level_db(psd: np.ndarray, cfg: SystemConfig) -> float:
    """Mean out-of-band PSD relative to the in-band peak, in dB."""
    psd = np.asarray(psd, dtype=float)
    ref = np.max(psd[np.asarray(cfg.occupied, dtype=int)])
    with np.errstate(divide="ignore"):
        return float(10 * np.log10(np.mean(psd[out_of_band_indices(cfg)]) / ref))


@dataclass(frozen=True)
class PsdResult:
    tx_analytic: np.ndarray
    rx_analytic: np.ndarray
    tx_estimate: np.ndarray | None
    rx_estimate: np.ndarray | None
    trials: int
    symbols: int


def psd_experiment(cfg: SystemConfig, trials: int, symbols: int = 0) -> PsdResult:
    """Analytic PSDs averaged over ``trials`` channel draws; when
    ``symbols > 0`` also periodogram estimates from that many QPSK OFDM
    symbols per channel draw."""
    tx = np.zeros(cfg.N)
    rx = np.zeros(cfg.N)
    tx_est = np.zeros(cfg.N) if symbols else None
    rx_est = np.zeros(cfg.N) if symbols else None
    for t in range(trials):
        ch = draw_channel(cfg, seed_schedule(cfg.seed, t, "channel"))
        pre = build_precoder(ch, cfg)
        res = analyze(ch, pre, cfg)
        tx += res.psd_tx / trials
        rx += res.psd_rx / trials
        if symbols:
            rng = seed_schedule(cfg.seed, t, "data")
            for x, y in simulate_symbols(cfg, ch, pre, symbols, rng):
                weight = x.shape[0] / (symbols * trials)
                tx_est += weight * psd_estimate(x, min_symbols=1)
                rx_est += weight * psd_estimate(y, min_symbols=1)
    return PsdResult(tx, rx, tx_est, rx_est, trials, symbols)


def simulate_symbols(cfg, ch, pre, symbols: int, rng: np.random.Generator, batch: int = 50):
    """Transmit ``symbols`` random QPSK OFDM symbols over one channel.

    Yields batches of DAC outputs (n, N, B) and noiseless receive signals
    (n, N, U).
    """
    for start in range(0, symbols, batch):
        n = min(batch, symbols - start)
        bits = rng.integers(0, 2, size=(n, cfg.S, cfg.U, 2), dtype=np.uint8)
        grid = map_subcarriers(qpsk_map(bits), cfg.occupied, cfg.N)
        x = quantize(precoded_time_signal(precode(grid, pre.matrices)), cfg)
        yield x, apply_channel(x, ch)
