"""Rate-1/2 feedforward convolutional code, random bit interleaver and a
hard-decision Viterbi decoder, plus the coded-BER link simulation.

Generator polynomials are given in octal with the most significant bit
tapping the current input, so (0o133, 0o171) is the usual K=7 code.
Codewords are zero-tail terminated: ``K-1`` zeros flush the encoder.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from onebit_ofdm.channel import draw_channel
from onebit_ofdm.config import SystemConfig, n0_from_snr_db
from onebit_ofdm.metrics import (
    TARGET_ERRORS,
    MetricRecord,
    _scenario_id,
    detect_qpsk,
    mean_and_stderr,
    qpsk_map,
)
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


@dataclass(frozen=True)
class CodeConfig:
    K: int = 7
    generators: tuple[int, int] = (0o133, 0o171)
    codeword_bits: int = 6000
    span: int = 10
    interleaver_seed: int = 0

    def __post_init__(self):
        if len(self.generators) != 2:
            raise ValueError("a rate-1/2 code needs exactly two generators")
        if any(g <= 0 or g >= 1 << self.K for g in self.generators):
            raise ValueError(f"generators must be nonzero K={self.K}-bit polynomials")
        if self.codeword_bits % 2:
            raise ValueError("codeword length must be even")
        if self.info_bits <= 0:
            raise ValueError("codeword too short for the termination tail")

    @property
    def info_bits(self) -> int:
        return self.codeword_bits // 2 - (self.K - 1)


def _taps(g: int, K: int) -> np.ndarray:
    # taps[d] multiplies the input delayed by d
    return np.array([(g >> (K - 1 - d)) & 1 for d in range(K)], dtype=np.int64)


def conv_encode(bits: np.ndarray, K: int = 7, generators=(0o133, 0o171)) -> np.ndarray:
    """Encode and terminate; input (..., T) gives output (..., 2(T+K-1)).

    Output bits alternate between the two generators.
    """
    bits = np.asarray(bits, dtype=np.int64)
    lead = bits.shape[:-1]
    flat = bits.reshape(-1, bits.shape[-1])
    T = flat.shape[1]
    out = np.empty((flat.shape[0], T + K - 1, 2), dtype=np.uint8)
    for j, g in enumerate(generators):
        taps = _taps(g, K)
        for r in range(flat.shape[0]):
            out[r, :, j] = np.convolve(flat[r], taps) & 1
    return out.reshape(lead + (2 * (T + K - 1),))


def encode_codeword(info: np.ndarray, code: CodeConfig) -> np.ndarray:
    info = np.asarray(info)
    if info.shape[-1] != code.info_bits:
        raise ValueError(f"expected {code.info_bits} information bits, got {info.shape[-1]}")
    return conv_encode(info, code.K, code.generators)


class _Trellis:
    """Predecessor structure of the shift-register state machine.

    State = last K-1 inputs, newest in the most significant bit.  Each next
    state ``s`` has predecessors ``((s << 1) | x) & mask`` for x in {0, 1},
    and the input that led to ``s`` is its top bit.
    """

    def __init__(self, K: int, generators):
        self.K = K
        n = 1 << (K - 1)
        mask = n - 1
        s = np.arange(n)
        self.pred = np.stack([((s << 1) | x) & mask for x in (0, 1)], axis=1)
        reg = np.stack([(s << 1) | x for x in (0, 1)], axis=1)  # full K-bit register
        outs = []
        for g in generators:
            outs.append(np.vectorize(lambda r, g=g: bin(int(r) & g).count("1") & 1)(reg))
        self.out = np.stack(outs, axis=-1).astype(np.int64)  # (n, 2, 2)
        self.input_bit = (s >> (K - 2)) if K > 1 else np.zeros(n, dtype=np.int64)
        # Hamming branch metric for each received pair r0*2+r1
        rx = np.array([[0, 0], [0, 1], [1, 0], [1, 1]])
        self.metric = (self.out[None] != rx[:, None, None, :]).sum(axis=-1)  # (4, n, 2)


def viterbi_decode_hard(
    coded: np.ndarray, K: int = 7, generators=(0o133, 0o171), terminated: bool = True
) -> np.ndarray:
    """Maximum-likelihood sequence decoding over the Hamming metric.

    ``coded`` has shape (..., 2T); returns (..., T-(K-1)) information bits
    when ``terminated`` (tail stripped), else (..., T).  Ties prefer the
    predecessor with the lower register bit.
    """
    coded = np.asarray(coded, dtype=np.int64)
    if coded.shape[-1] % 2:
        raise ValueError("coded length must be even")
    lead = coded.shape[:-1]
    rx = coded.reshape(-1, coded.shape[-1] // 2, 2)
    batch, T, _ = rx.shape
    tr = _Trellis(K, generators)
    n = tr.pred.shape[0]
    sym = rx[..., 0] * 2 + rx[..., 1]

    big = np.iinfo(np.int64).max // 4
    pm = np.full((batch, n), big, dtype=np.int64)
    pm[:, 0] = 0
    decisions = np.empty((T, batch, n), dtype=np.uint8)
    rows = np.arange(batch)[:, None]
    for t in range(T):
        cand = pm[:, tr.pred] + tr.metric[sym[:, t]]  # (batch, n, 2)
        choice = (cand[..., 1] < cand[..., 0]).astype(np.uint8)
        decisions[t] = choice
        pm = np.where(choice == 1, cand[..., 1], cand[..., 0])
        pm -= pm.min(axis=1, keepdims=True)

    state = np.zeros(batch, dtype=np.int64) if terminated else np.argmin(pm, axis=1)
    bits = np.empty((batch, T), dtype=np.uint8)
    for t in range(T - 1, -1, -1):
        bits[:, t] = tr.input_bit[state]
        state = tr.pred[state, decisions[t, rows[:, 0], state]]
    if terminated:
        bits = bits[:, : T - (K - 1)]
    return bits.reshape(lead + (bits.shape[-1],))


def interleaver_permutation(length: int, seed: int) -> np.ndarray:
    return np.random.default_rng(np.random.SeedSequence(int(seed))).permutation(length)


def interleave(bits: np.ndarray, span: int, seed: int, bits_per_symbol: int) -> np.ndarray:
    """Seeded uniform random permutation along the last axis.

    The block covers ``span`` OFDM symbols of ``bits_per_symbol`` bits each.
    """
    bits = np.asarray(bits)
    if bits.shape[-1] != span * bits_per_symbol:
        raise ValueError(f"expected {span * bits_per_symbol} bits, got {bits.shape[-1]}")
    return bits[..., interleaver_permutation(bits.shape[-1], seed)]


def deinterleave(bits: np.ndarray, span: int, seed: int, bits_per_symbol: int) -> np.ndarray:
    bits = np.asarray(bits)
    if bits.shape[-1] != span * bits_per_symbol:
        raise ValueError(f"expected {span * bits_per_symbol} bits, got {bits.shape[-1]}")
    out = np.empty_like(bits)
    out[..., interleaver_permutation(bits.shape[-1], seed)] = bits
    return out


@dataclass(frozen=True)
class CodedTrial:
    errors: tuple[int, ...]
    bits: int


def coded_trial(
    cfg: SystemConfig,
    code: CodeConfig,
    snr_db: Sequence[float],
    trial: int,
    active: Sequence[bool] | None = None,
) -> CodedTrial:
    """One codeword per user spread over ``code.span`` OFDM symbols, with a
    fresh channel on every OFDM symbol."""
    if 2 * cfg.S * code.span != code.codeword_bits:
        raise ValueError(
            f"codeword of {code.codeword_bits} bits does not fill {code.span} OFDM symbols of {cfg.S} QPSK carriers"
        )
    if active is None:
        active = [True] * len(snr_db)
    U, S, span = cfg.U, cfg.S, code.span
    info = seed_schedule(cfg.seed, trial, "data").integers(0, 2, size=(U, code.info_bits), dtype=np.uint8)
    tx = interleave(encode_codeword(info, code), span, code.interleaver_seed, 2 * S)
    # (U, span*S*2) -> (span, S, U, 2)
    tx_bits = tx.reshape(U, span, S, 2).transpose(1, 2, 0, 3)

    rx_bits = {i: np.empty_like(tx_bits) for i in range(len(snr_db)) if active[i]}
    for j in range(span):
        ch = draw_channel(cfg, seed_schedule(cfg.seed, trial, "channel", j))
        pre = build_precoder(ch, cfg)
        grid = map_subcarriers(qpsk_map(tx_bits[j]), cfg.occupied, cfg.N)
        y_clean = apply_channel(quantize(precoded_time_signal(precode(grid, pre.matrices)), cfg), ch)
        for i in rx_bits:
            N0 = n0_from_snr_db(snr_db[i], cfg.P)
            y = y_clean + crandn(seed_schedule(cfg.seed, trial, "noise", i, j), y_clean.shape, var=N0)
            rx_bits[i][j] = detect_qpsk(extract_subcarriers(receive_dft(y), cfg.occupied))

    errors = []
    for i in range(len(snr_db)):
        if i not in rx_bits:
            errors.append(0)
            continue
        per_user = rx_bits[i].transpose(2, 0, 1, 3).reshape(U, -1)
        decoded = viterbi_decode_hard(
            deinterleave(per_user, span, code.interleaver_seed, 2 * S), code.K, code.generators
        )
        errors.append(int(np.count_nonzero(decoded != info)))
    return CodedTrial(tuple(errors), info.size)


def coded_ber_sim(
    cfg: SystemConfig,
    code: CodeConfig,
    snr_db: Sequence[float],
    trials: int,
    *,
    min_trials: int = 2,
    target_errors: int | None = TARGET_ERRORS,
    scenario_id: str | None = None,
) -> list[MetricRecord]:
    """Monte Carlo coded BER (information bits) per SNR point, with the
    same early-stopping rule as the uncoded simulation."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    snr_db = [float(s) for s in snr_db]
    n_pts = len(snr_db)
    per_trial: list[list[float]] = [[] for _ in range(n_pts)]
    errors = [0] * n_pts
    min_trials = min(min_trials, trials)

    def still_active(i: int) -> bool:
        done = len(per_trial[i])
        if done >= trials:
            return False
        if target_errors is None or done < min_trials:
            return True
        return errors[i] < target_errors

    t = 0
    while any(still_active(i) for i in range(n_pts)):
        active = [still_active(i) for i in range(n_pts)]
        res = coded_trial(cfg, code, snr_db, t, active)
        for i in range(n_pts):
            if active[i]:
                errors[i] += res.errors[i]
                per_trial[i].append(res.errors[i] / res.bits)
        t += 1

    sid = scenario_id or _scenario_id(cfg)
    records = []
    for i, snr in enumerate(snr_db):
        mean, se = mean_and_stderr(per_trial[i])
        if len(per_trial[i]) < 2:
            nbits = cfg.U * code.info_bits
            se = math.sqrt(max(mean * (1 - mean), 0.0) / nbits)
        records.append(
            MetricRecord(sid, cfg.precoder.value, cfg.dac.value, snr, "coded-ber-sim", mean, se, len(per_trial[i]))
        )
    return records
