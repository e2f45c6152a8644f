"""Frequency-selective Rayleigh-fading channel with a uniform power-delay
profile.

Tap matrices ``H_l`` (U x B) have i.i.d. CN(0, 1/L) entries, so each
entry of the per-subcarrier response ``Hf_k = sum_l H_l exp(-2j*pi*k*l/N)``
has unit variance.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from onebit_ofdm.config import SystemConfig
from onebit_ofdm.rng import crandn


@dataclass(frozen=True)
class ChannelRealization:
    """One channel draw.

    ``taps`` has shape (L, U, B); ``freq`` has shape (N, U, B) and holds the
    response on every subcarrier, guards included.
    """

    taps: np.ndarray
    freq: np.ndarray

    @property
    def L(self) -> int:
        return self.taps.shape[0]

    @property
    def N(self) -> int:
        return self.freq.shape[0]

    @property
    def U(self) -> int:
        return self.taps.shape[1]

    @property
    def B(self) -> int:
        return self.taps.shape[2]

    def scaled(self, alpha: complex) -> "ChannelRealization":
        return ChannelRealization(self.taps * alpha, self.freq * alpha)


def frequency_response(taps: np.ndarray, N: int) -> np.ndarray:
    """Per-subcarrier channel matrices, shape (N, U, B).

    Length-``N`` FFT of the zero-padded tap sequence of every matrix entry.
    """
    taps = np.asarray(taps, dtype=complex)
    if taps.ndim != 3 or taps.shape[0] == 0:
        raise ValueError("taps must have shape (L, U, B) with L >= 1")
    if taps.shape[0] > N:
        raise ValueError(f"tap count L={taps.shape[0]} exceeds N={N}")
    return np.fft.fft(taps, n=N, axis=0)


def draw_channel(cfg: SystemConfig, rng: np.random.Generator) -> ChannelRealization:
    taps = crandn(rng, (cfg.L, cfg.U, cfg.B), var=1.0 / cfg.L)
    return ChannelRealization(taps=taps, freq=frequency_response(taps, cfg.N))


def save_channel(ch: ChannelRealization, path) -> None:
    """Dump a realization for regression tests.

    ``.json`` stores nested ``[re, im]`` pairs; any other suffix writes a
    raw little-endian float64 file (a 4-int64 header L, U, B, N followed by
    the taps, row-major, as interleaved re/im pairs).
    """
    path = Path(path)
    if path.suffix == ".json":
        taps = np.stack([ch.taps.real, ch.taps.imag], axis=-1)
        path.write_text(json.dumps({"N": ch.N, "taps": taps.tolist()}))
        return
    header = np.array([ch.L, ch.U, ch.B, ch.N], dtype="<i8")
    body = np.ascontiguousarray(ch.taps).view(np.float64).astype("<f8")
    with open(path, "wb") as fh:
        fh.write(header.tobytes())
        fh.write(body.tobytes())


def load_channel(path) -> ChannelRealization:
    path = Path(path)
    if path.suffix == ".json":
        data = json.loads(path.read_text())
        pairs = np.asarray(data["taps"], dtype=float)
        taps = pairs[..., 0] + 1j * pairs[..., 1]
        N = int(data["N"])
    else:
        raw = path.read_bytes()
        L, U, B, N = (int(v) for v in np.frombuffer(raw[:32], dtype="<i8"))
        flat = np.frombuffer(raw[32:], dtype="<f8")
        taps = (flat[0::2] + 1j * flat[1::2]).reshape(L, U, B)
    return ChannelRealization(taps=taps, freq=frequency_response(taps, N))
