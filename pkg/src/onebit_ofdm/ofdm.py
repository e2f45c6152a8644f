"""OFDM transmit/receive chain: subcarrier mapping, unitary (I)DFT, 1-bit DAC
and the cyclic-prefix channel.

Grids and time signals are arrays of shape ``(..., N, D)``: axis ``-2`` runs
over subcarriers (or time samples) and axis ``-1`` over users or antennas.
Leading axes batch several OFDM symbols.  Both transforms use the unitary
convention, ``1/sqrt(N)`` in each direction.
"""

from __future__ import annotations

import numpy as np

from onebit_ofdm.channel import ChannelRealization
from onebit_ofdm.config import Dac, SystemConfig
from onebit_ofdm.rng import crandn


def map_subcarriers(data: np.ndarray, occupied, N: int) -> np.ndarray:
    """Place per-occupied-subcarrier vectors on an ``N``-carrier grid.

    ``data`` has shape ``(..., S, D)`` in the order of ``occupied``; guard
    rows are zero.
    """
    occupied = np.asarray(occupied, dtype=int)
    data = np.asarray(data)
    if data.shape[-2] != occupied.size:
        raise ValueError(f"got {data.shape[-2]} data vectors for {occupied.size} occupied subcarriers")
    grid = np.zeros(data.shape[:-2] + (N, data.shape[-1]), dtype=complex)
    grid[..., occupied, :] = data
    return grid


def extract_subcarriers(grid: np.ndarray, occupied) -> np.ndarray:
    return grid[..., np.asarray(occupied, dtype=int), :]


def precode(grid: np.ndarray, precoders: np.ndarray) -> np.ndarray:
    """Per-subcarrier precoding ``P_k s_k``: (..., N, U) -> (..., N, B)."""
    return np.einsum("kbu,...ku->...kb", precoders, grid)


def precoded_time_signal(grid: np.ndarray) -> np.ndarray:
    """``z_n = N^{-1/2} sum_k zhat_k exp(2j*pi*k*n/N)``."""
    return np.fft.ifft(grid, axis=-2, norm="ortho")


def receive_dft(y: np.ndarray) -> np.ndarray:
    """``yhat_k = N^{-1/2} sum_n y_n exp(-2j*pi*k*n/N)``."""
    return np.fft.fft(y, axis=-2, norm="ortho")


def dac_level(cfg: SystemConfig) -> float:
    """Per-rail output amplitude sqrt(PS/(2BN)) of the 1-bit DACs."""
    return float(np.sqrt(cfg.P * cfg.S / (2 * cfg.B * cfg.N)))


def one_bit(z: np.ndarray, level: float) -> np.ndarray:
    # sgn(0) = +1
    re = np.where(z.real >= 0, level, -level)
    im = np.where(z.imag >= 0, level, -level)
    return re + 1j * im


def quantize(z: np.ndarray, cfg: SystemConfig) -> np.ndarray:
    """Apply the DACs: sign quantization per rail, or identity for
    infinite resolution."""
    if cfg.dac is Dac.INFINITE:
        return np.asarray(z, dtype=complex)
    return one_bit(np.asarray(z), dac_level(cfg))


def apply_channel(
    x: np.ndarray,
    ch: ChannelRealization,
    N0: float = 0.0,
    rng: np.random.Generator | None = None,
) -> np.ndarray:
    """Multipath channel with an implicit cyclic prefix.

    ``y_n = sum_l H_l x_{(n-l) mod N} + w_n`` with ``w_n ~ CN(0, N0 I_U)``.
    Input shape ``(..., N, B)``, output ``(..., N, U)``.
    """
    x = np.asarray(x)
    y = np.zeros(x.shape[:-1] + (ch.U,), dtype=complex)
    for ell in range(ch.L):
        y += np.roll(x, ell, axis=-2) @ ch.taps[ell].T
    if N0 > 0:
        if rng is None:
            raise ValueError("a random generator is required when N0 > 0")
        y += crandn(rng, y.shape, var=N0)
    return y
