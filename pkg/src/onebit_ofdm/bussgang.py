"""Bussgang linearization of the 1-bit DACs and the resulting per-user,
per-subcarrier SINDR.

Every BN x BN covariance of the stacked time-domain vector is block
circulant, because the precoder is block diagonal in frequency.  It is
stored as its N distinct B x B blocks ``C(m)``, where block ``(n, n')`` of
the dense matrix equals ``C((n - n') mod N)``.  The DFT along the block
axis gives the per-subcarrier matrices ``Chat_k = sum_m C(m) exp(-2j*pi*k*m/N)``;
for the precoded signal ``Chat_k = P_k P_k^H``.  This keeps full-size
problems (B=128, N=512) at O(N B^2 log N) instead of a 65536^2 dense
matrix.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from onebit_ofdm.channel import ChannelRealization
from onebit_ofdm.config import Dac, SystemConfig
from onebit_ofdm.precoding import PrecodingSet

ARCSIN_TOL = 1e-9
DISTORTION_TOL = 1e-9


class CovarianceError(ValueError):
    pass


@dataclass(frozen=True)
class BlockCirculantCovariance:
    blocks: np.ndarray  # (N, B, B)

    @property
    def N(self) -> int:
        return self.blocks.shape[0]

    @property
    def B(self) -> int:
        return self.blocks.shape[1]

    def to_dense(self) -> np.ndarray:
        """Dense BN x BN matrix in ``vec`` ordering (antenna index fastest).

        Only sensible for small problems.
        """
        N, B = self.N, self.B
        n = np.arange(N)
        idx = (n[:, None] - n[None, :]) % N
        return self.blocks[idx].transpose(0, 2, 1, 3).reshape(N * B, N * B)

    def to_frequency_blocks(self) -> np.ndarray:
        return to_frequency_blocks(self)

    def hermitian_defect(self) -> float:
        """max_m |C((N-m) mod N) - C(m)^H|; zero for a Hermitian matrix."""
        mirrored = self.blocks[(-np.arange(self.N)) % self.N]
        return float(np.max(np.abs(mirrored - self.blocks.conj().transpose(0, 2, 1))))


@dataclass(frozen=True)
class BussgangGain:
    """Per-antenna gains; the full gain matrix is ``I_N kron diag(g)``."""

    g: np.ndarray

    def matrix(self, N: int) -> np.ndarray:
        return np.kron(np.eye(N), np.diag(self.g))


@dataclass(frozen=True)
class SindrGrid:
    """Per-term powers on the occupied subcarriers, each of shape (S, U).

    Row ``i`` belongs to subcarrier ``occupied[i]``.
    """

    occupied: np.ndarray
    signal: np.ndarray
    interference: np.ndarray
    distortion: np.ndarray
    N0: float

    @property
    def gamma(self) -> np.ndarray:
        den = self.interference + self.distortion + self.N0
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(den > 0, self.signal / np.where(den > 0, den, 1.0), np.inf)

    def with_noise(self, N0: float) -> "SindrGrid":
        """Same channel, precoder and distortion at another noise level."""
        return SindrGrid(self.occupied, self.signal, self.interference, self.distortion, float(N0))


def bussgang_gain(pre: PrecodingSet, cfg: SystemConfig) -> BussgangGain:
    """``g_b = sqrt(2PS/(pi B N)) / sqrt([(1/N) sum_k P_k P_k^H]_{b,b})``.

    Infinite-resolution DACs give unit gains.
    """
    if cfg.dac is Dac.INFINITE:
        return BussgangGain(np.ones(pre.B))
    power = np.sum(np.abs(pre.matrices) ** 2, axis=(0, 2)) / pre.N
    dead = np.flatnonzero(power <= 0)
    if dead.size:
        raise CovarianceError(f"antenna {int(dead[0])} carries no power; Bussgang gain undefined")
    scale = 2 * cfg.P * cfg.S / (np.pi * cfg.B * cfg.N)
    return BussgangGain(np.sqrt(scale / power))


def precoder_gram(pre: PrecodingSet) -> np.ndarray:
    """``P_k P_k^H`` for every subcarrier, shape (N, B, B)."""
    P = pre.matrices
    return P @ P.conj().transpose(0, 2, 1)


def covariance_z(pre: PrecodingSet) -> BlockCirculantCovariance:
    """Covariance of the unquantized time-domain signal for unit-power
    Gaussian data: ``C_z(m) = (1/N) sum_k P_k P_k^H exp(2j*pi*k*m/N)``."""
    return BlockCirculantCovariance(np.fft.ifft(precoder_gram(pre), axis=0))


def arcsine_covariance(Cz: BlockCirculantCovariance, cfg: SystemConfig) -> BlockCirculantCovariance:
    """Covariance of the 1-bit quantized signal via the arcsine law.

    Real and imaginary parts of the normalized correlation go through
    ``arcsin`` separately; the result is scaled by ``2PS/(pi B N)``.
    """
    d = np.real(np.diagonal(Cz.blocks[0]))
    if np.any(d <= 0):
        raise CovarianceError(f"antenna {int(np.flatnonzero(d <= 0)[0])} has zero signal variance")
    inv = 1.0 / np.sqrt(d)
    rho = Cz.blocks * (inv[:, None] * inv[None, :])
    # unit by construction; 1-eps would turn into a sqrt(eps) error via arcsin
    idx = np.arange(rho.shape[1])
    rho[0, idx, idx] = 1.0
    worst = max(np.max(np.abs(rho.real)), np.max(np.abs(rho.imag)))
    if worst > 1 + ARCSIN_TOL:
        raise CovarianceError(f"normalized correlation {worst:.12g} exceeds 1; covariance is corrupted")
    re = np.arcsin(np.clip(rho.real, -1.0, 1.0))
    im = np.arcsin(np.clip(rho.imag, -1.0, 1.0))
    scale = 2 * cfg.P * cfg.S / (np.pi * cfg.B * cfg.N)
    return BlockCirculantCovariance(scale * (re + 1j * im))


def distortion_covariance(
    Cx: BlockCirculantCovariance, Cz: BlockCirculantCovariance, gain: BussgangGain
) -> BlockCirculantCovariance:
    """``C_d(m) = C_x(m) - diag(g) C_z(m) diag(g)``."""
    g = gain.g
    return BlockCirculantCovariance(Cx.blocks - g[:, None] * Cz.blocks * g[None, :])


def to_frequency_blocks(C: BlockCirculantCovariance) -> np.ndarray:
    return np.fft.fft(C.blocks, axis=0)


def quadratic_diag(H: np.ndarray, C: np.ndarray) -> np.ndarray:
    """``diag(H_k C_k H_k^H)`` for stacks H (K, U, B), C (K, B, B)."""
    return np.einsum("kub,kub->ku", H @ C, H.conj())


def effective_matrices(ch: ChannelRealization, pre: PrecodingSet, gain: BussgangGain, occupied) -> np.ndarray:
    """``A_k = H_k diag(g) P_k`` on the occupied subcarriers, shape (S, U, U)."""
    occ = np.asarray(occupied, dtype=int)
    return (ch.freq[occ] * gain.g[None, None, :]) @ pre.matrices[occ]


def sindr(
    ch: ChannelRealization,
    pre: PrecodingSet,
    gain: BussgangGain,
    distortion_freq: np.ndarray,
    N0: float,
    occupied=None,
) -> SindrGrid:
    """Signal, MU-interference and distortion powers per (subcarrier, user).

    ``distortion_freq`` holds the per-subcarrier distortion covariances
    ``Chat_d,k``; either all N of them or only the occupied ones (same
    order as ``occupied``).  ``occupied`` defaults to the subcarriers with
    a nonzero precoder.
    """
    if occupied is None:
        occupied = np.flatnonzero(np.any(pre.matrices != 0, axis=(1, 2)))
    occ = np.asarray(occupied, dtype=int)
    A = effective_matrices(ch, pre, gain, occ)
    power = np.abs(A) ** 2
    signal = np.real(np.diagonal(power, axis1=1, axis2=2)).copy()
    interference = power.sum(axis=2) - signal

    Cd = distortion_freq if distortion_freq.shape[0] == occ.size else distortion_freq[occ]
    H = ch.freq[occ]
    q = quadratic_diag(H, Cd)
    scale = np.sum(np.abs(H) ** 2, axis=2) * np.linalg.norm(Cd, axis=(1, 2))[:, None]
    tol = DISTORTION_TOL * scale + 1e-300
    if np.any(np.abs(q.imag) > tol):
        raise CovarianceError("distortion quadratic form has a non-negligible imaginary part")
    D = q.real
    if np.any(D < -tol):
        k, u = np.argwhere(D < -tol)[0]
        raise CovarianceError(f"negative distortion power {D[k, u]:.3g} at subcarrier {occ[k]}, user {u}")
    D = np.maximum(D, 0.0)
    return SindrGrid(occ, signal, interference, D, float(N0))


@dataclass(frozen=True)
class BussgangAnalysis:
    """Everything the closed-form analysis yields for one channel draw.

    ``psd_tx[k] = trace(Chat_x,k)/B`` and ``psd_rx[k] = trace(H_k Chat_x,k
    H_k^H)/U`` (noiseless) over all N subcarriers.  The block-circulant
    covariances are kept only on request since they take N*B^2 entries each.
    """

    gain: BussgangGain
    grid: SindrGrid
    psd_tx: np.ndarray
    psd_rx: np.ndarray
    cz: BlockCirculantCovariance | None = None
    cx: BlockCirculantCovariance | None = None
    cd: BlockCirculantCovariance | None = None


def analyze(
    ch: ChannelRealization,
    pre: PrecodingSet,
    cfg: SystemConfig,
    keep_covariances: bool = False,
) -> BussgangAnalysis:
    occ = np.asarray(cfg.occupied, dtype=int)
    gain = bussgang_gain(pre, cfg)
    gram = precoder_gram(pre)
    if cfg.dac is Dac.INFINITE:
        cz = BlockCirculantCovariance(np.fft.ifft(gram, axis=0)) if keep_covariances else None
        cx = cz
        cx_freq = gram
        cd_occ = np.zeros((occ.size, cfg.B, cfg.B), dtype=complex)
    else:
        cz = BlockCirculantCovariance(np.fft.ifft(gram, axis=0))
        cx = arcsine_covariance(cz, cfg)
        cx_freq = to_frequency_blocks(cx)
        g = gain.g
        cd_occ = cx_freq[occ] - g[:, None] * gram[occ] * g[None, :]
    grid = sindr(ch, pre, gain, cd_occ, cfg.N0, occ)
    psd_tx = np.real(np.trace(cx_freq, axis1=1, axis2=2)) / cfg.B
    psd_rx = np.real(quadratic_diag(ch.freq, cx_freq)).sum(axis=1) / cfg.U
    cd = None
    if keep_covariances:
        cd = distortion_covariance(cx, cz, gain)
    else:
        cz = cx = None
    return BussgangAnalysis(gain, grid, psd_tx, psd_rx, cz, cx, cd)
