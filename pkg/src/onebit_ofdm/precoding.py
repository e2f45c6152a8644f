"""Linear MRT and ZF precoders in the frequency domain."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from onebit_ofdm.channel import ChannelRealization
from onebit_ofdm.config import Normalization, Precoder, SystemConfig

# Gram matrices with a larger condition number are treated as singular.
MAX_GRAM_CONDITION = 1e12


class SingularChannelError(np.linalg.LinAlgError):
    def __init__(self, subcarrier: int, cond: float):
        super().__init__(f"channel Gram matrix on subcarrier {subcarrier} is singular (cond={cond:.3g})")
        self.subcarrier = subcarrier


@dataclass(frozen=True)
class PrecodingSet:
    """Precoders ``P_k`` of shape (N, B, U), zero on guard subcarriers.

    ``beta`` is the normalization constant: ``P_k = H_k^H / (beta*B)`` for
    MRT and ``P_k = H_k^+ / beta`` for ZF.
    """

    matrices: np.ndarray
    beta: float
    kind: Precoder

    @property
    def N(self) -> int:
        return self.matrices.shape[0]

    @property
    def B(self) -> int:
        return self.matrices.shape[1]

    @property
    def U(self) -> int:
        return self.matrices.shape[2]

    def energy(self) -> float:
        """``sum_k trace(P_k P_k^H)``."""
        return float(np.sum(np.abs(self.matrices) ** 2))


def zf_solve(H: np.ndarray, subcarriers=None) -> np.ndarray:
    """Right pseudo-inverse ``H^H (H H^H)^{-1}`` of one or a stack of
    (U x B) matrices.

    Solves against the U x U Gram matrix instead of inverting it.
    ``subcarriers`` labels the stack entries in error messages.
    """
    H = np.asarray(H, dtype=complex)
    single = H.ndim == 2
    Hs = H[None] if single else H
    U, B = Hs.shape[-2:]
    if U > B:
        raise ValueError(f"ZF needs U <= B, got U={U}, B={B}")
    gram = Hs @ Hs.conj().transpose(0, 2, 1)
    cond = np.linalg.cond(gram)
    bad = np.flatnonzero(~(cond < MAX_GRAM_CONDITION))
    if bad.size:
        i = int(bad[0])
        label = int(subcarriers[i]) if subcarriers is not None else i
        raise SingularChannelError(label, float(cond[i]))
    # (H H^H)^{-1} H, then Hermitian transpose
    X = np.linalg.solve(gram, Hs)
    P = X.conj().transpose(0, 2, 1)
    return P[0] if single else P


def _average_energy_per_subcarrier(kind: Precoder, B: int, U: int) -> float:
    # E trace(P P^H) for unnormalized precoders on i.i.d. CN(0,1) channels
    if kind is Precoder.MRT:
        return float(U * B)
    if B == U:
        raise ValueError("average ZF normalization diverges for B == U")
    return U / (B - U)


def build_precoder(ch: ChannelRealization, cfg: SystemConfig) -> PrecodingSet:
    occ = np.asarray(cfg.occupied, dtype=int)
    Hk = ch.freq[occ]
    if cfg.precoder is Precoder.MRT:
        raw = Hk.conj().transpose(0, 2, 1)
    else:
        raw = zf_solve(Hk, subcarriers=occ)

    if cfg.normalization is Normalization.REALIZATION:
        energy = float(np.sum(np.abs(raw) ** 2))
    else:
        energy = cfg.S * _average_energy_per_subcarrier(cfg.precoder, cfg.B, cfg.U)
    scale = np.sqrt(energy / (cfg.P * cfg.S))

    matrices = np.zeros((cfg.N, cfg.B, cfg.U), dtype=complex)
    matrices[occ] = raw / scale
    beta = scale / cfg.B if cfg.precoder is Precoder.MRT else scale
    return PrecodingSet(matrices=matrices, beta=float(beta), kind=cfg.precoder)
