"""Scenario description shared by every module.

A :class:`SystemConfig` holds the OFDM numerology, array sizes, power and
noise levels, the precoder / DAC choice and the master seed.  It is frozen;
:func:`validate` checks the invariants and returns the same object, so a
validated config can be passed freely between workers.
"""

from __future__ import annotations

import dataclasses
import enum
import json
import math
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Any


class ConfigError(ValueError):
    """Raised when a configuration violates an invariant.

    ``field`` names the offending key.
    """

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


class Precoder(str, enum.Enum):
    MRT = "mrt"
    ZF = "zf"


class Dac(str, enum.Enum):
    ONE_BIT = "1bit"
    INFINITE = "inf"


class Normalization(str, enum.Enum):
    """How the precoder scaling factor beta is chosen.

    ``REALIZATION`` scales each channel draw so that the occupied precoders
    carry exactly ``P*S`` energy; ``AVERAGE`` uses the ensemble-average
    energy for i.i.d. unit-variance Rayleigh channels instead.
    """

    REALIZATION = "realization"
    AVERAGE = "average"


def default_occupied(N: int, S: int) -> tuple[int, ...]:
    """LTE-style subcarrier layout in DFT index order.

    For ``S == N`` every subcarrier is occupied.  Otherwise the DC carrier
    (index 0) is left empty and ``S`` carriers are split around it: indices
    ``1..ceil(S/2)`` above DC and the ``floor(S/2)`` highest indices (the
    negative frequencies) below it.
    """
    if S == N:
        return tuple(range(N))
    if S > N - 1:
        raise ConfigError("S", f"S={S} does not fit around DC with N={N}")
    upper = (S + 1) // 2
    lower = S // 2
    return tuple(range(1, upper + 1)) + tuple(range(N - lower, N))


@dataclass(frozen=True)
class SubcarrierPlan:
    N: int
    occupied: tuple[int, ...]
    guards: tuple[int, ...]

    @property
    def S(self) -> int:
        return len(self.occupied)

    @property
    def osr(self) -> Fraction:
        return Fraction(self.N, self.S)

    @classmethod
    def from_occupied(cls, N: int, occupied) -> "SubcarrierPlan":
        occ = tuple(int(k) for k in occupied)
        taken = set(occ)
        guards = tuple(k for k in range(N) if k not in taken)
        return cls(N=N, occupied=occ, guards=guards)


@dataclass(frozen=True)
class SystemConfig:
    """All scenario parameters.

    ``P`` is the average transmit power and ``N0`` the noise PSD, both
    linear; the SNR is ``P/N0``.  ``occupied`` lists the data subcarriers in
    DFT index convention (0 is DC).
    """

    B: int
    U: int
    N: int
    S: int
    L: int
    delta_f: float = 15e3
    P: float = 1.0
    N0: float = 0.1
    occupied: tuple[int, ...] = ()
    precoder: Precoder = Precoder.ZF
    dac: Dac = Dac.ONE_BIT
    seed: int = 0
    normalization: Normalization = Normalization.REALIZATION

    @property
    def plan(self) -> SubcarrierPlan:
        return SubcarrierPlan.from_occupied(self.N, self.occupied)

    @property
    def osr(self) -> Fraction:
        return Fraction(self.N, self.S)

    @property
    def sampling_rate(self) -> float:
        return self.N * self.delta_f

    @property
    def snr_db(self) -> float:
        if self.N0 == 0:
            return math.inf
        return 10 * math.log10(self.P / self.N0)

    def replace(self, **changes) -> "SystemConfig":
        return dataclasses.replace(self, **changes)

    def with_snr_db(self, snr_db: float) -> "SystemConfig":
        return self.replace(N0=n0_from_snr_db(snr_db, self.P))

    def to_dict(self) -> dict[str, Any]:
        d = dataclasses.asdict(self)
        d["occupied"] = list(self.occupied)
        for key in ("precoder", "dac", "normalization"):
            d[key] = d[key].value
        return d


def n0_from_snr_db(snr_db: float, P: float = 1.0) -> float:
    if snr_db == -math.inf:
        return math.inf
    return P * 10 ** (-snr_db / 10)


_INT_FIELDS = ("B", "U", "N", "S", "L")


def validate(cfg: SystemConfig) -> SystemConfig:
    """Check every invariant of ``cfg`` and return it unchanged.

    Raises :class:`ConfigError` naming the first violated field.
    """
    for name in _INT_FIELDS:
        value = getattr(cfg, name)
        if isinstance(value, bool) or not isinstance(value, int) or value <= 0:
            raise ConfigError(name, f"must be a positive integer, got {value!r}")
    if cfg.S > cfg.N:
        raise ConfigError("S", f"S={cfg.S} exceeds N={cfg.N}")
    if len(cfg.occupied) != cfg.S:
        raise ConfigError("occupied", f"has {len(cfg.occupied)} entries, expected S={cfg.S}")
    if len(set(cfg.occupied)) != len(cfg.occupied):
        raise ConfigError("occupied", "contains duplicate indices")
    if any(not 0 <= k < cfg.N for k in cfg.occupied):
        raise ConfigError("occupied", f"indices must lie in [0, {cfg.N - 1}]")
    if cfg.U > cfg.B:
        raise ConfigError("U", f"U={cfg.U} exceeds B={cfg.B}")
    if cfg.L > cfg.N:
        raise ConfigError("L", f"L={cfg.L} exceeds N={cfg.N}")
    if not cfg.P > 0:
        raise ConfigError("P", "must be positive")
    if not cfg.N0 >= 0:
        raise ConfigError("N0", "must be non-negative")
    if not cfg.delta_f > 0:
        raise ConfigError("delta_f", "must be positive")
    for name, kind in (("precoder", Precoder), ("dac", Dac), ("normalization", Normalization)):
        if not isinstance(getattr(cfg, name), kind):
            raise ConfigError(name, f"must be a {kind.__name__}")
    if isinstance(cfg.seed, bool) or not isinstance(cfg.seed, int) or not 0 <= cfg.seed < 2**64:
        raise ConfigError("seed", "must be an unsigned 64-bit integer")
    return cfg


def make_config(B: int, U: int, N: int, S: int, L: int, occupied=None, **kw) -> SystemConfig:
    """Build and validate a config, using :func:`default_occupied` if no
    subcarrier set is given."""
    if occupied is None:
        occupied = default_occupied(N, S)
    for name, kind in (("precoder", Precoder), ("dac", Dac), ("normalization", Normalization)):
        if name in kw and not isinstance(kw[name], kind):
            try:
                kw[name] = kind(kw[name])
            except ValueError as exc:
                raise ConfigError(name, str(exc)) from None
    return validate(SystemConfig(B=B, U=U, N=N, S=S, L=L, occupied=tuple(occupied), **kw))


def reference_scenario(**overrides) -> SystemConfig:
    """B=128, U=16, N=512, S=300, L=4, 15 kHz spacing, 150+150 carriers
    around an empty DC."""
    params: dict[str, Any] = dict(B=128, U=16, N=512, S=300, L=4, delta_f=15e3)
    params.update(overrides)
    return make_config(**params)


_KEYS = {f.name for f in dataclasses.fields(SystemConfig)}


def config_from_dict(data: dict[str, Any]) -> SystemConfig:
    unknown = sorted(set(data) - _KEYS)
    if unknown:
        raise ConfigError(unknown[0], "unknown key")
    missing = [k for k in _INT_FIELDS if k not in data]
    if missing:
        raise ConfigError(missing[0], "missing required key")
    params = dict(data)
    for key in ("delta_f", "P", "N0"):
        if key in params:
            params[key] = float(params[key])
    return make_config(**params)


def load_config(path) -> SystemConfig:
    """Read a JSON config file; unknown keys are rejected."""
    with open(Path(path)) as fh:
        data = json.load(fh)
    if not isinstance(data, dict):
        raise ConfigError("<root>", "config file must hold a JSON object")
    return config_from_dict(data)


def save_config(cfg: SystemConfig, path) -> None:
    Path(path).write_text(json.dumps(cfg.to_dict(), indent=2) + "\n")
