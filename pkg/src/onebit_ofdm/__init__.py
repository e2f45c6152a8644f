"""Massive MU-MIMO-OFDM downlink with 1-bit DACs and linear precoding.

Link-level Monte Carlo simulation and Bussgang-based closed-form analysis
(SINDR, uncoded BER approximation, sum-rate lower bound, PSD).
"""

from onebit_ofdm.config import (
    ConfigError,
    Dac,
    Normalization,
    Precoder,
    SubcarrierPlan,
    SystemConfig,
    default_occupied,
    load_config,
    make_config,
    reference_scenario,
    validate,
)

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "Dac",
    "Normalization",
    "Precoder",
    "SubcarrierPlan",
    "SystemConfig",
    "default_occupied",
    "load_config",
    "make_config",
    "reference_scenario",
    "validate",
    "__version__",
]
