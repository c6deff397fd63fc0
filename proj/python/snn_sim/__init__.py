"""Integrate-and-fire SNN simulator: neuron models, conversion, inference, energy."""

from ._core import (
    ActivationStats,
    CalibrationError,
    ConfigurationError,
    DataError,
    EnergyModelParams,
    Error,
    FormatError,
    IdealIFParams,
    NetworkSpec,
    ResetMode,
    TimeDomainParams,
    VoltageDomainParams,
    WeightsBundle,
    __version__,
    ann_forward,
    convert,
    energy_per_neuron,
    evaluate,
    fit_two_anchors,
    load_bundle,
    max_firing_rate,
    power_per_neuron,
    read_idx,
    run_cli,
    save_bundle,
    spike_train,
    voltage_domain_increment,
)

__all__ = [name for name in dir() if not name.startswith("_")]
