"""Spin ensembles coupled to a transmon-loaded microstrip cavity."""

from ._core import (
    ConfigError,
    DimensionError,
    DomainError,
    Ensemble,
    Error,
    NumericalError,
    SpaceTruncation,
    SpinModel,
    SystemParams,
    __version__,
    average_gate_fidelity,
    basis_labels,
    classify_regime,
    cooling_rate,
    dressed_resonance,
    eigenvalues,
    embedded_jc,
    evaluate_gate,
    fit_decay,
    hamiltonian,
    magnetic_coupling,
    max_electric_coupling,
    run_cli,
    spin_count,
    target_unitary,
    validate_effective,
)

__all__ = [name for name in dir() if not name.startswith("_")] + ["__version__"]
