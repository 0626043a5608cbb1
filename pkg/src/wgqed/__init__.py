"""Waveguide-coupled single-emitter simulation and analysis toolkit."""

__version__ = "0.1.0"

from .errors import (
    ConfigurationError,
    ConvergenceError,
    DataFormatError,
    DomainError,
    RankDeficiencyError,
)
from .physics import (
    CoherentStateSpec,
    CouplingFigures,
    EmitterParams,
    InterferenceModel,
    SpectralDiffusion,
    beta_factor,
    cooperativity_from_transmission,
    extinction_intensity,
    extinction_intensity_diffused,
    g2_bunching,
    g2_driven,
    lorentzian_response,
)
from .bloch import bloch_g2_oracle, g2_zero_transmitted, steady_state
from .correlator import CorrelationHistogram, correlate_streams
from .inference import (
    FitResult,
    SpectrumData,
    derive_coupling,
    fit,
    phase_sweep,
    relative_coupling_efficiency,
)
from .timetags import TimeTagStream, read_timetags, read_ttag, write_ttag
from .trajectory import DetectorModel, SimConfig, evolve_trajectory, frequency_sweep

__all__ = [
    "__version__",
    "CoherentStateSpec",
    "ConfigurationError",
    "ConvergenceError",
    "CorrelationHistogram",
    "CouplingFigures",
    "DataFormatError",
    "DetectorModel",
    "DomainError",
    "EmitterParams",
    "FitResult",
    "InterferenceModel",
    "RankDeficiencyError",
    "SimConfig",
    "SpectralDiffusion",
    "SpectrumData",
    "TimeTagStream",
    "beta_factor",
    "bloch_g2_oracle",
    "cooperativity_from_transmission",
    "correlate_streams",
    "derive_coupling",
    "evolve_trajectory",
    "extinction_intensity",
    "extinction_intensity_diffused",
    "fit",
    "frequency_sweep",
    "g2_bunching",
    "g2_driven",
    "g2_zero_transmitted",
    "lorentzian_response",
    "phase_sweep",
    "read_timetags",
    "read_ttag",
    "relative_coupling_efficiency",
    "steady_state",
    "write_ttag",
]
