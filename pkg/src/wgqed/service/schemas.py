"""Request and response bodies for the HTTP endpoints.

Binary time-tag payloads travel base64-encoded inside JSON; everything else
is plain JSON with the same unit-suffixed keys as the on-disk config format.
"""

from __future__ import annotations

from pydantic import BaseModel, ConfigDict, Field


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class SimulateRequest(_Strict):
    config: dict
    label: str | None = None


class StreamPayload(_Strict):
    channel: str
    n_clicks: int
    rate_hz: float
    span_s: float
    ttag_base64: str


class SimulateResponse(_Strict):
    config_hash: str
    version: str
    rng_seed: int
    span_s: float
    gamma_transmission_ratio: float = Field(
        description="transmitted-channel collapse rate over the total decay rate"
    )
    raw_jump_counts: dict[str, int]
    detected_rates_hz: dict[str, float]
    streams: list[StreamPayload]


class SweepRequest(_Strict):
    config: dict  # must include a sweep section
    threads: int = Field(default=1, ge=0, le=256)


class SweepPointOut(_Strict):
    detuning_hz: float
    rates_hz: dict[str, float]
    counts: dict[str, int]


class SweepResponse(_Strict):
    config_hash: str
    version: str
    dwell_s: float
    points: list[SweepPointOut]


class CorrelateRequest(_Strict):
    ttag_a_base64: str
    ttag_b_base64: str | None = None
    bin_width_ps: int = Field(default=128, ge=1)
    max_lag_ps: int = Field(ge=1)


class CorrelateResponse(_Strict):
    version: str
    bin_width_ps: int
    n_bins: int
    total_pairs: int
    g2_zero: float
    g2_zero_err: float
    csv: str


class FitRequest(_Strict):
    model: str
    csv: str
    init: dict[str, float] | None = None
    bounds: dict[str, tuple[float | None, float | None]] | None = None
    fixed: dict[str, float | None] | list[str] | None = None
    multi_start: bool = False
    max_iterations: int = Field(default=200, ge=1, le=10000)


class FitResponse(_Strict):
    version: str
    model: str
    values: dict[str, float]
    sigmas: dict[str, float]
    free_names: list[str]
    covariance: list[list[float]]
    chi2: float
    ndof: int
    chi2_reduced: float
    converged: bool
    n_iterations: int
    message: str


class DeriveRequest(_Strict):
    fit: FitResponse | None = None
    transmission: float | None = None
    transmission_sigma: float | None = None
    force_phase_pi: bool = True


class DeriveResponse(_Strict):
    version: str
    transmission: float
    transmission_sigma: float
    cooperativity: float
    cooperativity_sigma: float
    beta: float
    beta_sigma: float
    qe_lower_bound: float
    qe_lower_bound_sigma: float
    fitted_phase_rad: float | None = None
    phase_deviation_rad: float | None = None


class PhaseSweepRequest(_Strict):
    alpha: float = Field(ge=0.0)
    gamma_fwhm_mhz: float = Field(gt=0.0)
    phases_rad: list[float] = Field(min_length=1)
    detuning_grid_mhz: list[float] = Field(min_length=1)


class PhaseSweepResponse(_Strict):
    version: str
    csv: str


class HealthResponse(_Strict):
    status: str
    version: str
