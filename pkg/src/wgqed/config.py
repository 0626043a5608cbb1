"""Typed run configuration with unit-suffixed keys.

Configs come in as JSON with every dimensioned key carrying its unit in the
name (``gamma_fwhm_mhz``, ``dead_time_ns``, ...), get validated strictly
(unknown keys are rejected with their path), and convert to the SI-unit
dataclasses the simulation core uses. A canonical hash of the validated
config travels with every artifact so outputs can be traced to their inputs.
"""

from __future__ import annotations

import hashlib
import json
import math

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from .errors import ConfigurationError
from .physics import EmitterParams, InterferenceModel, SpectralDiffusion
from .trajectory import DetectorModel, SimConfig


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class EmitterSection(_Strict):
    gamma_fwhm_mhz: float = Field(gt=0.0)
    rabi_to_decay_ratio: float = Field(default=0.0, ge=0.0)
    resonance_thz: float | None = Field(default=None, gt=0.0)
    lifetime_limited: bool = True
    gamma_decay_mhz: float | None = Field(default=None, gt=0.0)

    def build(self) -> EmitterParams:
        gamma_fwhm = self.gamma_fwhm_mhz * 1e6
        if self.lifetime_limited:
            if self.gamma_decay_mhz is not None:
                raise ConfigurationError(
                    "emitter.gamma_decay_mhz conflicts with lifetime_limited=true"
                )
            decay = 2.0 * math.pi * gamma_fwhm
        else:
            if self.gamma_decay_mhz is None:
                raise ConfigurationError(
                    "emitter.gamma_decay_mhz is required when lifetime_limited=false"
                )
            decay = 2.0 * math.pi * self.gamma_decay_mhz * 1e6
        kwargs = dict(
            gamma_fwhm=gamma_fwhm,
            decay_rate=decay,
            rabi_frequency=self.rabi_to_decay_ratio * decay,
        )
        if self.resonance_thz is not None:
            kwargs["resonance_frequency"] = self.resonance_thz * 1e12
        return EmitterParams(**kwargs)


class InterferenceSection(_Strict):
    alpha_weight: float = Field(ge=0.0)
    phase_rad: float

    def build(self) -> InterferenceModel:
        return InterferenceModel(alpha_weight=self.alpha_weight, phase_rad=self.phase_rad)


class DiffusionSection(_Strict):
    gaussian_sigma_mhz: float = Field(ge=0.0)

    def build(self) -> SpectralDiffusion:
        return SpectralDiffusion(gaussian_sigma=self.gaussian_sigma_mhz * 1e6)


class DetectorSection(_Strict):
    efficiency: float = Field(default=0.8, gt=0.0, le=1.0)
    dark_count_rate_hz: float = Field(default=0.0, ge=0.0)
    dead_time_ns: float = Field(default=0.0, ge=0.0)
    timing_jitter_sigma_ps: float = Field(default=0.0, ge=0.0)

    def build(self) -> DetectorModel:
        return DetectorModel(
            efficiency=self.efficiency,
            dark_count_rate=self.dark_count_rate_hz,
            dead_time=self.dead_time_ns * 1e-9,
            timing_jitter_sigma=self.timing_jitter_sigma_ps * 1e-12,
        )


class SimulationSection(_Strict):
    time_step_lifetimes: float = Field(default=0.01, gt=0.0)
    duration_lifetimes: float = Field(gt=0.0)
    laser_rate_per_lifetime: float = Field(gt=0.0)
    rng_seed: int = Field(default=1, ge=0)
    n_shards: int = Field(default=64, ge=1)
    burn_in_lifetimes: float | None = Field(default=None, ge=0.0)
    psb_branching: float = Field(default=0.3, ge=0.0, le=1.0)
    hbt_split: float = Field(default=0.5, gt=0.0, lt=1.0)
    transmission_detection: str = "collapse"
    channels: tuple[str, ...] = ("reflection_psb", "transmission_hbt")

    @field_validator("transmission_detection")
    @classmethod
    def _check_mode(cls, v):
        if v not in ("collapse", "mean_field"):
            raise ValueError("must be 'collapse' or 'mean_field'")
        return v

    @field_validator("channels")
    @classmethod
    def _check_channels(cls, v):
        allowed = {"reflection_psb", "transmission", "transmission_hbt"}
        bad = set(v) - allowed
        if bad:
            raise ValueError(f"unknown channel(s) {sorted(bad)}; allowed: {sorted(allowed)}")
        return v

    def build(self, emitter: EmitterParams) -> SimConfig:
        tau = emitter.lifetime
        burn = None if self.burn_in_lifetimes is None else self.burn_in_lifetimes * tau
        expanded: list[str] = []
        for ch in self.channels:
            if ch == "transmission_hbt":
                expanded.extend(("transmission_hbt_a", "transmission_hbt_b"))
            else:
                expanded.append(ch)
        return SimConfig(
            time_step=self.time_step_lifetimes * tau,
            duration=self.duration_lifetimes * tau,
            laser_rate=self.laser_rate_per_lifetime / tau,
            rng_seed=self.rng_seed,
            n_shards=self.n_shards,
            burn_in=burn,
            psb_branching=self.psb_branching,
            hbt_split=self.hbt_split,
            transmission_detection=self.transmission_detection,
            channels=tuple(dict.fromkeys(expanded)),
        )


class SweepSection(_Strict):
    detuning_grid_mhz: list[float] = Field(min_length=1)
    dwell_lifetimes: float = Field(gt=0.0)

    @field_validator("detuning_grid_mhz")
    @classmethod
    def _check_sorted(cls, v):
        if sorted(v) != v:
            raise ValueError("must be sorted ascending")
        return v


class CorrelationSection(_Strict):
    bin_width_ps: int = Field(default=128, ge=1)
    max_lag_ps: int = Field(ge=1)


class RunConfig(_Strict):
    """Top-level run description: emitter + interference + sim + detector."""

    emitter: EmitterSection
    interference: InterferenceSection
    simulation: SimulationSection
    detector: DetectorSection = DetectorSection()
    diffusion: DiffusionSection | None = None
    sweep: SweepSection | None = None
    correlation: CorrelationSection | None = None


def _flatten_loc(loc) -> str:
    return ".".join(str(p) for p in loc)


def parse_config(doc: dict | str) -> RunConfig:
    """Validate a config document, raising ConfigurationError with key paths."""
    if isinstance(doc, str):
        try:
            doc = json.loads(doc)
        except json.JSONDecodeError as exc:
            raise ConfigurationError(f"config is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigurationError("config root must be a JSON object")
    try:
        return RunConfig.model_validate(doc)
    except ValidationError as exc:
        lines = []
        for err in exc.errors():
            lines.append(f"{_flatten_loc(err['loc'])}: {err['msg']}")
        raise ConfigurationError("invalid config: " + "; ".join(lines)) from exc


def config_hash(cfg: RunConfig | dict) -> str:
    """Canonical sha256 over the validated config (sorted keys, no spaces)."""
    if isinstance(cfg, RunConfig):
        doc = cfg.model_dump(mode="json", exclude_none=True)
    else:
        doc = cfg
    blob = json.dumps(doc, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()


def build_run(cfg: RunConfig):
    """Instantiate the SI-unit core objects described by a config."""
    emitter = cfg.emitter.build()
    interference = cfg.interference.build()
    sim = cfg.simulation.build(emitter)
    detector = cfg.detector.build()
    diffusion = cfg.diffusion.build() if cfg.diffusion is not None else None
    return emitter, interference, sim, detector, diffusion
