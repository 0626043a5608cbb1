"""Closed-form physics of a weakly driven two-level emitter in a waveguide.

Everything in this module is analytic: complex line-shape response, coherent
extinction of a transmitted field, cooperativity and branching figures derived
from the on-resonance transmission, photon-number content of the probe, and
the two standard intensity-correlation shapes (driven emitter with Rabi
oscillation, and exponential bunching). All functions are pure and vectorized
over their abscissa where that makes sense.

Units: frequencies and linewidths are plain Hz (FWHM for linewidths), decay
and Rabi rates are angular (rad/s), times are seconds. The one conversion
between the two conventions lives in :func:`decay_rate_from_fwhm`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from .errors import DomainError

TWO_PI = 2.0 * math.pi

#: Default optical carrier used when a config does not specify one (Hz).
DEFAULT_RESONANCE_HZ = 4.0549e14


def decay_rate_from_fwhm(gamma_fwhm_hz: float) -> float:
    """Angular decay rate (rad/s) of a lifetime-limited line of the given FWHM (Hz)."""
    if gamma_fwhm_hz <= 0:
        raise DomainError(f"linewidth must be positive, got {gamma_fwhm_hz}")
    return TWO_PI * gamma_fwhm_hz


@dataclass(frozen=True)
class EmitterParams:
    """Static parameters of a two-level emitter.

    gamma_fwhm : float
        Optical linewidth FWHM in Hz. Sets the width of the coherent response;
        equals decay_rate / 2 pi only for a lifetime-limited line.
    decay_rate : float
        Total spontaneous decay rate Gamma in rad/s. Sets the dynamics.
    rabi_frequency : float
        Drive Rabi frequency Omega_c in rad/s.
    resonance_frequency : float
        Optical transition frequency in Hz (bookkeeping only; all detunings
        are relative).
    """

    gamma_fwhm: float
    decay_rate: float
    rabi_frequency: float = 0.0
    resonance_frequency: float = DEFAULT_RESONANCE_HZ

    def __post_init__(self):
        if self.gamma_fwhm <= 0:
            raise DomainError(f"gamma_fwhm must be positive, got {self.gamma_fwhm}")
        if self.decay_rate <= 0:
            raise DomainError(f"decay_rate must be positive, got {self.decay_rate}")
        if self.rabi_frequency < 0:
            raise DomainError(f"rabi_frequency must be nonnegative, got {self.rabi_frequency}")

    @classmethod
    def lifetime_limited(
        cls,
        gamma_fwhm: float,
        rabi_to_decay: float = 0.0,
        resonance_frequency: float = DEFAULT_RESONANCE_HZ,
    ) -> "EmitterParams":
        """Emitter whose decay rate saturates its linewidth (Gamma = 2 pi gamma)."""
        decay = decay_rate_from_fwhm(gamma_fwhm)
        return cls(
            gamma_fwhm=gamma_fwhm,
            decay_rate=decay,
            rabi_frequency=rabi_to_decay * decay,
            resonance_frequency=resonance_frequency,
        )

    @property
    def lifetime(self) -> float:
        return 1.0 / self.decay_rate

    @property
    def saturation(self) -> float:
        """Resonant saturation parameter s = (Omega_c / Gamma)^2."""
        return (self.rabi_frequency / self.decay_rate) ** 2

    @property
    def is_weak_drive(self) -> bool:
        """True iff rabi_frequency / decay_rate < 0.05 (linear-response regime)."""
        return self.rabi_frequency / self.decay_rate < 0.05


@dataclass(frozen=True)
class InterferenceModel:
    """Relative weight and phase of the emitter field against the probe.

    alpha_weight is the magnitude of the emitter contribution relative to the
    directly transmitted field; phase_rad is their relative phase, stored
    normalized to [0, 2 pi).
    """

    alpha_weight: float
    phase_rad: float

    def __post_init__(self):
        if self.alpha_weight < 0:
            raise DomainError(f"alpha_weight must be nonnegative, got {self.alpha_weight}")
        object.__setattr__(self, "phase_rad", self.phase_rad % TWO_PI)

    @property
    def field_factor(self) -> complex:
        """alpha * e^{i phi}, the complex emitter-field weight."""
        return self.alpha_weight * complex(math.cos(self.phase_rad), math.sin(self.phase_rad))


@dataclass(frozen=True)
class SpectralDiffusion:
    """Static Gaussian distribution of the emitter's center frequency (sigma in Hz)."""

    gaussian_sigma: float

    def __post_init__(self):
        if self.gaussian_sigma < 0:
            raise DomainError(f"gaussian_sigma must be nonnegative, got {self.gaussian_sigma}")

    @property
    def gaussian_fwhm(self) -> float:
        return 2.0 * math.sqrt(2.0 * math.log(2.0)) * self.gaussian_sigma


@dataclass(frozen=True)
class CoherentStateSpec:
    """Photon-number content of a weak coherent probe.

    The number-basis expansion is truncated at ``cutoff`` (inclusive). For
    mean photon numbers up to 0.1 the truncation must retain all but 1e-9 of
    the probability mass; a cutoff that loses more is rejected.
    """

    mean_photon_number: float
    cutoff: int = 6

    def __post_init__(self):
        if self.mean_photon_number < 0:
            raise DomainError(
                f"mean_photon_number must be nonnegative, got {self.mean_photon_number}"
            )
        if self.cutoff < 0:
            raise DomainError(f"cutoff must be nonnegative, got {self.cutoff}")
        if self.mean_photon_number <= 0.1:
            deficit = 1.0 - _poisson_mass_below(self.mean_photon_number, self.cutoff)
            if deficit > 1e-9:
                raise DomainError(
                    f"cutoff {self.cutoff} drops {deficit:.2e} probability mass "
                    f"at mean photon number {self.mean_photon_number}; limit is 1e-9"
                )


def _poisson_mass_below(lam: float, cutoff: int) -> float:
    # Sum of the Poisson pmf for n = 0..cutoff, in plain double arithmetic.
    n = np.arange(cutoff + 1)
    if lam == 0.0:
        return 1.0
    log_p = -lam + n * math.log(lam) - gammaln(n + 1)
    return float(np.exp(log_p).sum())


def coherent_amplitudes(spec: CoherentStateSpec) -> np.ndarray:
    """Number-basis amplitudes c_n of a coherent state, n = 0..cutoff.

    c_n = e^{-nbar/2} nbar^{n/2} / sqrt(n!), real and nonnegative.
    """
    nbar = spec.mean_photon_number
    n = np.arange(spec.cutoff + 1)
    if nbar == 0.0:
        amps = np.zeros(spec.cutoff + 1)
        amps[0] = 1.0
        return amps
    log_c = -0.5 * nbar + 0.5 * n * math.log(nbar) - 0.5 * gammaln(n + 1)
    return np.exp(log_c)


def lorentzian_response(detuning_hz, gamma_fwhm_hz: float):
    """Complex emitter response S(Delta) = 1 / (1 - 2i Delta / gamma).

    Unit magnitude on resonance, rolling off with the half-width gamma/2.
    Vectorized over the detuning.
    """
    if gamma_fwhm_hz <= 0:
        raise DomainError(f"linewidth must be positive, got {gamma_fwhm_hz}")
    delta = np.asarray(detuning_hz, dtype=float)
    return 1.0 / (1.0 - 2j * delta / gamma_fwhm_hz)


def extinction_intensity(detuning_hz, model: InterferenceModel, emitter: EmitterParams):
    """Relative transmitted intensity |1 + alpha S(Delta) e^{i phi}|^2.

    Normalized so the far-detuned limit is exactly 1. On resonance with
    phi = pi this reduces to (1 - alpha)^2.
    """
    s = lorentzian_response(detuning_hz, emitter.gamma_fwhm)
    field = 1.0 + model.field_factor * s
    return np.abs(field) ** 2


def extinction_intensity_diffused(
    detuning_hz,
    model: InterferenceModel,
    emitter: EmitterParams,
    diffusion: SpectralDiffusion,
    quadrature_points: int = 64,
):
    """Extinction curve averaged over a static Gaussian spread of the emitter line.

    The emitter's center frequency is offset by delta ~ N(0, sigma^2) and the
    intensity is averaged over that ensemble by Gauss-Hermite quadrature.
    quadrature_points must be at least 16; 64 is plenty for sigma up to a few
    linewidths.
    """
    from .errors import ConfigurationError

    if quadrature_points < 16:
        raise ConfigurationError(
            f"quadrature_points must be >= 16, got {quadrature_points}"
        )
    sigma = diffusion.gaussian_sigma
    delta = np.asarray(detuning_hz, dtype=float)
    if sigma == 0.0:
        return extinction_intensity(delta, model, emitter)
    nodes, weights = np.polynomial.hermite.hermgauss(quadrature_points)
    offsets = math.sqrt(2.0) * sigma * nodes
    acc = np.zeros(delta.shape if delta.shape else (1,))
    for off, w in zip(offsets, weights):
        acc = acc + w * extinction_intensity(delta - off, model, emitter)
    out = acc / math.sqrt(math.pi)
    return out if delta.shape else out[0]


@dataclass(frozen=True)
class CouplingFigures:
    """Waveguide-coupling figures derived from the on-resonance transmission.

    All four values travel together with first-order uncertainties. The
    algebraic relations between them (T = (1+C)^-2, beta = C/(1+C),
    qe >= C) are enforced at construction.
    """

    transmission: float
    transmission_sigma: float
    cooperativity: float
    cooperativity_sigma: float
    beta: float
    beta_sigma: float
    qe_lower_bound: float
    qe_sigma: float

    def __post_init__(self):
        c = self.cooperativity
        if not (0.0 < self.transmission <= 1.0):
            raise DomainError(f"transmission must be in (0, 1], got {self.transmission}")
        if abs(self.transmission - (1.0 + c) ** -2) > 1e-12:
            raise DomainError("transmission inconsistent with cooperativity")
        if abs(self.beta - c / (1.0 + c)) > 1e-12:
            raise DomainError("beta inconsistent with cooperativity")
        if abs(self.qe_lower_bound - c) > 1e-12:
            raise DomainError("qe_lower_bound must equal the cooperativity")

    @classmethod
    def from_cooperativity(cls, c: float, sigma_c: float) -> "CouplingFigures":
        if c < 0:
            raise DomainError(f"cooperativity must be nonnegative, got {c}")
        t = (1.0 + c) ** -2
        sigma_t = 2.0 * sigma_c * (1.0 + c) ** -3
        return cls(
            transmission=t,
            transmission_sigma=sigma_t,
            cooperativity=c,
            cooperativity_sigma=sigma_c,
            beta=c / (1.0 + c),
            beta_sigma=sigma_c / (1.0 + c) ** 2,
            qe_lower_bound=c,
            qe_sigma=sigma_c,
        )

    def to_dict(self) -> dict:
        return {
            "transmission": self.transmission,
            "transmission_sigma": self.transmission_sigma,
            "cooperativity": self.cooperativity,
            "cooperativity_sigma": self.cooperativity_sigma,
            "beta": self.beta,
            "beta_sigma": self.beta_sigma,
            "qe_lower_bound": self.qe_lower_bound,
            "qe_sigma": self.qe_sigma,
        }


def cooperativity_from_transmission(transmission: float, sigma: float = 0.0) -> CouplingFigures:
    """Invert T = (1 + C)^-2 and propagate the uncertainty.

    C = T^{-1/2} - 1 with sigma_C = sigma_T / (2 T^{3/2}); beta and the
    quantum-efficiency lower bound follow from C.
    """
    if not (0.0 < transmission <= 1.0):
        raise DomainError(f"transmission must be in (0, 1], got {transmission}")
    if sigma < 0:
        raise DomainError(f"sigma must be nonnegative, got {sigma}")
    c = transmission ** -0.5 - 1.0
    sigma_c = sigma / (2.0 * transmission ** 1.5)
    return CouplingFigures.from_cooperativity(c, sigma_c)


def beta_factor(cooperativity: float) -> float:
    """Fraction of emission captured by the waveguide, beta = C / (1 + C)."""
    if cooperativity < 0:
        raise DomainError(f"cooperativity must be nonnegative, got {cooperativity}")
    return cooperativity / (1.0 + cooperativity)


def _sinz_over_z(z: np.ndarray) -> np.ndarray:
    """sin(z)/z for complex z, equal to 1 at z = 0."""
    out = np.ones_like(z)
    nz = z != 0
    out[nz] = np.sin(z[nz]) / z[nz]
    return out


def g2_driven_shape(tau, a: float, decay_rate: float, rabi_frequency: float):
    """Driven-emitter correlation shape with explicit rates (rad/s).

    Same curve as :func:`g2_driven`; exists so fits can float the rates
    without building emitter objects per evaluation.
    """
    if not (0.0 <= a <= 1.0):
        raise DomainError(f"antibunching amplitude a must be in [0, 1], got {a}")
    if decay_rate <= 0:
        raise DomainError(f"decay_rate must be positive, got {decay_rate}")
    if rabi_frequency < 0:
        raise DomainError(f"rabi_frequency must be nonnegative, got {rabi_frequency}")
    t = np.abs(np.asarray(tau, dtype=float))
    w = np.emath.sqrt(rabi_frequency**2 - (decay_rate / 4.0) ** 2)
    z = w * t.astype(complex)
    bracket = np.cos(z) + (3.0 * decay_rate / 4.0) * t * _sinz_over_z(z)
    out = 1.0 - a * np.exp(-3.0 * decay_rate * t / 4.0) * bracket.real
    return out if out.shape else float(out)


def g2_driven(tau, a: float, emitter: EmitterParams):
    """Intensity autocorrelation of a driven two-level emitter's own emission.

    g2(tau) = 1 - a e^{-3 Gamma |tau| / 4} [cos(W tau) + (3 Gamma / 4 W) sin(W tau)]
    with W = sqrt(Omega_c^2 - (Gamma/4)^2). Below the critical drive
    Omega_c = Gamma/4 the frequency W is imaginary and the bracket continues
    analytically to hyperbolic form; the implementation evaluates it with
    complex arithmetic so the curve is continuous through the critical point.
    a = 1 is a perfect single emitter; 0 <= a <= 1.
    """
    return g2_driven_shape(tau, a, emitter.decay_rate, emitter.rabi_frequency)


def g2_bunching(tau, a: float, decay_rate: float):
    """Exponentially decaying intensity correlation 1 + a e^{-Gamma |tau|}.

    Positive a is photon bunching; a in (-1, 0) is a dip. Used for
    transmitted-field correlations where interference with the probe turns
    emitter dynamics into an excess or deficit around zero delay.
    """
    if a < -1.0:
        raise DomainError(f"amplitude a must be >= -1, got {a}")
    if decay_rate <= 0:
        raise DomainError(f"decay_rate must be positive, got {decay_rate}")
    t = np.abs(np.asarray(tau, dtype=float))
    out = 1.0 + a * np.exp(-decay_rate * t)
    return out if out.shape else float(out)
