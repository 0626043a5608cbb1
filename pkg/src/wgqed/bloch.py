"""Density-matrix reference dynamics for a driven two-level emitter.

This module is the package's independent source of truth for correlation
functions: a 4x4 Liouvillian, its steady state, and two-time intensity
correlations via the quantum regression theorem. The trajectory simulator and
the analytic correlation shapes are both tested against it.

The rotating-frame Hamiltonian is H = -Delta n + (Omega/2)(sigma + sigma+)
with Delta the angular laser-emitter detuning, and the single collapse
channel is sqrt(Gamma) sigma. Density matrices are vectorized column-major.
"""

from __future__ import annotations

import math
from typing import Literal

import numpy as np
from scipy.linalg import expm

from .errors import ConvergenceError, DomainError
from .physics import TWO_PI, EmitterParams, InterferenceModel

# Two-level operators in the {|g>, |e>} basis.
SIGMA_MINUS = np.array([[0.0, 1.0], [0.0, 0.0]], dtype=complex)
SIGMA_PLUS = SIGMA_MINUS.conj().T
NUMBER_OP = SIGMA_PLUS @ SIGMA_MINUS
IDENT = np.eye(2, dtype=complex)

Channel = Literal["emitted", "transmitted"]


def _vec(rho: np.ndarray) -> np.ndarray:
    return rho.reshape(4, order="F")


def _unvec(v: np.ndarray) -> np.ndarray:
    return v.reshape(2, 2, order="F")


def hamiltonian(emitter: EmitterParams, detuning_hz: float = 0.0) -> np.ndarray:
    delta = TWO_PI * detuning_hz
    return -delta * NUMBER_OP + 0.5 * emitter.rabi_frequency * (SIGMA_MINUS + SIGMA_PLUS)


def liouvillian(emitter: EmitterParams, detuning_hz: float = 0.0) -> np.ndarray:
    """Generator L of d vec(rho)/dt = L vec(rho), column-major convention."""
    h = hamiltonian(emitter, detuning_hz)
    gamma = emitter.decay_rate
    lind = gamma * (
        np.kron(SIGMA_MINUS.conj(), SIGMA_MINUS)
        - 0.5 * np.kron(IDENT, NUMBER_OP)
        - 0.5 * np.kron(NUMBER_OP.T, IDENT)
    )
    return -1j * (np.kron(IDENT, h) - np.kron(h.T, IDENT)) + lind


def steady_state(emitter: EmitterParams, detuning_hz: float = 0.0) -> np.ndarray:
    """Steady-state density matrix, by direct solve with the trace constraint.

    Raises ConvergenceError with residual diagnostics if the solution is not
    a physical fixed point (nonzero residual, negative population).
    """
    liou = liouvillian(emitter, detuning_hz)
    a = liou.copy()
    a[0, :] = [1.0, 0.0, 0.0, 1.0]  # replace one row with Tr[rho] = 1
    b = np.array([1.0, 0.0, 0.0, 0.0], dtype=complex)
    try:
        v = np.linalg.solve(a, b)
    except np.linalg.LinAlgError as exc:
        raise ConvergenceError(
            "steady-state solve is singular", diagnostics={"reason": str(exc)}
        ) from exc
    rho = _unvec(v)
    rho = 0.5 * (rho + rho.conj().T)
    residual = float(np.abs(liou @ _vec(rho)).max())
    scale = float(np.abs(liou).max())
    eigvals = np.linalg.eigvalsh(rho)
    diag = {
        "residual": residual,
        "liouvillian_scale": scale,
        "population_eigenvalues": eigvals.tolist(),
    }
    if residual > 1e-9 * max(scale, 1.0):
        raise ConvergenceError("steady state residual too large", diagnostics=diag)
    if eigvals.min() < -1e-10:
        raise ConvergenceError("steady state is not positive", diagnostics=diag)
    return rho


def coherence_amplitude(emitter: EmitterParams, detuning_hz: float = 0.0) -> complex:
    """<sigma> in steady state (the emitter's coherent field amplitude)."""
    rho = steady_state(emitter, detuning_hz)
    return complex(np.trace(SIGMA_MINUS @ rho))


def transmitted_field_operator(
    emitter: EmitterParams, model: InterferenceModel
) -> np.ndarray:
    """Normalized transmitted-field operator E = 1 + (alpha e^{i phi}/<sigma>_0) sigma.

    The emitter term is scaled so that in the resonant steady state the mean
    interference contrast equals the configured alpha_weight and phase; the
    probe amplitude is normalized out.
    """
    sigma0 = coherence_amplitude(emitter, 0.0)
    if abs(sigma0) < 1e-300:
        raise DomainError("emitter is undriven; transmitted-field normalization undefined")
    return IDENT + (model.field_factor / sigma0) * SIGMA_MINUS


def transmitted_intensity(
    emitter: EmitterParams, model: InterferenceModel, detuning_hz: float = 0.0
) -> float:
    """Mean transmitted intensity relative to the bare probe, <E+ E>_ss."""
    e_op = transmitted_field_operator(emitter, model)
    rho = steady_state(emitter, detuning_hz)
    return float(np.real(np.trace(e_op.conj().T @ e_op @ rho)))


def bloch_g2_oracle(
    emitter: EmitterParams,
    model: InterferenceModel,
    channel: Channel,
    tau_grid: np.ndarray,
    detuning_hz: float = 0.0,
) -> np.ndarray:
    """Normalized intensity correlation g2(tau) by the quantum regression theorem.

    channel "emitted" correlates the emitter's own radiation (E = sigma);
    channel "transmitted" correlates the interfered forward field
    (E = 1 + alpha e^{i phi} sigma / <sigma>_0). The tau grid must be sorted
    and nonnegative. Exact up to the 4x4 matrix exponential.
    """
    tau = np.asarray(tau_grid, dtype=float)
    if tau.ndim != 1 or tau.size == 0:
        raise DomainError("tau_grid must be a nonempty 1-d array")
    if np.any(tau < 0) or np.any(np.diff(tau) < 0):
        raise DomainError("tau_grid must be sorted and nonnegative")
    if channel == "emitted":
        e_op = SIGMA_MINUS
    elif channel == "transmitted":
        e_op = transmitted_field_operator(emitter, model)
    else:
        raise DomainError(f"unknown channel {channel!r}")

    liou = liouvillian(emitter, detuning_hz)
    rho = steady_state(emitter, detuning_hz)
    intensity_op = e_op.conj().T @ e_op
    mean_intensity = float(np.real(np.trace(intensity_op @ rho)))
    if mean_intensity <= 1e-30:
        raise DomainError("mean intensity vanishes; g2 undefined")

    seed = _vec(e_op @ rho @ e_op.conj().T)
    out = np.empty(tau.size)
    for i, t in enumerate(tau):
        evolved = _unvec(expm(liou * t) @ seed)
        out[i] = float(np.real(np.trace(intensity_op @ evolved))) / mean_intensity**2
    return out


def g2_zero_transmitted(emitter: EmitterParams, model: InterferenceModel) -> float:
    """Closed-form transmitted g2(0) on resonance.

    With x = alpha e^{i phi} and u = alpha^2 (1 + 2 s), s the saturation
    parameter: g2(0) = (1 + 4 Re x + 4 u) / (1 + 2 Re x + u)^2. Used as an
    algebraic cross-check of the regression result.
    """
    x = model.field_factor
    s = emitter.saturation
    u = model.alpha_weight**2 * (1.0 + 2.0 * s)
    denom = 1.0 + 2.0 * x.real + u
    if abs(denom) < 1e-30:
        raise DomainError("mean intensity vanishes; g2 undefined")
    return (1.0 + 4.0 * x.real + 4.0 * u) / denom**2
