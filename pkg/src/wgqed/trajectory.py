"""Quantum-jump simulation of a driven two-level emitter in a waveguide.

The stochastic wavefunction is unraveled in the measurement basis of the
experiment: the forward (transmission) detector sees the probe displaced by
the emitter field, so its jump operator is the displaced combination
``L_T = sqrt(R_L) + c sigma`` with ``c = sqrt(R_L) alpha e^{i phi} / <sigma>_ss``,
while everything the waveguide does not collect decays through
``L_R = sqrt(Gamma - |c|^2) sigma`` and is thinned into the sideband
(reflection) channel. A compensating drive term keeps the ensemble-averaged
master equation unchanged, so both mean rates and two-time correlations of
the click record reproduce the density-matrix reference.

Between jumps the state evolves with the exact non-Hermitian propagator
(eigendecomposition of H_eff); jump instants are sampled by inverting the
survival probability with a bisection, so waiting times are exact rather
than first order in the step, and several jumps within one step are handled
by re-sampling the remainder. Shards are independent trajectory segments
stitched end to end; keep the per-shard span much longer than any
correlation window you plan to histogram.

Detector post-processing (efficiency, darks, timing jitter, 1 ps
quantization, dead time) consumes RNG substreams independent of the
dynamics, so changing the detector model never reruns the physics.
"""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .bloch import coherence_amplitude
from .errors import ConfigurationError, DomainError
from .physics import EmitterParams, InterferenceModel, TWO_PI
from .timetags import CHANNEL_CODES, ClickRecord, TimeTagStream

CH_REFLECTION = "reflection_psb"
CH_TRANSMISSION = "transmission"
CH_HBT_A = "transmission_hbt_a"
CH_HBT_B = "transmission_hbt_b"

_UNIFORM_BLOCK = 8192
_BISECT_ITERS = 30  # dt / 2^30 is far below the 1 ps timestamp resolution


@dataclass(frozen=True)
class DetectorModel:
    """Single-photon detector imperfections, applied as post-processing.

    Defaults are order-of-magnitude placeholders, not calibrated values;
    set them explicitly for anything quantitative.
    """

    efficiency: float = 0.8
    dark_count_rate: float = 0.0  # Hz
    dead_time: float = 0.0  # s
    timing_jitter_sigma: float = 0.0  # s, RMS

    def __post_init__(self):
        if not (0.0 <= self.efficiency <= 1.0):
            raise ConfigurationError(f"efficiency must be in [0, 1], got {self.efficiency}")
        if self.dark_count_rate < 0:
            raise ConfigurationError("dark_count_rate must be nonnegative")
        if self.dead_time < 0:
            raise ConfigurationError("dead_time must be nonnegative")
        if self.timing_jitter_sigma < 0:
            raise ConfigurationError("timing_jitter_sigma must be nonnegative")

    @classmethod
    def ideal(cls) -> "DetectorModel":
        return cls(efficiency=1.0, dark_count_rate=0.0, dead_time=0.0,
                   timing_jitter_sigma=0.0)


@dataclass(frozen=True)
class TwoLevelState:
    """Pure state of the emitter; norm may fall below 1 between jumps."""

    amplitude_ground: complex = 1.0 + 0.0j
    amplitude_excited: complex = 0.0j

    def __post_init__(self):
        n = self.norm_squared
        if not (0.0 < n <= 1.0 + 1e-9):
            raise DomainError(f"state norm^2 must be in (0, 1], got {n}")

    @property
    def norm_squared(self) -> float:
        return abs(self.amplitude_ground) ** 2 + abs(self.amplitude_excited) ** 2

    @property
    def excited_population(self) -> float:
        return abs(self.amplitude_excited) ** 2 / self.norm_squared

    def as_array(self) -> np.ndarray:
        return np.array([self.amplitude_ground, self.amplitude_excited], dtype=complex)


@dataclass(frozen=True)
class SimConfig:
    """Run geometry, probe strength, and channel wiring for one simulation.

    time_step and duration are seconds; duration is the recorded span.
    burn_in (default 20 lifetimes) is evolved additionally at the start of
    every shard and discarded, so statistics are collected from the relaxed
    state rather than the initial one. laser_rate is the bare probe click
    rate at the transmission port (alpha = 0, unit efficiency).
    """

    time_step: float
    duration: float
    laser_rate: float
    rng_seed: int = 1
    n_shards: int = 64
    burn_in: float | None = None
    psb_branching: float = 0.3  # collected fraction of non-waveguide emission (guess)
    hbt_split: float = 0.5
    transmission_detection: str = "collapse"  # "collapse" | "mean_field"
    channels: tuple[str, ...] = (CH_HBT_A, CH_HBT_B, CH_REFLECTION)
    shard_seeds: tuple[int, ...] | None = None

    def __post_init__(self):
        if self.time_step <= 0:
            raise ConfigurationError(f"time_step must be positive, got {self.time_step}")
        if self.duration <= 0:
            raise ConfigurationError(f"duration must be positive, got {self.duration}")
        if self.laser_rate < 0:
            raise ConfigurationError("laser_rate must be nonnegative")
        if self.n_shards < 1:
            raise ConfigurationError("n_shards must be at least 1")
        if self.burn_in is not None and self.burn_in < 0:
            raise ConfigurationError("burn_in must be nonnegative")
        if not (0.0 <= self.psb_branching <= 1.0):
            raise ConfigurationError("psb_branching must be in [0, 1]")
        if not (0.0 < self.hbt_split < 1.0):
            raise ConfigurationError("hbt_split must be in (0, 1)")
        if self.transmission_detection not in ("collapse", "mean_field"):
            raise ConfigurationError(
                f"unknown transmission_detection {self.transmission_detection!r}"
            )
        unknown = set(self.channels) - set(CHANNEL_CODES)
        if unknown:
            raise ConfigurationError(f"unknown channels: {sorted(unknown)}")
        if not self.channels:
            raise ConfigurationError("at least one output channel is required")
        if self.shard_seeds is not None:
            if len(self.shard_seeds) != self.n_shards:
                raise ConfigurationError(
                    f"shard_seeds has {len(self.shard_seeds)} entries for "
                    f"{self.n_shards} shards"
                )
            if len(set(self.shard_seeds)) != len(self.shard_seeds):
                raise ConfigurationError("shard_seeds reuses a seed across shards")


@dataclass(frozen=True)
class TrajectoryResult:
    """Click streams plus bookkeeping from one simulation run."""

    streams: dict[str, TimeTagStream]
    span_s: float
    raw_jump_counts: dict[str, int]
    detected_rates_hz: dict[str, float]
    gamma_transmission: float  # |c|^2, the waveguide-collapse rate actually used
    rng_seed: int

    def records(self) -> list[ClickRecord]:
        """All clicks of all channels merged in time order."""
        recs = []
        for name, s in self.streams.items():
            recs.extend(ClickRecord(name, int(t)) for t in s.timestamps_ps)
        recs.sort(key=lambda r: (r.timestamp_ps, r.channel))
        return recs


class _Propagator:
    """Exact exp(-i H_eff t) on state rows, via 2x2 eigendecomposition."""

    def __init__(self, h_eff: np.ndarray):
        lam, vec = np.linalg.eig(-1j * h_eff)
        cond = np.linalg.cond(vec)
        if not np.isfinite(cond) or cond > 1e10:
            raise ConfigurationError(
                "effective Hamiltonian is defective (critical drive); "
                "perturb the Rabi frequency or detuning by a part in 1e6"
            )
        self.lam = lam
        self.vec = vec
        self.vinv = np.linalg.inv(vec)

    def advance(self, psi: np.ndarray, dt) -> np.ndarray:
        """Propagate rows of psi by dt (scalar or per-row array), unnormalized."""
        w = self.vinv @ psi.T  # (2, n)
        decay = np.exp(np.multiply.outer(self.lam, np.asarray(dt, dtype=float)))
        if decay.ndim == 1:
            decay = decay[:, None]
        return (self.vec @ (decay * w)).T


@dataclass
class _JumpSystem:
    propagator: _Propagator
    sqrt_rate: float  # sqrt(R_L) in the jump operator; 0 in mean-field mode
    c: complex  # displaced-jump coefficient
    gamma_r: float  # Gamma - |c|^2
    mean_field: bool
    intensity_scale: complex  # alpha e^{i phi} / <sigma>_ss


def _build_system(
    emitter: EmitterParams,
    model: InterferenceModel,
    config: SimConfig,
    detuning_hz: float,
) -> _JumpSystem:
    gamma = emitter.decay_rate
    rate = config.laser_rate
    if model.alpha_weight > 0:
        if emitter.rabi_frequency <= 0:
            raise ConfigurationError(
                "alpha_weight > 0 requires a driven emitter (rabi_frequency > 0)"
            )
        sigma0 = coherence_amplitude(emitter, 0.0)
        scale = model.field_factor / sigma0
    else:
        scale = 0.0j

    delta = TWO_PI * detuning_hz
    n_op = np.array([[0.0, 0.0], [0.0, 1.0]], dtype=complex)
    sig = np.array([[0.0, 1.0], [0.0, 0.0]], dtype=complex)
    h = -delta * n_op + 0.5 * emitter.rabi_frequency * (sig + sig.conj().T)

    mean_field = config.transmission_detection == "mean_field"
    if mean_field:
        c = 0.0j
        gamma_r = gamma
        h_total = h
        l_t_sq = np.zeros((2, 2), dtype=complex)
        sqrt_rate = 0.0
    else:
        c = math.sqrt(rate) * scale
        gamma_t = abs(c) ** 2
        if gamma_t > gamma * (1.0 + 1e-12):
            max_rate = gamma / abs(scale) ** 2 if scale else math.inf
            raise ConfigurationError(
                f"laser_rate {rate:.6g} Hz over-displaces the waveguide channel "
                f"(|c|^2 = {gamma_t:.6g} > Gamma = {gamma:.6g}); "
                f"maximum for these interference settings is {max_rate:.6g} Hz"
            )
        gamma_r = max(gamma - gamma_t, 0.0)
        sqrt_rate = math.sqrt(rate)
        # drive compensation: keeps the ensemble average on the bare master equation
        h_comp = 0.5j * sqrt_rate * (np.conj(c) * sig.conj().T - c * sig)
        h_total = h + h_comp
        l_t = sqrt_rate * np.eye(2, dtype=complex) + c * sig
        l_t_sq = l_t.conj().T @ l_t

    l_r = math.sqrt(gamma_r) * sig
    h_eff = h_total - 0.5j * (l_t_sq + l_r.conj().T @ l_r)
    return _JumpSystem(
        propagator=_Propagator(h_eff),
        sqrt_rate=sqrt_rate,
        c=c,
        gamma_r=gamma_r,
        mean_field=mean_field,
        intensity_scale=scale,
    )


def _validate_run(emitter: EmitterParams, config: SimConfig) -> None:
    lifetime = emitter.lifetime
    if config.time_step > 0.01 * lifetime * (1.0 + 1e-9):
        raise ConfigurationError(
            f"time_step {config.time_step:.3e} s too coarse; "
            f"must be <= 0.01 lifetimes ({0.01 * lifetime:.3e} s)"
        )
    if config.duration < 1e4 * lifetime:
        warnings.warn(
            f"duration {config.duration:.3e} s is under 1e4 lifetimes; "
            "correlation statistics will be poor",
            UserWarning,
            stacklevel=3,
        )
    if not emitter.is_weak_drive and emitter.rabi_frequency > 0:
        warnings.warn(
            "drive is outside the weak regime (Omega/Gamma >= 0.05); "
            "extinction curves will be saturation-broadened",
            UserWarning,
            stacklevel=3,
        )
    if config.duration / config.n_shards < config.time_step:
        raise ConfigurationError("duration per shard is shorter than one time step")


def _shard_rngs(config: SimConfig):
    root = np.random.SeedSequence(config.rng_seed)
    sim_ss, det_ss = root.spawn(2)
    if config.shard_seeds is not None:
        children = [np.random.SeedSequence(s) for s in config.shard_seeds]
    else:
        children = sim_ss.spawn(config.n_shards)
    shard_gens = []
    for ss in children:
        step_ss, event_ss, thin_ss = ss.spawn(3)
        shard_gens.append(
            (
                np.random.Generator(np.random.PCG64(step_ss)),
                np.random.Generator(np.random.PCG64(event_ss)),
                np.random.Generator(np.random.PCG64(thin_ss)),
            )
        )
    # fixed detector substream order: refl(thin, dark, jitter), tx(thin, split),
    # hbt_a(dark, jitter), hbt_b(dark, jitter), tx_solo(dark, jitter)
    det_gens = [np.random.Generator(np.random.PCG64(ss)) for ss in det_ss.spawn(11)]
    return shard_gens, det_gens


def _norm_sq(psi: np.ndarray) -> np.ndarray:
    return np.abs(psi[:, 0]) ** 2 + np.abs(psi[:, 1]) ** 2


def _collapse_times(system: _JumpSystem, psi_start, u, durations):
    """Exact jump instants: solve ||psi(f * T)||^2 = u for f by bisection.

    durations is scalar or per-row; survival decays monotonically from 1,
    and u was drawn above the end-of-interval survival, so a root exists.
    Returns (f, unnormalized state at the jump instant).
    """
    j = psi_start.shape[0]
    lo = np.zeros(j)
    hi = np.ones(j)
    for _ in range(_BISECT_ITERS):
        mid = 0.5 * (lo + hi)
        phi = system.propagator.advance(psi_start, mid * durations)
        later = _norm_sq(phi) > u
        lo = np.where(later, mid, lo)
        hi = np.where(later, hi, mid)
    f = 0.5 * (lo + hi)
    return f, system.propagator.advance(psi_start, f * durations)


def _step_block(system: _JumpSystem, psi, u_step, dt, event_gens):
    """Advance every shard by one step; emit (rows, frac-of-step, is_transmission).

    Exact within-step waiting times; re-samples the remainder after each
    collapse so multiple jumps per step are handled.
    """
    phi = system.propagator.advance(psi, dt)
    surv = _norm_sq(phi)
    jumped = u_step > surv
    rows_out: list[np.ndarray] = []
    frac_out: list[np.ndarray] = []
    is_t_out: list[np.ndarray] = []
    ok = ~jumped
    phi[ok] = phi[ok] / np.sqrt(surv[ok])[:, None]
    if np.any(jumped):
        active = np.nonzero(jumped)[0]
        psi_active = psi[active]
        u_active = u_step[active]
        durations = np.full(active.size, dt)
        consumed = np.zeros(active.size)  # fraction of dt already used
        while active.size:
            f, psi_at = _collapse_times(system, psi_active, u_active, durations)
            jump_frac = consumed + f * durations / dt
            sig_part = np.zeros_like(psi_at)
            sig_part[:, 0] = psi_at[:, 1]
            l_t_psi = system.sqrt_rate * psi_at + system.c * sig_part
            w_t = _norm_sq(l_t_psi)
            w_r = system.gamma_r * np.abs(psi_at[:, 1]) ** 2
            u_pick = np.array([event_gens[r].random() for r in active])
            is_t = u_pick * (w_t + w_r) < w_t
            rows_out.append(active.copy())
            frac_out.append(jump_frac)
            is_t_out.append(is_t)
            collapsed = np.where(
                is_t[:, None], l_t_psi, math.sqrt(system.gamma_r) * sig_part
            )
            collapsed = collapsed / np.sqrt(_norm_sq(collapsed))[:, None]
            remaining = (1.0 - f) * durations
            phi_rem = system.propagator.advance(collapsed, remaining)
            surv_rem = _norm_sq(phi_rem)
            u_rem = np.array([event_gens[r].random() for r in active])
            again = u_rem > surv_rem
            done = ~again
            if np.any(done):
                rows_done = active[done]
                phi[rows_done] = phi_rem[done] / np.sqrt(surv_rem[done])[:, None]
            if not np.any(again):
                break
            keep = np.nonzero(again)[0]
            active = active[keep]
            psi_active = collapsed[keep]
            u_active = u_rem[keep]
            consumed = jump_frac[keep]
            durations = remaining[keep]
    return phi, rows_out, frac_out, is_t_out


def _dark_and_blur(times_s, detector: DetectorModel, duration_s, dark_gen, jit_gen):
    """Add dark counts, apply timing jitter, quantize to 1 ps, deduplicate."""
    n_dark = int(dark_gen.poisson(detector.dark_count_rate * duration_s))
    if n_dark:
        times_s = np.concatenate([times_s, dark_gen.uniform(0.0, duration_s, n_dark)])
    if detector.timing_jitter_sigma > 0 and times_s.size:
        times_s = times_s + jit_gen.normal(0.0, detector.timing_jitter_sigma, times_s.size)
    times_s = np.clip(times_s, 0.0, duration_s)
    span_ps = int(round(duration_s * 1e12))
    ps = np.clip(np.round(times_s * 1e12).astype(np.int64), 0, span_ps)
    return np.unique(ps), span_ps


def _apply_dead_time(ps: np.ndarray, dead_ps: int) -> np.ndarray:
    """Non-paralyzable dead time: a kept click blinds the detector for dead_ps."""
    if dead_ps <= 0 or ps.size == 0:
        return ps
    kept = [int(ps[0])]
    last = int(ps[0])
    for t in ps[1:]:
        t = int(t)
        if t - last >= dead_ps:
            kept.append(t)
            last = t
    return np.asarray(kept, dtype=np.int64)


def _finish_channel(times_s, detector, duration_s, dark_gen, jit_gen):
    ps, span_ps = _dark_and_blur(times_s, detector, duration_s, dark_gen, jit_gen)
    dead_ps = int(round(detector.dead_time * 1e12))
    return _apply_dead_time(ps, dead_ps), span_ps


def evolve_trajectory(
    emitter: EmitterParams,
    model: InterferenceModel,
    config: SimConfig,
    detectors: DetectorModel | None = None,
    detuning_hz: float = 0.0,
    initial_state: TwoLevelState | None = None,
) -> TrajectoryResult:
    """Run the quantum-jump simulation and return detector click streams.

    Shards run as one vectorized ensemble; each has its own RNG substream
    spawned from config.rng_seed, so results are reproducible bit for bit
    and independent of the shard count only in distribution.
    """
    detectors = detectors if detectors is not None else DetectorModel()
    _validate_run(emitter, config)
    system = _build_system(emitter, model, config, detuning_hz)

    n_shards = config.n_shards
    dt = config.time_step
    lifetime = emitter.lifetime
    burn = config.burn_in if config.burn_in is not None else 20.0 * lifetime
    burn_steps = int(round(burn / dt))
    rec_steps = int(round(config.duration / (n_shards * dt)))
    if rec_steps < 1:
        raise ConfigurationError("duration per shard is shorter than one time step")
    span_shard = rec_steps * dt
    duration = span_shard * n_shards
    burn_dur = burn_steps * dt
    total_steps = burn_steps + rec_steps

    shard_gens, det_gens = _shard_rngs(config)
    step_gens = [g[0] for g in shard_gens]
    event_gens = [g[1] for g in shard_gens]
    thin_gens = [g[2] for g in shard_gens]

    psi0 = (initial_state or TwoLevelState()).as_array()
    psi0 = psi0 / math.sqrt(float(np.abs(psi0[0]) ** 2 + np.abs(psi0[1]) ** 2))
    psi = np.tile(psi0, (n_shards, 1))

    ev_shard: list[np.ndarray] = []
    ev_frac: list[np.ndarray] = []
    ev_step: list[np.ndarray] = []
    ev_is_t: list[np.ndarray] = []

    mean_field_tx = system.mean_field and config.laser_rate > 0
    if mean_field_tx:
        p_max = config.laser_rate * (1.0 + model.alpha_weight) ** 2 * dt
        if p_max > 0.5:
            raise ConfigurationError(
                f"time_step too coarse for mean-field thinning "
                f"(click probability per step {p_max:.3g} > 0.5)"
            )
    u_buf = thin_buf = None
    buf_pos = _UNIFORM_BLOCK
    for step in range(total_steps):
        if buf_pos == _UNIFORM_BLOCK:
            u_buf = np.stack([g.random(_UNIFORM_BLOCK) for g in step_gens])
            if mean_field_tx:
                thin_buf = np.stack([g.random(_UNIFORM_BLOCK) for g in thin_gens])
            buf_pos = 0
        if mean_field_tx:
            # thinning against the instantaneous interference intensity;
            # transmission clicks leave the state untouched in this mode
            coh = np.conj(psi[:, 0]) * psi[:, 1]
            inten = np.abs(1.0 + system.intensity_scale * coh) ** 2
            p_click = config.laser_rate * inten * dt
            u_thin = thin_buf[:, buf_pos]
            hit = u_thin < p_click
            if np.any(hit):
                rows = np.nonzero(hit)[0]
                ev_shard.append(rows)
                ev_frac.append(u_thin[rows] / p_click[rows])
                ev_step.append(np.full(rows.size, step, dtype=np.int64))
                ev_is_t.append(np.ones(rows.size, dtype=bool))
        psi, rows_l, frac_l, ist_l = _step_block(
            system, psi, u_buf[:, buf_pos], dt, event_gens
        )
        for rows, frac, ist in zip(rows_l, frac_l, ist_l):
            ev_shard.append(rows)
            ev_frac.append(frac)
            ev_step.append(np.full(rows.size, step, dtype=np.int64))
            ev_is_t.append(ist)
        buf_pos += 1

    if ev_shard:
        shard_idx = np.concatenate(ev_shard)
        frac = np.concatenate(ev_frac)
        step_idx = np.concatenate(ev_step)
        is_t = np.concatenate(ev_is_t)
    else:
        shard_idx = np.zeros(0, dtype=np.int64)
        frac = np.zeros(0)
        step_idx = np.zeros(0, dtype=np.int64)
        is_t = np.zeros(0, dtype=bool)

    t_local = (step_idx + frac) * dt
    recorded = t_local >= burn_dur
    t_global = shard_idx * span_shard + (t_local - burn_dur)
    tx_raw = np.sort(t_global[recorded & is_t])
    refl_raw = np.sort(t_global[recorded & ~is_t])

    streams: dict[str, TimeTagStream] = {}
    span_ps = int(round(duration * 1e12))

    if CH_REFLECTION in config.channels:
        keep = det_gens[0].random(refl_raw.size) < config.psb_branching * detectors.efficiency
        ps, _ = _finish_channel(refl_raw[keep], detectors, duration, det_gens[1], det_gens[2])
        streams[CH_REFLECTION] = TimeTagStream(CH_REFLECTION, ps, span_ps)

    wants_hbt = CH_HBT_A in config.channels or CH_HBT_B in config.channels
    wants_solo = CH_TRANSMISSION in config.channels
    if wants_hbt or wants_solo:
        keep = det_gens[3].random(tx_raw.size) < detectors.efficiency
        tx_det = tx_raw[keep]
        if wants_hbt:
            to_a = det_gens[4].random(tx_det.size) < config.hbt_split
            ps_a, _ = _finish_channel(tx_det[to_a], detectors, duration, det_gens[5], det_gens[6])
            ps_b, _ = _finish_channel(tx_det[~to_a], detectors, duration, det_gens[7], det_gens[8])
            if CH_HBT_A in config.channels:
                streams[CH_HBT_A] = TimeTagStream(CH_HBT_A, ps_a, span_ps)
            if CH_HBT_B in config.channels:
                streams[CH_HBT_B] = TimeTagStream(CH_HBT_B, ps_b, span_ps)
        if wants_solo:
            ps_t, _ = _finish_channel(tx_det, detectors, duration, det_gens[9], det_gens[10])
            streams[CH_TRANSMISSION] = TimeTagStream(CH_TRANSMISSION, ps_t, span_ps)

    rates = {name: len(s) / duration for name, s in streams.items()}
    return TrajectoryResult(
        streams=streams,
        span_s=duration,
        raw_jump_counts={
            "transmission": int(tx_raw.size),
            "reflection": int(refl_raw.size),
        },
        detected_rates_hz=rates,
        gamma_transmission=abs(system.c) ** 2,
        rng_seed=config.rng_seed,
    )


@dataclass(frozen=True)
class SweepResult:
    """Per-detuning mean rates from a stepped frequency sweep."""

    detuning_hz: np.ndarray
    transmission_rate_hz: np.ndarray
    transmission_rate_err_hz: np.ndarray
    reflection_rate_hz: np.ndarray
    reflection_rate_err_hz: np.ndarray
    dwell_s: float

    def transmission_spectrum(self):
        """(x, y, yerr) arrays ready for a line-shape fit."""
        return self.detuning_hz, self.transmission_rate_hz, self.transmission_rate_err_hz


def frequency_sweep(
    emitter: EmitterParams,
    model: InterferenceModel,
    config: SimConfig,
    detectors: DetectorModel | None = None,
    detuning_grid_hz=None,
    threads: int = 1,
) -> SweepResult:
    """Dwell at each detuning and record mean transmission/reflection rates.

    config.duration is the per-point dwell and must be at least 1e3
    lifetimes. Each point gets its own RNG substream derived from
    config.rng_seed, so the sweep is reproducible and thread-count
    independent.
    """
    detectors = detectors if detectors is not None else DetectorModel()
    grid = np.asarray(detuning_grid_hz, dtype=float)
    if grid.ndim != 1 or grid.size == 0:
        raise ConfigurationError("detuning_grid_hz must be a nonempty 1-d array")
    if config.duration < 1e3 * emitter.lifetime:
        raise ConfigurationError(
            f"sweep dwell {config.duration:.3e} s is under 1e3 lifetimes"
        )
    point_seeds = [
        int(ss.generate_state(1, np.uint64)[0])
        for ss in np.random.SeedSequence(config.rng_seed).spawn(grid.size)
    ]

    def run_point(i: int):
        cfg = replace(
            config,
            rng_seed=point_seeds[i],
            channels=(CH_TRANSMISSION, CH_REFLECTION),
        )
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", UserWarning)
            res = evolve_trajectory(emitter, model, cfg, detectors, detuning_hz=grid[i])
        out = {}
        for name in (CH_TRANSMISSION, CH_REFLECTION):
            n = len(res.streams[name])
            out[name] = (n / res.span_s, math.sqrt(max(n, 1)) / res.span_s)
        return out

    if threads == 0:
        import os

        threads = os.cpu_count() or 1
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(run_point, range(grid.size)))
    else:
        results = [run_point(i) for i in range(grid.size)]

    tx = np.array([r[CH_TRANSMISSION] for r in results])
    rf = np.array([r[CH_REFLECTION] for r in results])
    return SweepResult(
        detuning_hz=grid,
        transmission_rate_hz=tx[:, 0],
        transmission_rate_err_hz=tx[:, 1],
        reflection_rate_hz=rf[:, 0],
        reflection_rate_err_hz=rf[:, 1],
        dwell_s=config.duration,
    )
