"""FastAPI application exposing the simulation and analysis pipeline.

Domain errors map onto HTTP statuses with a machine-readable ``error_type``
so thin clients can translate them into exit codes: configuration and data
problems are 422, numerical failures during a run are 500, and fit
degeneracy is 422 with its own type.
"""

from __future__ import annotations

import base64
import binascii
from dataclasses import replace

import numpy as np
from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .. import __version__
from ..config import build_run, config_hash, parse_config
from ..correlator import correlate_streams
from ..errors import (
    ConfigurationError,
    ConvergenceError,
    DataFormatError,
    DomainError,
    RankDeficiencyError,
)
from ..inference import FitResult, SpectrumData, derive_coupling, fit, phase_sweep
from ..physics import cooperativity_from_transmission
from ..timetags import ttag_bytes, ttag_from_bytes
from ..trajectory import evolve_trajectory, frequency_sweep
from .schemas import (
    CorrelateRequest,
    CorrelateResponse,
    DeriveRequest,
    DeriveResponse,
    FitRequest,
    FitResponse,
    HealthResponse,
    PhaseSweepRequest,
    PhaseSweepResponse,
    SimulateRequest,
    SimulateResponse,
    StreamPayload,
    SweepPointOut,
    SweepRequest,
    SweepResponse,
)

_ERROR_STATUS = {
    ConfigurationError: (422, "configuration"),
    DataFormatError: (422, "data_format"),
    DomainError: (422, "domain"),
    RankDeficiencyError: (422, "rank_deficiency"),
    ConvergenceError: (500, "convergence"),
}


def _decode_b64(text: str, label: str) -> bytes:
    try:
        return base64.b64decode(text, validate=True)
    except (binascii.Error, ValueError) as exc:
        raise DataFormatError(f"{label} is not valid base64: {exc}") from exc


def create_app() -> FastAPI:
    app = FastAPI(title="wgqed", version=__version__)

    for exc_type, (status, type_name) in _ERROR_STATUS.items():

        def _make_handler(status=status, type_name=type_name):
            async def handler(request: Request, exc: Exception):
                body = {"error_type": type_name, "detail": str(exc)}
                offset = getattr(exc, "offset", None)
                if offset is not None:
                    body["byte_offset"] = offset
                params = getattr(exc, "parameters", None)
                if params:
                    body["parameters"] = list(params)
                return JSONResponse(status_code=status, content=body)

            return handler

        app.add_exception_handler(exc_type, _make_handler())

    @app.get("/health", response_model=HealthResponse)
    async def health():
        return HealthResponse(status="ok", version=__version__)

    @app.post("/simulate", response_model=SimulateResponse)
    async def simulate(req: SimulateRequest):
        cfg = parse_config(req.config)
        emitter, interference, sim, detector, _ = build_run(cfg)
        result = evolve_trajectory(emitter, interference, sim, detector)
        streams = [
            StreamPayload(
                channel=name,
                n_clicks=len(s),
                rate_hz=s.rate_hz,
                span_s=s.span_s,
                ttag_base64=base64.b64encode(ttag_bytes(s)).decode(),
            )
            for name, s in sorted(result.streams.items())
        ]
        return SimulateResponse(
            config_hash=config_hash(cfg),
            version=__version__,
            rng_seed=result.rng_seed,
            span_s=result.span_s,
            gamma_transmission_ratio=result.gamma_transmission / emitter.decay_rate,
            raw_jump_counts=result.raw_jump_counts,
            detected_rates_hz=result.detected_rates_hz,
            streams=streams,
        )

    @app.post("/sweep", response_model=SweepResponse)
    async def sweep(req: SweepRequest):
        cfg = parse_config(req.config)
        if cfg.sweep is None:
            raise ConfigurationError("config needs a 'sweep' section for this endpoint")
        emitter, interference, sim, detector, _ = build_run(cfg)
        sim = replace(sim, duration=cfg.sweep.dwell_lifetimes * emitter.lifetime)
        grid = np.asarray(cfg.sweep.detuning_grid_mhz, dtype=float) * 1e6
        res = frequency_sweep(
            emitter, interference, sim, detector, detuning_grid_hz=grid,
            threads=req.threads,
        )
        points = [
            SweepPointOut(
                detuning_hz=float(d),
                rates_hz={
                    "transmission": float(res.transmission_rate_hz[i]),
                    "reflection_psb": float(res.reflection_rate_hz[i]),
                },
                counts={
                    "transmission": int(round(res.transmission_rate_hz[i] * res.dwell_s)),
                    "reflection_psb": int(round(res.reflection_rate_hz[i] * res.dwell_s)),
                },
            )
            for i, d in enumerate(grid)
        ]
        return SweepResponse(
            config_hash=config_hash(cfg),
            version=__version__,
            dwell_s=res.dwell_s,
            points=points,
        )

    @app.post("/correlate", response_model=CorrelateResponse)
    async def correlate(req: CorrelateRequest):
        stream_a = ttag_from_bytes(_decode_b64(req.ttag_a_base64, "ttag_a"))
        if req.ttag_b_base64 is None:
            stream_b = stream_a
        else:
            stream_b = ttag_from_bytes(_decode_b64(req.ttag_b_base64, "ttag_b"))
        hist = correlate_streams(stream_a, stream_b, req.bin_width_ps, req.max_lag_ps)
        g0, g0e = hist.zero_bin()
        return CorrelateResponse(
            version=__version__,
            bin_width_ps=hist.bin_width_ps,
            n_bins=int(hist.tau_ps.size),
            total_pairs=hist.n_pairs,
            g2_zero=g0,
            g2_zero_err=g0e,
            csv=hist.to_csv(),
        )

    @app.post("/fit", response_model=FitResponse)
    async def fit_endpoint(req: FitRequest):
        data = SpectrumData.from_csv(req.csv)
        bounds = None
        if req.bounds is not None:
            bounds = {k: tuple(v) for k, v in req.bounds.items()}
        result = fit(
            req.model,
            data,
            init=req.init,
            bounds=bounds,
            fixed=req.fixed,
            max_iterations=req.max_iterations,
            multi_start=req.multi_start,
        )
        return FitResponse(
            version=__version__,
            model=result.model,
            values=result.values,
            sigmas=result.sigmas,
            free_names=list(result.free_names),
            covariance=np.asarray(result.covariance).tolist(),
            chi2=result.chi2,
            ndof=result.ndof,
            chi2_reduced=result.chi2_reduced,
            converged=result.converged,
            n_iterations=result.n_iterations,
            message=result.message,
        )

    @app.post("/derive", response_model=DeriveResponse)
    async def derive(req: DeriveRequest):
        if (req.fit is None) == (req.transmission is None):
            raise ConfigurationError(
                "provide exactly one of 'fit' or 'transmission'"
            )
        if req.fit is not None:
            fr = FitResult.from_dict(req.fit.model_dump())
            derived = derive_coupling(fr, force_phase_pi=req.force_phase_pi)
            fig = derived.figures
            return DeriveResponse(
                version=__version__,
                transmission=fig.transmission,
                transmission_sigma=fig.transmission_sigma,
                cooperativity=fig.cooperativity,
                cooperativity_sigma=fig.cooperativity_sigma,
                beta=fig.beta,
                beta_sigma=fig.beta_sigma,
                qe_lower_bound=fig.qe_lower_bound,
                qe_lower_bound_sigma=fig.qe_sigma,
                fitted_phase_rad=derived.fitted_phase_rad,
                phase_deviation_rad=derived.phase_deviation_rad,
            )
        sigma = req.transmission_sigma if req.transmission_sigma is not None else 0.0
        fig = cooperativity_from_transmission(req.transmission, sigma)
        return DeriveResponse(
            version=__version__,
            transmission=fig.transmission,
            transmission_sigma=fig.transmission_sigma,
            cooperativity=fig.cooperativity,
            cooperativity_sigma=fig.cooperativity_sigma,
            beta=fig.beta,
            beta_sigma=fig.beta_sigma,
            qe_lower_bound=fig.qe_lower_bound,
            qe_lower_bound_sigma=fig.qe_sigma,
        )

    @app.post("/phase-sweep", response_model=PhaseSweepResponse)
    async def phase_sweep_endpoint(req: PhaseSweepRequest):
        table = phase_sweep(
            alpha=req.alpha,
            gamma_fwhm_hz=req.gamma_fwhm_mhz * 1e6,
            phases_rad=req.phases_rad,
            detuning_grid_hz=np.asarray(req.detuning_grid_mhz) * 1e6,
        )
        return PhaseSweepResponse(version=__version__, csv=table.to_csv())

    return app
