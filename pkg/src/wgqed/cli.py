"""Command-line front end.

Every subcommand is a thin client of the HTTP service: by default the app
is mounted in-process (no socket), and ``--server URL`` points the same
calls at a running instance instead. Artifacts embed the config hash and
tool version but no timestamps, so identical inputs reproduce identical
bytes.

Exit codes: 0 success, 2 config or input error, 3 simulation runtime
error, 4 fit non-convergence or degeneracy.
"""

from __future__ import annotations

import argparse
import asyncio
import base64
import hashlib
import json
import math
import sys
from pathlib import Path

import httpx

from . import __version__

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RUNTIME = 3
EXIT_FIT = 4

_INPUT_ERROR_TYPES = {"configuration", "data_format", "domain"}


class _CliError(Exception):
    def __init__(self, message: str, code: int):
        super().__init__(message)
        self.code = code


class ServiceClient:
    """POST JSON to the service, in-process unless a server URL is given."""

    def __init__(self, server: str | None = None):
        self.server = server
        self._app = None
        if server is None:
            from .service import create_app

            self._app = create_app()

    def post(self, path: str, payload: dict) -> httpx.Response:
        if self.server is not None:
            with httpx.Client(base_url=self.server, timeout=3600.0) as client:
                return client.post(path, json=payload)

        async def go():
            transport = httpx.ASGITransport(app=self._app)
            async with httpx.AsyncClient(
                transport=transport, base_url="http://inproc", timeout=None
            ) as client:
                return await client.post(path, json=payload)

        return asyncio.run(go())


def _raise_for_response(resp: httpx.Response) -> dict:
    """Translate an error response into a _CliError with the right exit code."""
    if resp.status_code < 400:
        return resp.json()
    try:
        body = resp.json()
    except ValueError:
        raise _CliError(f"service error {resp.status_code}: {resp.text}", EXIT_RUNTIME)
    etype = body.get("error_type")
    detail = body.get("detail", resp.text)
    if isinstance(detail, list):  # request-schema validation from the framework
        detail = "; ".join(
            ".".join(str(p) for p in e.get("loc", [])) + ": " + e.get("msg", "")
            for e in detail
        )
        etype = "configuration"
    if "byte_offset" in body:
        detail = f"{detail} (byte offset {body['byte_offset']})"
    if etype == "rank_deficiency":
        raise _CliError(str(detail), EXIT_FIT)
    if etype in _INPUT_ERROR_TYPES:
        raise _CliError(str(detail), EXIT_CONFIG)
    raise _CliError(str(detail), EXIT_RUNTIME)


def _read_text(path: str, what: str) -> str:
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise _CliError(f"cannot read {what} {path}: {exc}", EXIT_CONFIG)


def _read_bytes(path: str, what: str) -> bytes:
    try:
        return Path(path).read_bytes()
    except OSError as exc:
        raise _CliError(f"cannot read {what} {path}: {exc}", EXIT_CONFIG)


def _write_artifact(path: Path, data: str | bytes) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    if isinstance(data, str):
        path.write_text(data)
    else:
        path.write_bytes(data)


def _dump_json(doc: dict) -> str:
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


# ---------------------------------------------------------------------------
# subcommands


def cmd_simulate(args) -> int:
    client = ServiceClient(args.server)
    config = json.loads(_read_config_json(args.config))
    if args.seed is not None:
        config.setdefault("simulation", {})["rng_seed"] = args.seed
    out_dir = Path(args.out)

    body = _raise_for_response(client.post("/simulate", {"config": config}))
    summary = {
        "version": body["version"],
        "config_hash": body["config_hash"],
        "rng_seed": body["rng_seed"],
        "span_s": body["span_s"],
        "gamma_transmission_ratio": body["gamma_transmission_ratio"],
        "raw_jump_counts": body["raw_jump_counts"],
        "detected_rates_hz": body["detected_rates_hz"],
        "files": {},
    }
    for stream in body["streams"]:
        name = stream["channel"]
        fname = f"{name}.ttag"
        _write_artifact(out_dir / fname, base64.b64decode(stream["ttag_base64"]))
        summary["files"][name] = fname

    if config.get("sweep") is not None:
        sweep_body = _raise_for_response(
            client.post("/sweep", {"config": config, "threads": args.threads})
        )
        lines = ["detuning_hz,transmission_rate_hz,reflection_rate_hz"]
        for pt in sweep_body["points"]:
            lines.append(
                f"{pt['detuning_hz']:.10g},"
                f"{pt['rates_hz']['transmission']:.10g},"
                f"{pt['rates_hz']['reflection_psb']:.10g}"
            )
        _write_artifact(out_dir / "sweep.csv", "\n".join(lines) + "\n")
        summary["files"]["sweep"] = "sweep.csv"
        summary["sweep"] = _sweep_summary(sweep_body["points"])

    _write_artifact(out_dir / "summary.json", _dump_json(summary))
    print(f"wrote {len(summary['files'])} artifact(s) to {out_dir}")
    return EXIT_OK


def _read_config_json(path: str) -> str:
    text = _read_text(path, "config")
    try:
        json.loads(text)
    except json.JSONDecodeError as exc:
        raise _CliError(f"config {path} is not valid JSON: {exc}", EXIT_CONFIG)
    return text


def _sweep_summary(points: list[dict]) -> dict:
    """On/off-resonance transmission ratio from a sweep's endpoints."""
    by_abs = sorted(points, key=lambda p: abs(p["detuning_hz"]))
    on = by_abs[0]
    lo, hi = points[0], points[-1]
    off_rate = 0.5 * (lo["rates_hz"]["transmission"] + hi["rates_hz"]["transmission"])
    on_rate = on["rates_hz"]["transmission"]
    doc = {
        "on_resonance_detuning_hz": on["detuning_hz"],
        "on_resonance_rate_hz": on_rate,
        "off_resonance_rate_hz": off_rate,
    }
    if off_rate > 0:
        ratio = on_rate / off_rate
        n_on = max(on["counts"]["transmission"], 1)
        n_off = max(lo["counts"]["transmission"] + hi["counts"]["transmission"], 1)
        doc["on_off_ratio"] = ratio
        doc["on_off_ratio_err"] = ratio * math.sqrt(1.0 / n_on + 1.0 / n_off)
    return doc


def cmd_correlate(args) -> int:
    client = ServiceClient(args.server)
    payload = {
        "ttag_a_base64": base64.b64encode(_read_bytes(args.a, "time-tag file")).decode(),
        "bin_width_ps": args.bin_width_ps,
        "max_lag_ps": args.max_lag_ps,
    }
    if args.b is not None:
        payload["ttag_b_base64"] = base64.b64encode(
            _read_bytes(args.b, "time-tag file")
        ).decode()
    body = _raise_for_response(client.post("/correlate", payload))
    if args.out is not None:
        _write_artifact(Path(args.out), body["csv"])
    print(
        f"g2(0) = {body['g2_zero']:.6g} +/- {body['g2_zero_err']:.3g} "
        f"({body['total_pairs']} pairs in {body['n_bins']} bins)"
    )
    return EXIT_OK


def _parse_assignments(pairs: list[str], what: str) -> dict:
    out = {}
    for item in pairs:
        if "=" not in item:
            raise _CliError(f"{what} expects name=value, got {item!r}", EXIT_CONFIG)
        name, _, value = item.partition("=")
        try:
            out[name.strip()] = float(value)
        except ValueError:
            raise _CliError(f"{what} {name}: {value!r} is not a number", EXIT_CONFIG)
    return out


def cmd_fit(args) -> int:
    client = ServiceClient(args.server)
    csv_text = _read_text(args.data, "data file")
    fixed: dict[str, float | None] = {}
    for item in args.fix or []:
        if "=" in item:
            name, _, value = item.partition("=")
            try:
                fixed[name.strip()] = float(value)
            except ValueError:
                raise _CliError(f"--fix {name}: {value!r} is not a number", EXIT_CONFIG)
        else:
            fixed[item.strip()] = None
    payload = {
        "model": args.model,
        "csv": csv_text,
        "init": _parse_assignments(args.set or [], "--set") or None,
        "fixed": fixed or None,
        "multi_start": args.multi_start,
        "max_iterations": args.max_iterations,
    }
    body = _raise_for_response(client.post("/fit", payload))
    doc = dict(body)
    doc["input_hash"] = hashlib.sha256(csv_text.encode()).hexdigest()
    text = _dump_json(doc)
    if args.out is not None:
        _write_artifact(Path(args.out), text)
    else:
        print(text, end="")
    for name in body["free_names"]:
        print(
            f"{name} = {body['values'][name]:.8g} +/- {body['sigmas'][name]:.3g}",
            file=sys.stderr,
        )
    if not body["converged"]:
        print(f"fit did not converge: {body['message']}", file=sys.stderr)
        return EXIT_FIT
    return EXIT_OK


def cmd_derive(args) -> int:
    client = ServiceClient(args.server)
    if (args.fit is None) == (args.transmission is None):
        raise _CliError(
            "provide exactly one of --fit FILE or --transmission T", EXIT_CONFIG
        )
    if args.fit is not None:
        try:
            fit_doc = json.loads(_read_text(args.fit, "fit result"))
        except json.JSONDecodeError as exc:
            raise _CliError(f"fit file {args.fit} is not valid JSON: {exc}", EXIT_CONFIG)
        fit_doc.pop("input_hash", None)
        fit_doc.pop("cost_history", None)
        payload = {"fit": fit_doc, "force_phase_pi": not args.free_phase}
    else:
        payload = {
            "transmission": args.transmission,
            "transmission_sigma": args.sigma,
        }
    body = _raise_for_response(client.post("/derive", payload))
    text = _dump_json(body)
    if args.out is not None:
        _write_artifact(Path(args.out), text)
    else:
        print(text, end="")
    print(
        f"T = {body['transmission']:.4g} +/- {body['transmission_sigma']:.3g}; "
        f"C = {body['cooperativity']:.4g} +/- {body['cooperativity_sigma']:.3g}; "
        f"beta = {body['beta']:.4g} +/- {body['beta_sigma']:.3g}",
        file=sys.stderr,
    )
    return EXIT_OK


def _parse_grid(text: str, what: str) -> list[float]:
    """Comma list ('0,5,10') or linspace spec ('lo:hi:n')."""
    try:
        if ":" in text:
            lo, hi, n = text.split(":")
            lo, hi, n = float(lo), float(hi), int(n)
            if n < 2:
                raise ValueError("need at least 2 points")
            step = (hi - lo) / (n - 1)
            return [lo + step * i for i in range(n)]
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise _CliError(f"cannot parse {what} {text!r}: {exc}", EXIT_CONFIG)


def cmd_phase_sweep(args) -> int:
    client = ServiceClient(args.server)
    payload = {
        "alpha": args.alpha,
        "gamma_fwhm_mhz": args.gamma_fwhm_mhz,
        "phases_rad": _parse_grid(args.phases_rad, "--phases-rad"),
        "detuning_grid_mhz": _parse_grid(args.detuning_grid_mhz, "--detuning-grid-mhz"),
    }
    body = _raise_for_response(client.post("/phase-sweep", payload))
    if args.out is not None:
        _write_artifact(Path(args.out), body["csv"])
        print(f"wrote {args.out}")
    else:
        print(body["csv"], end="")
    return EXIT_OK


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    uvicorn.run(create_app(), host=args.host, port=args.port, log_level="info")
    return EXIT_OK


# ---------------------------------------------------------------------------
# argument wiring


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="wgqed",
        description="Simulate, correlate, and fit waveguide-emitter photon data.",
    )
    parser.add_argument("--version", action="version", version=f"wgqed {__version__}")
    parser.add_argument(
        "--server",
        default=None,
        metavar="URL",
        help="HTTP service to call (default: run the service in-process)",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run the photon-stream simulation")
    p.add_argument("--config", required=True, help="JSON run config")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--seed", type=int, default=None, help="override simulation.rng_seed")
    p.add_argument("--threads", type=int, default=1, help="worker threads for sweeps")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("correlate", help="histogram pair delays between two streams")
    p.add_argument("--a", required=True, help="first .ttag file")
    p.add_argument("--b", default=None, help="second .ttag file (default: autocorrelate)")
    p.add_argument("--bin-width-ps", type=int, default=128)
    p.add_argument("--max-lag-ps", type=int, required=True)
    p.add_argument("--out", default=None, help="histogram CSV path")
    p.set_defaults(func=cmd_correlate)

    p = sub.add_parser("fit", help="least-squares fit of a registered model")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True, help="CSV with x,y[,yerr]")
    p.add_argument("--set", action="append", metavar="NAME=VALUE", help="initial value")
    p.add_argument(
        "--fix",
        action="append",
        metavar="NAME[=VALUE]",
        help="freeze a parameter (at VALUE if given)",
    )
    p.add_argument("--multi-start", action="store_true")
    p.add_argument("--max-iterations", type=int, default=200)
    p.add_argument("--out", default=None, help="result JSON path (default: stdout)")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("derive", help="coupling figures from a fit or a transmission")
    p.add_argument("--fit", default=None, help="fit result JSON from 'wgqed fit'")
    p.add_argument("--transmission", type=float, default=None)
    p.add_argument("--sigma", type=float, default=0.0, help="transmission uncertainty")
    p.add_argument(
        "--free-phase",
        action="store_true",
        help="use the fitted phase instead of forcing pi",
    )
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_derive)

    p = sub.add_parser("phase-sweep", help="tabulate line shapes over phases")
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--gamma-fwhm-mhz", type=float, required=True)
    p.add_argument("--phases-rad", required=True, help="comma list or lo:hi:n")
    p.add_argument("--detuning-grid-mhz", required=True, help="comma list or lo:hi:n")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_phase_sweep)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except _CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except httpx.HTTPError as exc:
        print(f"error: cannot reach service: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
