"""Shared fixtures and the acceptance-summary hook.

The two trajectory fixtures are the expensive pieces of the suite (about
half a minute together); they are session-scoped so every test that needs
realistic click streams shares one run.
"""

import math
import warnings

import pytest

from wgqed.correlator import correlate_streams
from wgqed.physics import EmitterParams, InterferenceModel
from wgqed.trajectory import DetectorModel, SimConfig, evolve_trajectory

# Populated by tests/test_acceptance.py; printed one line per criterion at
# the end of the run so the verdicts are visible without -s.
ACCEPTANCE_RESULTS: dict[int, tuple[str, bool, str]] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(ACCEPTANCE_RESULTS):
        label, passed, detail = ACCEPTANCE_RESULTS[num]
        verdict = "PASS" if passed else "FAIL"
        terminalreporter.write_line(f"criterion {num:2d} {verdict}  {label}: {detail}")


@pytest.fixture(scope="session")
def strong_drive_run():
    """Driven emitter at the bunching operating point, all three channels.

    154 MHz lifetime-limited line, Omega = 1.3 Gamma, alpha = 0.13 at the
    destructive-interference phase. 1.2e5 lifetimes across 120 shards gives
    enough pairs for a >5 sigma bunching amplitude.
    """
    emitter = EmitterParams.lifetime_limited(154e6, rabi_to_decay=1.3)
    model = InterferenceModel(0.13, math.pi)
    tau = emitter.lifetime
    config = SimConfig(
        time_step=0.01 * tau,
        duration=1.2e5 * tau,
        laser_rate=0.78188 / tau,
        rng_seed=20260301,
        n_shards=120,
        channels=("transmission_hbt_a", "transmission_hbt_b", "reflection_psb"),
    )
    detectors = DetectorModel(efficiency=0.9)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", UserWarning)
        result = evolve_trajectory(emitter, model, config, detectors)
    hbt = correlate_streams(
        result.streams["transmission_hbt_a"],
        result.streams["transmission_hbt_b"],
        128,
        8192,
    )
    reflection = correlate_streams(
        result.streams["reflection_psb"], result.streams["reflection_psb"], 128, 8192
    )
    return {
        "emitter": emitter,
        "model": model,
        "config": config,
        "result": result,
        "hbt": hbt,
        "reflection": reflection,
    }


@pytest.fixture(scope="session")
def laser_only_run():
    """Same detectors and splitter but the emitter decoupled (alpha = 0)."""
    emitter = EmitterParams.lifetime_limited(154e6, rabi_to_decay=1.3)
    model = InterferenceModel(0.0, math.pi)
    tau = emitter.lifetime
    config = SimConfig(
        time_step=0.01 * tau,
        duration=4e4 * tau,
        laser_rate=1.5 / tau,
        rng_seed=20260302,
        n_shards=64,
        channels=("transmission_hbt_a", "transmission_hbt_b"),
    )
    detectors = DetectorModel(efficiency=0.9)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", UserWarning)
        result = evolve_trajectory(emitter, model, config, detectors)
    hbt = correlate_streams(
        result.streams["transmission_hbt_a"],
        result.streams["transmission_hbt_b"],
        128,
        8192,
    )
    return {"emitter": emitter, "model": model, "result": result, "hbt": hbt}
