"""Closed-form physics layer: response functions, coupling figures, g2 shapes.

Reference values in this file were frozen from independent arithmetic
(direct evaluation of the defining formulas in separate scripts), not from
the code under test.
"""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wgqed.errors import ConfigurationError, DomainError
from wgqed.physics import (
    CoherentStateSpec,
    CouplingFigures,
    EmitterParams,
    InterferenceModel,
    SpectralDiffusion,
    beta_factor,
    coherent_amplitudes,
    cooperativity_from_transmission,
    decay_rate_from_fwhm,
    extinction_intensity,
    extinction_intensity_diffused,
    g2_bunching,
    g2_driven,
    g2_driven_shape,
    lorentzian_response,
)


class TestEmitterParams:
    def test_lifetime_limited_ties_decay_to_linewidth(self):
        em = EmitterParams.lifetime_limited(154e6)
        assert em.decay_rate == pytest.approx(2 * math.pi * 154e6, rel=1e-15)
        assert em.lifetime == pytest.approx(1 / (2 * math.pi * 154e6), rel=1e-15)
        assert em.rabi_frequency == 0.0

    def test_rabi_to_decay_scaling(self):
        em = EmitterParams.lifetime_limited(154e6, rabi_to_decay=1.3)
        assert em.rabi_frequency == pytest.approx(1.3 * em.decay_rate, rel=1e-15)
        assert em.saturation == pytest.approx(1.69, rel=1e-12)
        assert not em.is_weak_drive

    def test_weak_drive_threshold(self):
        assert EmitterParams.lifetime_limited(1e8, rabi_to_decay=0.049).is_weak_drive
        assert not EmitterParams.lifetime_limited(1e8, rabi_to_decay=0.05).is_weak_drive

    def test_decay_rate_from_fwhm(self):
        assert decay_rate_from_fwhm(1.0) == pytest.approx(2 * math.pi, rel=1e-15)

    @pytest.mark.parametrize(
        "kwargs",
        [
            {"gamma_fwhm": 0.0, "decay_rate": 1.0},
            {"gamma_fwhm": 1.0, "decay_rate": -1.0},
            {"gamma_fwhm": 1.0, "decay_rate": 1.0, "rabi_frequency": -0.1},
        ],
    )
    def test_rejects_nonphysical_rates(self, kwargs):
        with pytest.raises(DomainError):
            EmitterParams(**kwargs)


class TestInterferenceModel:
    def test_phase_normalized_to_principal_range(self):
        m = InterferenceModel(0.13, 2 * math.pi + 0.5)
        assert m.phase_rad == pytest.approx(0.5, abs=1e-12)

    def test_field_factor(self):
        m = InterferenceModel(0.13, math.pi)
        assert m.field_factor == pytest.approx(-0.13 + 0j, abs=1e-15)

    def test_negative_weight_rejected(self):
        with pytest.raises(DomainError):
            InterferenceModel(-0.1, 0.0)


class TestLorentzianResponse:
    def test_unit_on_resonance(self):
        assert lorentzian_response(0.0, 360e6) == pytest.approx(1.0 + 0j)

    def test_half_intensity_at_hwhm(self):
        # |S|^2 drops to 1/2 at Delta = fwhm/2 by definition of the width
        val = abs(lorentzian_response(180e6, 360e6)) ** 2
        assert val == pytest.approx(0.5, rel=1e-12)

    @given(
        detuning=st.floats(-1e10, 1e10, allow_nan=False),
        fwhm=st.floats(1e6, 1e9, allow_nan=False),
    )
    def test_magnitude_squared_equals_real_part(self, detuning, fwhm):
        # The single-pole response satisfies |S|^2 = Re S identically; this
        # identity is what makes an additive offset unidentifiable in
        # extinction fits, so it is worth pinning down as a property.
        s = lorentzian_response(detuning, fwhm)
        assert abs(s) ** 2 == pytest.approx(s.real, rel=1e-9, abs=1e-12)

    def test_rejects_nonpositive_width(self):
        with pytest.raises(DomainError):
            lorentzian_response(0.0, 0.0)


class TestExtinction:
    def setup_method(self):
        self.emitter = EmitterParams.lifetime_limited(360e6)

    def test_destructive_phase_dip(self):
        m = InterferenceModel(0.13, math.pi)
        assert extinction_intensity(0.0, m, self.emitter) == pytest.approx(
            (1 - 0.13) ** 2, abs=1e-12
        )

    def test_constructive_phase_peak(self):
        m = InterferenceModel(0.13, 2 * math.pi)
        assert extinction_intensity(0.0, m, self.emitter) == pytest.approx(
            (1 + 0.13) ** 2, abs=1e-12
        )

    def test_quadrature_phase(self):
        m = InterferenceModel(0.13, 1.5 * math.pi)
        assert extinction_intensity(0.0, m, self.emitter) == pytest.approx(
            1 + 0.13**2, abs=1e-12
        )

    def test_far_detuned_limit_is_unity(self):
        m = InterferenceModel(0.4, math.pi)
        assert extinction_intensity(1e13, m, self.emitter) == pytest.approx(1.0, abs=1e-6)

    @given(
        alpha=st.floats(0.0, 1.0),
        phase=st.floats(0.0, 2 * math.pi),
        detuning=st.floats(-5e9, 5e9),
    )
    def test_intensity_nonnegative(self, alpha, phase, detuning):
        m = InterferenceModel(alpha, phase)
        assert extinction_intensity(detuning, m, self.emitter) >= 0.0

    def test_vectorized_matches_scalar(self):
        m = InterferenceModel(0.2, math.pi)
        grid = np.linspace(-1e9, 1e9, 7)
        vec = extinction_intensity(grid, m, self.emitter)
        scal = [extinction_intensity(d, m, self.emitter) for d in grid]
        np.testing.assert_allclose(vec, scal, rtol=1e-15)


class TestExtinctionDiffused:
    def setup_method(self):
        self.emitter = EmitterParams.lifetime_limited(154e6)
        self.model = InterferenceModel(0.13, math.pi)

    def test_zero_sigma_reduces_to_plain_curve(self):
        grid = np.linspace(-1e9, 1e9, 11)
        plain = extinction_intensity(grid, self.model, self.emitter)
        diff = extinction_intensity_diffused(
            grid, self.model, self.emitter, SpectralDiffusion(0.0)
        )
        np.testing.assert_allclose(diff, plain, rtol=1e-15)

    def test_diffusion_shallows_the_dip(self):
        dip0 = extinction_intensity(0.0, self.model, self.emitter)
        dip = extinction_intensity_diffused(
            0.0, self.model, self.emitter, SpectralDiffusion(111e6)
        )
        assert dip0 < dip < 1.0

    def test_even_in_detuning(self):
        d = extinction_intensity_diffused(
            np.array([-3e8, 3e8]), self.model, self.emitter, SpectralDiffusion(1e8)
        )
        assert d[0] == pytest.approx(d[1], rel=1e-12)

    def test_quadrature_converged_at_default_order(self):
        grid = np.linspace(-8e8, 8e8, 9)
        lo = extinction_intensity_diffused(
            grid, self.model, self.emitter, SpectralDiffusion(111e6), quadrature_points=64
        )
        hi = extinction_intensity_diffused(
            grid, self.model, self.emitter, SpectralDiffusion(111e6), quadrature_points=128
        )
        # the Lorentzian tails limit Gauss-Hermite accuracy to ~1e-5 here;
        # what matters is that the default order is inside that plateau
        np.testing.assert_allclose(lo, hi, rtol=1e-4)

    def test_rejects_too_few_nodes(self):
        with pytest.raises(ConfigurationError):
            extinction_intensity_diffused(
                0.0, self.model, self.emitter, SpectralDiffusion(1e8), quadrature_points=8
            )


class TestCoherentState:
    def test_reference_amplitudes(self):
        # e^{-nbar/2} nbar^{n/2} / sqrt(n!) at nbar = 0.00223:
        # 0.99888687, 0.04716968, 0.00157512 (frozen from direct evaluation)
        amps = coherent_amplitudes(CoherentStateSpec(0.00223))
        assert amps[0] == pytest.approx(0.9988856213815317, rel=1e-12)
        assert amps[1] == pytest.approx(0.04717025164936238, rel=1e-12)
        assert amps[2] == pytest.approx(0.0015750909162142209, rel=1e-12)

    def test_probabilities_are_poisson(self):
        nbar = 0.05
        amps = coherent_amplitudes(CoherentStateSpec(nbar, cutoff=10))
        probs = amps**2
        expect = [math.exp(-nbar) * nbar**n / math.factorial(n) for n in range(11)]
        np.testing.assert_allclose(probs, expect, rtol=1e-12)

    def test_norm_captured_within_tolerance(self):
        amps = coherent_amplitudes(CoherentStateSpec(0.00223))
        assert np.sum(amps**2) == pytest.approx(1.0, abs=1e-9)

    def test_vacuum_limit(self):
        amps = coherent_amplitudes(CoherentStateSpec(0.0))
        assert amps[0] == 1.0
        assert np.all(amps[1:] == 0.0)

    def test_lossy_truncation_rejected(self):
        with pytest.raises(DomainError):
            CoherentStateSpec(0.1, cutoff=1)


class TestCouplingFigures:
    def test_reference_chain(self):
        # frozen: C = T^{-1/2} - 1 and sigma_C = sigma_T / (2 T^{3/2})
        # at T = 0.752 +/- 0.017
        fig = cooperativity_from_transmission(0.752, 0.017)
        assert fig.cooperativity == pytest.approx(0.15316401003610625, rel=1e-14)
        assert fig.cooperativity_sigma == pytest.approx(0.01303443362407833, rel=1e-14)
        assert fig.beta == pytest.approx(0.13282066445284793, rel=1e-14)
        assert fig.beta_sigma == pytest.approx(0.0098018940853069059, rel=1e-14)
        assert fig.qe_lower_bound == fig.cooperativity
        assert fig.qe_sigma == fig.cooperativity_sigma

    def test_perfect_transmission_gives_zero_coupling(self):
        fig = cooperativity_from_transmission(1.0, 0.0)
        assert fig.cooperativity == 0.0
        assert fig.beta == 0.0
        assert fig.qe_lower_bound == 0.0

    @given(t=st.floats(0.04, 1.0))
    def test_beta_transmission_identity(self, t):
        fig = cooperativity_from_transmission(t)
        assert (1.0 - fig.beta) ** 2 == pytest.approx(t, rel=1e-10)

    @given(c=st.floats(0.0, 10.0))
    def test_round_trip_through_transmission(self, c):
        fig = CouplingFigures.from_cooperativity(c, 0.0)
        back = cooperativity_from_transmission(fig.transmission)
        assert back.cooperativity == pytest.approx(c, rel=1e-9, abs=1e-12)

    @pytest.mark.parametrize("t", [0.0, -0.5, 1.0001])
    def test_domain_errors(self, t):
        with pytest.raises(DomainError):
            cooperativity_from_transmission(t)

    def test_negative_sigma_rejected(self):
        with pytest.raises(DomainError):
            cooperativity_from_transmission(0.8, -0.01)

    def test_inconsistent_fields_rejected(self):
        good = cooperativity_from_transmission(0.752, 0.017)
        with pytest.raises(DomainError):
            CouplingFigures(
                transmission=good.transmission,
                transmission_sigma=good.transmission_sigma,
                cooperativity=good.cooperativity + 1e-3,
                cooperativity_sigma=good.cooperativity_sigma,
                beta=good.beta,
                beta_sigma=good.beta_sigma,
                qe_lower_bound=good.qe_lower_bound,
                qe_sigma=good.qe_sigma,
            )

    def test_beta_factor(self):
        assert beta_factor(0.0) == 0.0
        assert beta_factor(1.0) == pytest.approx(0.5)
        with pytest.raises(DomainError):
            beta_factor(-0.1)


class TestG2Shapes:
    def test_driven_boundary_values(self):
        em = EmitterParams.lifetime_limited(154e6, rabi_to_decay=1.3)
        assert g2_driven(0.0, 1.0, em) == pytest.approx(0.0, abs=1e-12)
        assert g2_driven(0.0, 0.6, em) == pytest.approx(0.4, rel=1e-12)
        assert g2_driven(50 * em.lifetime, 1.0, em) == pytest.approx(1.0, abs=1e-9)

    def test_driven_even_in_tau(self):
        em = EmitterParams.lifetime_limited(154e6, rabi_to_decay=1.3)
        t = np.array([-3e-9, 3e-9])
        vals = g2_driven(t, 0.9, em)
        assert vals[0] == pytest.approx(vals[1], rel=1e-14)

    def test_driven_rabi_oscillation_period(self):
        # well above critical drive the first maximum sits near pi / W
        em = EmitterParams.lifetime_limited(100e6, rabi_to_decay=4.0)
        w = math.sqrt(em.rabi_frequency**2 - (em.decay_rate / 4) ** 2)
        tau = np.linspace(0.0, 2 * math.pi / w, 4001)
        curve = g2_driven(tau, 1.0, em)
        t_peak = tau[np.argmax(curve)]
        assert t_peak == pytest.approx(math.pi / w, rel=0.02)

    def test_driven_continuous_through_critical_drive(self):
        # W -> 0 at Omega = Gamma/4; complex arithmetic has to hand over
        # smoothly from oscillatory to hyperbolic
        gamma = 2 * math.pi * 1e8
        tau = np.linspace(0.0, 10 / gamma, 200)
        below = g2_driven_shape(tau, 1.0, gamma, 0.2499 * gamma / 1.0)
        above = g2_driven_shape(tau, 1.0, gamma, 0.2501 * gamma / 1.0)
        np.testing.assert_allclose(below, above, atol=2e-4)
        assert np.all(np.isfinite(below))

    def test_driven_shape_matches_emitter_wrapper(self):
        em = EmitterParams.lifetime_limited(154e6, rabi_to_decay=0.7)
        tau = np.linspace(0, 5e-9, 50)
        np.testing.assert_array_equal(
            g2_driven(tau, 0.8, em),
            g2_driven_shape(tau, 0.8, em.decay_rate, em.rabi_frequency),
        )

    def test_driven_amplitude_bounds(self):
        em = EmitterParams.lifetime_limited(154e6, rabi_to_decay=1.0)
        for bad in (-0.1, 1.1):
            with pytest.raises(DomainError):
                g2_driven(0.0, bad, em)

    def test_bunching_boundary_values(self):
        gamma = 2 * math.pi * 154e6
        assert g2_bunching(0.0, 0.24, gamma) == pytest.approx(1.24, rel=1e-12)
        assert g2_bunching(50 / gamma, 0.24, gamma) == pytest.approx(1.0, abs=1e-9)

    def test_bunching_decay_constant(self):
        gamma = 2 * math.pi * 154e6
        v = g2_bunching(1 / gamma, 0.5, gamma)
        assert v == pytest.approx(1 + 0.5 / math.e, rel=1e-12)

    def test_bunching_dip_allowed_down_to_zero(self):
        gamma = 1e9
        assert g2_bunching(0.0, -1.0, gamma) == pytest.approx(0.0, abs=1e-12)
        with pytest.raises(DomainError):
            g2_bunching(0.0, -1.01, gamma)

    @settings(max_examples=30)
    @given(
        a=st.floats(0.0, 1.0),
        ratio=st.floats(0.01, 4.0),
        t=st.floats(0.0, 1e-8),
    )
    def test_driven_stays_in_physical_band(self, a, ratio, t):
        gamma = 2 * math.pi * 1.54e8
        val = g2_driven_shape(t, a, gamma, ratio * gamma)
        # bracket magnitude is bounded by ~1 + 3 Gamma t / 4 e^{...}; the
        # curve never goes negative and the overshoot is mild
        assert -1e-12 <= val <= 2.5
