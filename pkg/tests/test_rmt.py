import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from spike_music import rmt
from spike_music.rmt import DomainError, MarchenkoPasturModel


def mp_stieltjes_quadrature(c, x):
    """Independent oracle: integrate (t - x)^-1 against the MP density."""
    lo, hi = (1 - math.sqrt(c)) ** 2, (1 + math.sqrt(c)) ** 2
    # density sqrt((t-lo)(hi-t)) / (2 pi c t); the sqrt factor goes in the quadrature weight
    if c < 1:
        val, _ = quad(lambda t: 1 / (2 * math.pi * c * t * (t - x)), lo, hi, weight="alg", wvar=(0.5, 0.5))
    else:
        val, _ = quad(lambda t: 1 / (2 * math.pi * c * (t - x)), lo, hi, weight="alg", wvar=(-0.5, 0.5))
    return val


def richardson(f, x, h=1e-6):
    d1 = (f(x + h) - f(x - h)) / (2 * h)
    d2 = (f(x + h / 2) - f(x - h / 2)) / h
    return (4 * d2 - d1) / 3


cs = st.floats(min_value=0.05, max_value=1.0)
offsets = st.floats(min_value=1e-3, max_value=1e3)
ratios = st.floats(min_value=1.01, max_value=1e4)


class TestModel:
    def test_edges(self):
        m = MarchenkoPasturModel(0.5)
        assert m.lambda_plus == pytest.approx((1 + math.sqrt(0.5)) ** 2, abs=1e-12)
        assert m.lambda_minus == pytest.approx((1 - math.sqrt(0.5)) ** 2, abs=1e-12)

    @pytest.mark.parametrize("c", [0.0, -0.1, 1.5])
    def test_bad_ratio(self, c):
        with pytest.raises(ValueError):
            MarchenkoPasturModel(c)

    def test_inconsistent_edge_rejected(self):
        with pytest.raises(ValueError):
            MarchenkoPasturModel(0.5, lambda_plus=3.0)

    def test_from_dims(self):
        assert MarchenkoPasturModel.from_dims(20, 40).c == 0.5


class TestStieltjes:
    def test_exact_anchor(self):
        assert MarchenkoPasturModel(0.5).stieltjes(11.55) == pytest.approx(-2 / 21, abs=1e-12)

    def test_c_one(self):
        assert MarchenkoPasturModel(1.0).stieltjes(5.0) == pytest.approx((math.sqrt(5) - 5) / 10, abs=1e-12)

    def test_large_x(self):
        x = 1e6
        assert MarchenkoPasturModel(0.5).stieltjes(x) == pytest.approx(-1 / x, rel=1e-4)

    @pytest.mark.parametrize("c", [0.1, 0.5, 0.9, 1.0])
    @pytest.mark.parametrize("dx", [0.05, 1.0, 20.0])
    def test_matches_density_quadrature(self, c, dx):
        model = MarchenkoPasturModel(c)
        x = model.lambda_plus + dx
        assert model.stieltjes(x) == pytest.approx(mp_stieltjes_quadrature(c, x), rel=1e-8)

    @pytest.mark.parametrize("x", [2.9, 2.914213562373095, 1.0])
    def test_domain(self, x):
        m = MarchenkoPasturModel(0.5)
        with pytest.raises(DomainError):
            m.stieltjes(x)
        with pytest.raises(DomainError):
            m.stieltjes_derivative(x)

    def test_derivative_anchor(self):
        m = MarchenkoPasturModel(0.5)
        fd = richardson(m.stieltjes, 11.55)
        assert fd == pytest.approx(0.0091159, abs=1e-6)
        assert m.stieltjes_derivative(11.55) == pytest.approx(fd, rel=1e-6)
        gap = m.stieltjes_derivative(11.55) - m.stieltjes(11.55) ** 2
        assert gap == pytest.approx(4.56e-5, rel=2e-3)

    @pytest.mark.parametrize("c", [0.1, 0.5, 1.0])
    def test_derivative_vs_finite_difference(self, c):
        m = MarchenkoPasturModel(c)
        for x in np.linspace(m.lambda_plus + 0.1, 100, 40):
            assert m.stieltjes_derivative(x) == pytest.approx(richardson(m.stieltjes, x), rel=1e-6)


class TestCompanion:
    def test_anchor(self):
        assert rmt.companion_stieltjes(MarchenkoPasturModel(0.5), 11.55) == pytest.approx(-1 / 11, abs=1e-12)

    @pytest.mark.parametrize("x", [4.5, 10.0, 300.0])
    def test_equals_m_at_c_one(self, x):
        m = MarchenkoPasturModel(1.0)
        assert rmt.companion_stieltjes(m, x) == pytest.approx(m.stieltjes(x), abs=1e-15)

    def test_large_x(self):
        assert rmt.companion_stieltjes(MarchenkoPasturModel(0.5), 1e6) == pytest.approx(-1e-6, rel=1e-4)

    def test_derivative_vs_finite_difference(self):
        m = MarchenkoPasturModel(0.3)
        f = lambda x: rmt.companion_stieltjes(m, x)  # noqa: E731
        for x in (3.0, 7.0, 50.0):
            assert rmt.companion_stieltjes_derivative(m, x) == pytest.approx(richardson(f, x), rel=1e-6)


class TestSpikeFunction:
    def test_anchor(self):
        assert rmt.spike_function_g(MarchenkoPasturModel(0.5), 11.55) == pytest.approx(0.1, abs=1e-12)

    def test_decreasing_on_grid(self):
        m = MarchenkoPasturModel(0.5)
        xs = m.lambda_plus + np.geomspace(1e-6, 1e4, 400)
        g = np.array([rmt.spike_function_g(m, x) for x in xs])
        assert np.all(g > 0)
        assert np.all(np.diff(g) < 0)

    @pytest.mark.parametrize("c", [0.1, 0.5, 1.0])
    def test_edge_value(self, c):
        m = MarchenkoPasturModel(c)
        g = rmt.spike_function_g(m, m.lambda_plus + 1e-6)
        assert 1 / math.sqrt(c) - 0.01 < g < 1 / math.sqrt(c)
        assert m.g_edge == pytest.approx(1 / math.sqrt(c))

    def test_vanishes_at_infinity(self):
        assert rmt.spike_function_g(MarchenkoPasturModel(0.5), 1e8) < 1e-7

    def test_derivative_vs_finite_difference(self):
        m = MarchenkoPasturModel(0.5)
        f = lambda x: rmt.spike_function_g(m, x)  # noqa: E731
        assert rmt.spike_function_g_derivative(m, 11.55) == pytest.approx(richardson(f, 11.55), rel=1e-6)
        assert rmt.spike_function_g_derivative(m, 11.55) == pytest.approx(-0.0100502, abs=1e-7)


class TestSolveRho:
    def test_reference_value(self):
        assert rmt.solve_rho(MarchenkoPasturModel(0.5), 10.0) == pytest.approx(11.55, rel=1e-12)

    def test_undetectable(self):
        assert rmt.solve_rho(MarchenkoPasturModel(0.5), 0.5) is None
        assert rmt.solve_rho(MarchenkoPasturModel(0.5), math.sqrt(0.5)) is None

    def test_threshold_limit(self):
        rho = rmt.solve_rho(MarchenkoPasturModel(0.25), 0.5 + 1e-9)
        assert rho == pytest.approx(2.25, abs=1e-6)
        assert rho > 2.25

    def test_nonpositive_power(self):
        with pytest.raises(ValueError):
            rmt.solve_rho(MarchenkoPasturModel(0.5), 0.0)

    def test_closed_form_examples(self):
        assert rmt.mp_rho_closed_form(MarchenkoPasturModel(0.5), 10.0) == pytest.approx(11.55, abs=1e-12)
        assert rmt.mp_rho_closed_form(MarchenkoPasturModel(1.0), 2.0) == pytest.approx(4.5, abs=1e-12)
        # just above threshold the closed form collapses onto the edge
        m = MarchenkoPasturModel(0.5)
        assert rmt.mp_rho_closed_form(m, math.sqrt(0.5) * (1 + 1e-12)) == pytest.approx(m.lambda_plus, abs=1e-9)
        with pytest.raises(DomainError):
            rmt.mp_rho_closed_form(m, 0.5)

    @settings(max_examples=200, deadline=None)
    @given(c=cs, ratio=ratios)
    def test_fixed_point_and_closed_form(self, c, ratio):
        m = MarchenkoPasturModel(c)
        w2 = math.sqrt(c) * ratio
        rho = rmt.solve_rho(m, w2)
        assert rho > m.lambda_plus
        assert abs(w2 * rmt.spike_function_g(m, rho) - 1) < 1e-10
        assert rho == pytest.approx(rmt.mp_rho_closed_form(m, w2), rel=1e-9)


class TestZetaAndBias:
    def test_zeta_anchor(self):
        assert rmt.zeta(MarchenkoPasturModel(0.5), 11.55) == pytest.approx(105 / 99.5, rel=1e-10)

    def test_bias_examples(self):
        m = MarchenkoPasturModel(0.5)
        assert rmt.subspace_bias(m, 10.0) == pytest.approx(99.5 / 105, abs=1e-9)
        assert rmt.subspace_bias(m, 1e4) > 0.999
        assert 0 < rmt.subspace_bias(m, math.sqrt(0.5) * (1 + 1e-4)) < 0.02

    def test_bias_undetectable(self):
        with pytest.raises(DomainError):
            rmt.subspace_bias(MarchenkoPasturModel(0.5), 0.6)

    @settings(max_examples=200, deadline=None)
    @given(c=cs, ratio=st.floats(min_value=1.05, max_value=1e4))
    def test_bias_identity(self, c, ratio):
        m = MarchenkoPasturModel(c)
        w2 = math.sqrt(c) * ratio
        expected = (w2**2 - c) / (w2**2 + c * w2)
        bias = rmt.subspace_bias(m, w2)
        assert bias == pytest.approx(expected, abs=1e-8)
        assert 0 < bias <= 1
        assert rmt.zeta(m, rmt.solve_rho(m, w2)) >= 1


class TestVariance:
    def test_general_formula_anchor(self):
        assert rmt.asymptotic_variance(MarchenkoPasturModel(0.5), 10.0, 1.0) == pytest.approx(2.6533, abs=1e-4)

    def test_closed_examples(self):
        m = MarchenkoPasturModel(0.5)
        assert rmt.mp_variance_closed(m, 10.0, 1.0) == pytest.approx(24 * 11 / 99.5, rel=1e-12)
        assert rmt.mp_variance_closed(m, 10.0, 2.0) == pytest.approx(24 * 11 / 99.5 / 4, rel=1e-12)
        assert rmt.mp_variance_closed(MarchenkoPasturModel(1.0), 2.0, 1.0) == pytest.approx(6.0, rel=1e-12)
        with pytest.raises(DomainError):
            rmt.mp_variance_closed(m, 0.7, 1.0)

    def test_blows_up_at_threshold(self):
        m = MarchenkoPasturModel(0.5)
        vals = [rmt.asymptotic_variance(m, math.sqrt(0.5) * (1 + e), 1.0) for e in (1e-1, 1e-2, 1e-3)]
        assert vals[0] < vals[1] < vals[2]
        assert vals[2] > 1e3

    @settings(max_examples=200, deadline=None)
    @given(c=cs, ratio=ratios, D=st.floats(min_value=0.2, max_value=5.0))
    def test_general_vs_closed(self, c, ratio, D):
        m = MarchenkoPasturModel(c)
        w2 = math.sqrt(c) * ratio
        assert rmt.asymptotic_variance(m, w2, D) == pytest.approx(rmt.mp_variance_closed(m, w2, D), rel=1e-6)

    def test_crlb(self):
        assert rmt.crlb_high_snr(MarchenkoPasturModel(0.5), 10.0, 1.0) == pytest.approx(2.4)
        assert rmt.crlb_high_snr(MarchenkoPasturModel(1.0), 1.0, 1.0) == pytest.approx(6.0)
        m = MarchenkoPasturModel(0.5)
        ratio = rmt.mp_variance_closed(m, 1e4, 1.0) / rmt.crlb_high_snr(m, 1e4, 1.0)
        assert 1.0 < ratio < 1.01


@settings(max_examples=300, deadline=None)
@given(c=cs, dx=offsets)
def test_pointwise_invariants(c, dx):
    m = MarchenkoPasturModel(c)
    x = m.lambda_plus + dx
    mx, dmx = m.stieltjes(x), m.stieltjes_derivative(x)
    assert mx < 0
    assert dmx > 0
    assert dmx >= mx * mx
    assert rmt.spike_function_g(m, x) > 0
    assert rmt.spike_function_g(m, x) > rmt.spike_function_g(m, x * 1.01)


def test_predict_spike():
    p = rmt.predict_spike(MarchenkoPasturModel(0.5), 10.0, 1.0)
    assert p.detectable
    assert p.rho == pytest.approx(11.55)
    assert p.bias == pytest.approx(0.9476190, abs=1e-6)
    assert p.sigma_sq == pytest.approx(2.6532663, abs=1e-6)
    q = rmt.predict_spike(MarchenkoPasturModel(0.5), 0.5, 1.0)
    assert not q.detectable and q.rho is None and q.sigma_sq is None


def test_snr_conversion():
    assert rmt.snr_db_to_power(10.0) == pytest.approx(10.0)
    assert rmt.power_to_snr_db(math.sqrt(0.5)) == pytest.approx(-1.50515, abs=1e-5)
