"""Special-function wrappers against independent series and closed-form oracles."""

import math

import numpy as np
import pytest

from patrec.specfun import bessel_i, bessel_j, sinc


def series_bessel_i(nu, x, terms=200):
    """Independent power-series oracle; all terms positive, no cancellation.

    Terms are built recursively to avoid overflow of the separate powers.
    """
    term = (x / 2.0) ** nu / math.gamma(nu + 1)
    total = term
    for k in range(1, terms):
        term *= (x / 2.0) ** 2 / (k * (nu + k))
        total += term
    return total


def series_bessel_j(nu, x, terms=120):
    """Alternating series oracle; trustworthy for x up to roughly 20 in doubles."""
    total = 0.0
    for k in range(terms):
        total += (-1) ** k * (x / 2.0) ** (2 * k + nu) / (
            math.factorial(k) * math.gamma(nu + k + 1)
        )
    return total


class TestSinc:
    def test_at_zero(self):
        assert sinc(0.0) == 1.0

    def test_at_pi(self):
        assert abs(sinc(math.pi)) < 1e-15

    def test_at_half_pi(self):
        # sin(pi/2) / (pi/2) = 2/pi
        assert sinc(math.pi / 2) == pytest.approx(2.0 / math.pi, abs=1e-15)

    def test_even_and_bounded(self):
        x = np.linspace(-100.0, 100.0, 10_000)
        vals = sinc(x)
        assert np.allclose(vals, sinc(-x), atol=0.0)
        assert np.all(np.abs(vals) <= 1.0 + 1e-15)


class TestBesselI:
    def test_order_zero_at_zero(self):
        assert bessel_i(0, 0.0) == 1.0

    def test_order_one_at_zero(self):
        assert bessel_i(1, 0.0) == 0.0

    def test_series_value_at_one(self):
        # frozen from the series oracle (30+ terms converge to double precision)
        assert bessel_i(0, 1.0) == pytest.approx(1.2660658777520082, rel=1e-14)

    def test_against_series_grid(self):
        rng = np.random.default_rng(42)
        for _ in range(100):
            nu = rng.choice([0.0, 0.5, 1.0, 2.0, 3.5, 5.0, 10.0])
            x = rng.uniform(0.0, 50.0)
            assert bessel_i(nu, x) == pytest.approx(series_bessel_i(nu, x), rel=1e-12)

    def test_small_argument_limit(self):
        # I_nu(x) / x^nu -> 1 / (2^nu Gamma(nu + 1)) as x -> 0+
        for nu in (0.5, 1.0, 2.0, 4.0):
            x = 1e-6
            limit = 1.0 / (2.0**nu * math.gamma(nu + 1))
            assert bessel_i(nu, x) / x**nu == pytest.approx(limit, rel=1e-6)

    @pytest.mark.parametrize("x", [0.5, 2.0, 10.0])
    def test_recurrence(self, x):
        for m in (1, 2, 5):
            lhs = bessel_i(m - 1, x) - bessel_i(m + 1, x)
            rhs = (2.0 * m / x) * bessel_i(m, x)
            assert lhs == pytest.approx(rhs, rel=1e-9)

    def test_domain_errors(self):
        with pytest.raises(ValueError):
            bessel_i(-1.0, 1.0)
        with pytest.raises(ValueError):
            bessel_i(0.0, -1.0)


class TestBesselJ:
    def test_order_zero_at_zero(self):
        assert bessel_j(0, 0.0) == 1.0

    @pytest.mark.parametrize("x", [1.0, 2.0, 5.0])
    def test_half_integer_closed_form(self, x):
        expected = math.sqrt(2.0 / (math.pi * x)) * math.sin(x)
        assert bessel_j(0.5, x) == pytest.approx(expected, rel=1e-10)

    def test_half_integer_closed_forms_large_range(self):
        # J_{n+1/2}(x) = sqrt(2x/pi) j_n(x) with the spherical closed forms
        xs = np.linspace(1.0, 200.0, 50)
        for x in xs:
            j0 = math.sin(x) / x
            j1 = math.sin(x) / x**2 - math.cos(x) / x
            j2 = (3.0 / x**2 - 1.0) * math.sin(x) / x - 3.0 * math.cos(x) / x**2
            c = math.sqrt(2.0 * x / math.pi)
            assert bessel_j(0.5, x) == pytest.approx(c * j0, rel=1e-10, abs=1e-13)
            assert bessel_j(1.5, x) == pytest.approx(c * j1, rel=1e-10, abs=1e-13)
            assert bessel_j(2.5, x) == pytest.approx(c * j2, rel=1e-10, abs=1e-13)

    def test_against_series_small_arguments(self):
        rng = np.random.default_rng(3)
        for _ in range(60):
            nu = rng.choice([0.0, 0.5, 1.0, 2.0, 3.0, 6.0, 10.0])
            x = rng.uniform(0.0, 15.0)
            assert bessel_j(nu, x) == pytest.approx(series_bessel_j(nu, x), rel=1e-10, abs=1e-13)

    def test_first_zero_of_j0(self):
        # bisection on the series oracle gives 2.404825557695773
        lo, hi = 2.0, 3.0
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            if series_bessel_j(0, lo) * series_bessel_j(0, mid) <= 0:
                hi = mid
            else:
                lo = mid
        zero_oracle = 0.5 * (lo + hi)
        assert zero_oracle == pytest.approx(2.404825557695773, abs=1e-12)
        assert bessel_j(0, zero_oracle) == pytest.approx(0.0, abs=1e-12)

    def test_domain_errors(self):
        with pytest.raises(ValueError):
            bessel_j(-0.5, 1.0)
        with pytest.raises(ValueError):
            bessel_j(1.0, -2.0)
