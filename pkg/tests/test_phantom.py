"""Disc phantoms: point evaluation and exact circular means."""

import math

import numpy as np
import pytest

from patrec.phantom import Disc, Phantom, default_phantom


def brute_mean(phantom, z, r, n_phi=100_000):
    """Angular trapezoid oracle for the circular mean."""
    ang = 2.0 * math.pi * np.arange(n_phi) / n_phi
    pts = np.stack([z[0] + r * np.cos(ang), z[1] + r * np.sin(ang)], axis=-1)
    return float(phantom.eval(pts).mean())


class TestEval:
    def test_empty(self):
        assert Phantom().eval(np.array([0.3, -0.7])) == 0.0

    def test_single_disc_indicator(self):
        ph = Phantom((Disc(0.0, 0.0, 0.5, 1.0),))
        assert ph.eval(np.array([0.3, 0.0])) == 1.0
        assert ph.eval(np.array([0.6, 0.0])) == 0.0
        assert ph.eval(np.array([0.5, 0.0])) == 1.0  # boundary counts as inside

    def test_overlap_superposition(self):
        ph = Phantom((Disc(-0.1, 0.0, 0.3, 1.0), Disc(0.1, 0.0, 0.3, 1.0)))
        assert ph.eval(np.array([0.0, 0.0])) == 2.0


class TestExactSphericalMean:
    def test_circle_fully_inside(self):
        ph = Phantom((Disc(0.0, 0.0, 0.5, 1.0),))
        assert ph.exact_spherical_mean(np.array([0.0, 0.0]), 0.3) == 1.0

    def test_circle_fully_outside(self):
        ph = Phantom((Disc(0.0, 0.0, 0.5, 1.0),))
        assert ph.exact_spherical_mean(np.array([1.0, 0.0]), 0.4) == 0.0

    def test_partial_arc_against_quadrature(self):
        ph = Phantom((Disc(0.2, 0.0, 0.3, 1.0),))
        z = np.array([1.0, 0.0])
        exact = ph.exact_spherical_mean(z, 0.8)
        assert exact == pytest.approx(brute_mean(ph, z, 0.8), abs=1e-5)

    def test_random_configurations_against_quadrature(self):
        rng = np.random.default_rng(7)
        ph = default_phantom()
        for _ in range(50):
            z = rng.uniform(-1.2, 1.2, 2)
            r = rng.uniform(0.05, 2.0)
            exact = ph.exact_spherical_mean(z, r)
            assert exact == pytest.approx(brute_mean(ph, z, r, 10_000), abs=5e-4)

    def test_linearity(self):
        d1, d2 = Disc(-0.2, 0.1, 0.3, 1.0), Disc(0.3, -0.1, 0.2, 0.7)
        both = Phantom((d1, d2))
        one = Phantom((d1,))
        two = Phantom((d2,))
        z = np.array([0.9, 0.3])
        r = np.linspace(0.05, 1.8, 40)
        np.testing.assert_allclose(
            both.exact_spherical_mean(z, r),
            one.exact_spherical_mean(z, r) + two.exact_spherical_mean(z, r),
            rtol=0.0,
            atol=1e-15,
        )

    def test_degenerate_center(self):
        ph = Phantom((Disc(0.0, 0.0, 0.5, 1.0),))
        assert ph.exact_spherical_mean(np.array([0.0, 0.0]), 0.5) == 1.0
        assert ph.exact_spherical_mean(np.array([0.0, 0.0]), 0.51) == 0.0


class TestDefaultPhantom:
    def test_reference_values(self):
        ph = default_phantom()
        assert ph.eval(np.array([-0.35, 0.2])) == 1.0
        assert ph.eval(np.array([0.9, 0.9])) == 0.0

    def test_total_mass_closed_form(self):
        ph = default_phantom()
        mass = sum(d.amplitude * math.pi * d.radius**2 for d in ph.components)
        assert ph.total_mass() == pytest.approx(mass, rel=1e-15)
        assert mass == pytest.approx(0.3320663434844411, rel=1e-12)
        # independent check: midpoint quadrature of the indicator field
        xs = np.linspace(-1, 1, 2001)
        X, Y = np.meshgrid(xs, xs, indexing="ij")
        cell = (xs[1] - xs[0]) ** 2
        approx = float(ph.eval(np.stack([X, Y], axis=-1)).sum()) * cell
        assert approx == pytest.approx(mass, rel=2e-3)

    def test_inside_unit_disc(self):
        assert default_phantom().max_extent() < 1.0

    def test_squared_norm_disjoint(self):
        ph = default_phantom()
        expected = sum(d.amplitude**2 * math.pi * d.radius**2 for d in ph.components)
        assert ph.squared_norm() == pytest.approx(expected, rel=1e-15)

    def test_roundtrip_dicts(self):
        ph = default_phantom()
        assert Phantom.from_dicts(ph.to_dicts()) == ph
