import math

import numpy as np
import pytest

from rmig.poly import GridDensity, Polynomial, eval_poly, is_confining, pv_stieltjes

SEMICIRCLE_RADIUS = math.sqrt(2.0)


def semicircle_grid(num=2048):
    return GridDensity.from_density(
        lambda x: np.sqrt(np.maximum(2.0 - x * x, 0.0)) / math.pi,
        (-SEMICIRCLE_RADIUS, SEMICIRCLE_RADIUS), num)


class TestPolynomial:
    def test_eval_monomial(self):
        assert eval_poly(Polynomial((0.0, 0.0, 1.0)), 3.0) == 9.0

    def test_eval_zero(self):
        assert eval_poly(Polynomial((0.0,)), 5.0) == 0.0

    def test_eval_hand_value(self):
        # 1 + 2x + x^3 at 2: 1 + 4 + 8 = 13
        assert eval_poly(Polynomial((1.0, 2.0, 0.0, 1.0)), 2.0) == 13.0

    def test_eval_vectorized_matches_scalar(self):
        p = Polynomial((0.5, -1.0, 0.0, 2.0))
        xs = np.linspace(-2, 2, 7)
        assert np.allclose(p(xs), [p(float(x)) for x in xs])

    def test_derivative_square(self):
        assert Polynomial((0.0, 0.0, 1.0)).derivative().coeffs == (0.0, 2.0)

    def test_derivative_constant(self):
        assert Polynomial((7.0,)).derivative().coeffs == (0.0,)

    def test_derivative_quartic(self):
        assert Polynomial((0, 0, 0, 0, 1.0)).derivative().coeffs == (0, 0, 0, 4.0)

    @pytest.mark.parametrize("seed", range(6))
    def test_derivative_of_antiderivative_roundtrip(self, seed):
        rng = np.random.default_rng(seed)
        deg = int(rng.integers(0, 9))
        p = Polynomial(tuple(rng.normal(size=deg + 1)))
        assert p.antiderivative(rng.normal()).derivative().coeffs == \
            pytest.approx(p.coeffs)

    def test_degree_bookkeeping(self):
        p = Polynomial((1.0, 0.0, 2.0, 0.0))
        assert p.degree == 2
        assert p.antiderivative().degree == 3
        assert p.derivative().degree == 1

    def test_translate_and_dilate(self):
        p = Polynomial((0.0, 0.0, 1.0))
        q = p.translate(0.7)            # (x - 0.7)^2
        assert q(1.7) == pytest.approx(1.0)
        d = p.dilate(2.0)               # (x/2)^2
        assert d(4.0) == pytest.approx(4.0)

    def test_product(self):
        p = Polynomial((0.0, 1.0)) * Polynomial((1.0, 1.0))
        assert p.coeffs == (0.0, 1.0, 1.0)

    def test_json_roundtrip(self):
        p = Polynomial((0.25, 0.0, -3.0))
        assert Polynomial.from_json(p.to_json()) == p


class TestConfining:
    def test_square(self):
        assert is_confining(Polynomial((0.0, 0.0, 1.0)))

    def test_cubic_escapes(self):
        assert not is_confining(Polynomial((0.0, 0.0, 0.0, 1.0)))

    def test_quartic_with_negative_square_term(self):
        assert is_confining(Polynomial((0.0, 0.0, -1.0, 0.0, 1.0)))

    def test_negative_leading(self):
        assert not is_confining(Polynomial((0.0, 0.0, -1.0)))


class TestGridDensity:
    def test_mass_is_one(self):
        q = semicircle_grid()
        q.check_normalized(tol=1e-10)

    def test_nodes_sorted_inside_support(self):
        q = semicircle_grid(128)
        assert np.all(np.diff(q.nodes) > 0)
        assert q.nodes[0] >= q.support[0] and q.nodes[-1] <= q.support[1]

    def test_rejects_unsorted_nodes(self):
        with pytest.raises(ValueError):
            GridDensity([0.0, -1.0], [0.5, 0.5], (-2, 2))

    def test_integrate_polynomial_moment(self):
        q = semicircle_grid()
        # second moment of the unit semicircle of radius R is R^2/4
        assert q.integrate(lambda x: x * x) == pytest.approx(0.5, abs=1e-9)

    def test_density_interpolation(self):
        q = semicircle_grid()
        x = 0.3123
        assert q.density_at(x) == pytest.approx(
            math.sqrt(2 - x * x) / math.pi, abs=1e-10)


class TestPvStieltjes:
    def test_semicircle_on_support_is_identity(self):
        # the transform of the radius-sqrt(2) semicircle is x on support
        q = semicircle_grid()
        assert pv_stieltjes(q, 0.5) == pytest.approx(0.5, abs=1e-6)

    def test_symmetric_density_vanishes_at_center(self):
        q = semicircle_grid()
        assert abs(pv_stieltjes(q, 0.0)) < 1e-12

    def test_far_field_tail(self):
        q = semicircle_grid()
        assert abs(100.0 * pv_stieltjes(q, 100.0) - 1.0) < 0.01

    def test_tail_at_ten_radii(self):
        q = semicircle_grid()
        x = 10.0 * SEMICIRCLE_RADIUS
        assert x * pv_stieltjes(q, x) == pytest.approx(1.0, rel=0.05)

    def test_tail_for_asymmetric_density(self):
        raw = GridDensity.from_density(
            lambda x: (1.0 + 0.4 * x) * np.sqrt(np.maximum((x + 1) * (2 - x), 0)),
            (-1.0, 2.0), 2048)
        mass = raw.mass()
        q = GridDensity.from_density(
            lambda x: (1.0 + 0.4 * x) * np.sqrt(np.maximum((x + 1) * (2 - x), 0))
            / mass, (-1.0, 2.0), 2048)
        # 1/x decay about the support center
        center, radius = 0.5, 1.5
        x = center + 10.0 * radius
        assert (x - center) * pv_stieltjes(q, x) == pytest.approx(1.0, rel=0.05)

    def test_odd_about_center(self):
        q = semicircle_grid()
        for d in (0.2, 0.55, 0.9):
            assert abs(pv_stieltjes(q, d) + pv_stieltjes(q, -d)) < 1e-8

    def test_node_hit_is_flagged(self):
        q = semicircle_grid(256)
        diag = {}
        x = float(q.nodes[100])
        val = pv_stieltjes(q, x, diagnostics=diag)
        assert diag.get("node_hit") is True
        assert val == pytest.approx(x, abs=1e-3)

    def test_brute_force_oracle(self):
        # independent subtraction-trick quadrature on a uniform midpoint grid
        R = SEMICIRCLE_RADIUS
        num = 400_000
        y = np.linspace(-R, R, num, endpoint=False) + R / num
        h = 2 * R / num
        x = 0.73

        def dens(v):
            return np.sqrt(np.maximum(2 - v * v, 0.0)) / math.pi

        brute = float(np.sum((dens(y) - dens(x)) / (x - y)) * h
                      + dens(x) * math.log((x + R) / (R - x)))
        assert pv_stieltjes(semicircle_grid(), x) == pytest.approx(brute,
                                                                   abs=1e-5)
