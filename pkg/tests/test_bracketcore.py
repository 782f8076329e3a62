from fractions import Fraction

import pytest

from hydrobrackets import (
    CanonicalData,
    ConstantBracket,
    HydroBracket,
    NonSquareCurvature,
    Poly,
    Tail,
    canonical_bracket,
    check_ferapontov_conditions,
    check_poisson,
    classify_geometry,
    mf_bracket,
    sample_points,
)

HALF = Fraction(1, 2)


def n1_bracket(g, b, tails=()):
    return HydroBracket(1, [[g]], [[[b]]], tails)


@pytest.fixture
def disc():
    """Constant-curvature example: metric d^{ij} - u^i u^j, identity affinor."""
    u1, u2 = Poly.variable(2, 0), Poly.variable(2, 1)
    eta = ConstantBracket([[1, 0], [0, 1]])
    d = CanonicalData(
        eta, [HALF * u1, HALF * u2], [HALF * (u1 * u1 + u2 * u2)], [1]
    )
    return canonical_bracket(d)


class TestCheckPoisson:
    def test_n1_valid(self):
        u = Poly.variable(1, 0)
        report = check_poisson(n1_bracket(2 * u, Poly.const(1, 1)))
        assert report.ok

    def test_n1_connection_mismatch(self):
        u = Poly.variable(1, 0)
        report = check_poisson(n1_bracket(2 * u, Poly.zero(1)))
        assert report.relations() == {"02"}
        [violation] = report.entries
        assert violation.residual == Poly.const(1, 2)

    def test_n1_with_tail(self):
        u = Poly.variable(1, 0)
        tail = Tail(1, [[Poly.const(1, 1)]])
        report = check_poisson(n1_bracket(-u * u, -u, (tail,)))
        assert report.ok

    def test_tail_weight_enters_quadratically(self, disc):
        # same coefficients, weight 2 on the tail: relation 07 must fire
        reweighted = HydroBracket(
            2, disc.metric, disc.conn,
            (Tail(1, disc.tails[0].affinor, Fraction(2)),),
        )
        report = check_poisson(reweighted)
        assert report.relations() == {"07"}

    def test_report_is_deterministic(self, disc):
        r1 = check_poisson(disc)
        r2 = check_poisson(disc)
        assert [(v.relation, v.index) for v in r1] == [(v.relation, v.index) for v in r2]


class TestFerapontovConditions:
    def test_local_flat_case(self):
        eta = [[Poly.const(2, 1), Poly.zero(2)], [Poly.zero(2), Poly.const(2, 1)]]
        zero = Poly.zero(2)
        b = HydroBracket(2, eta, [[[zero] * 2] * 2] * 2, ())
        report = check_ferapontov_conditions(b, [Fraction(1, 3), Fraction(1, 5)])
        assert report.ok

    def test_disc_clean(self, disc):
        report = check_ferapontov_conditions(disc, [Fraction(1, 3), Fraction(1, 5)])
        assert report.ok

    def test_flipped_sign_breaks_gauss(self, disc):
        flipped = HydroBracket(
            2, disc.metric, disc.conn, (Tail(-1, disc.tails[0].affinor),)
        )
        report = check_ferapontov_conditions(flipped, [Fraction(1, 3), Fraction(1, 5)])
        assert report.relations() == {"gauss"}
        assert all(isinstance(v.residual, Fraction) for v in report)


class TestClassifyGeometry:
    def test_constant_metric_flat(self):
        eta = [[Poly.const(2, 2), Poly.zero(2)], [Poly.zero(2), Poly.const(2, -1)]]
        zero = Poly.zero(2)
        b = HydroBracket(2, eta, [[[zero] * 2] * 2] * 2, ())
        geo = classify_geometry(b, [Fraction(1), Fraction(2)])
        assert geo.classification == "flat"
        assert all(
            v == 0 for plane in geo.levi_civita_residual for row in plane for v in row
        )

    def test_disc_constant_curvature(self, disc):
        geo = classify_geometry(disc, [Fraction(1, 3), Fraction(1, 5)])
        assert geo.classification == "constant-curvature"
        assert geo.curvature_constant == 1

    def test_curvature_constant_point_independent(self, disc):
        for point in sample_points(disc, seed=7, count=3):
            geo = classify_geometry(disc, point)
            assert geo.curvature_constant == 1

    def test_n1_always_flat(self):
        u = Poly.variable(1, 0)
        geo = classify_geometry(n1_bracket(2 * u, Poly.const(1, 1)), [Fraction(3)])
        assert geo.classification == "flat"

    def test_levi_civita_residual_zero_for_valid(self, disc):
        geo = classify_geometry(disc, [Fraction(1, 4), Fraction(-1, 3)])
        assert all(
            v == 0 for plane in geo.levi_civita_residual for row in plane for v in row
        )

    def test_curvature_skew_symmetry(self, disc):
        geo = classify_geometry(disc, [Fraction(2, 3), Fraction(1, 2)])
        r = geo.curvature
        n = 2
        for i in range(n):
            for j in range(n):
                for k in range(n):
                    for l in range(n):
                        assert r[i][j][k][l] == -r[j][i][k][l]
                        assert r[i][j][k][l] == -r[i][j][l][k]


class TestMfBracket:
    def test_zero_curvature_is_local(self):
        u = Poly.variable(1, 0)
        b = mf_bracket([[2 * u]], [[[Poly.const(1, 1)]]], 0)
        assert b.ntails == 0

    def test_unit_curvature(self, disc):
        b = mf_bracket(disc.metric, disc.conn, 1)
        assert b.ntails == 1
        assert b.tails[0].sign == 1
        assert b.tails[0].affinor[0][0] == Poly.const(2, 1)
        assert b.tails[0].affinor[0][1] == Poly.zero(2)

    def test_square_curvature_scales_affinor(self):
        u = Poly.variable(2, 0)
        metric = [[2 * u, Poly.zero(2)], [Poly.zero(2), 2 * u]]
        zero = Poly.zero(2)
        conn = [[[zero] * 2] * 2] * 2
        b = mf_bracket(metric, conn, 4)
        assert b.tails[0].affinor[0][0] == Poly.const(2, 2)
        b = mf_bracket(metric, conn, Fraction(4, 9))
        assert b.tails[0].affinor[1][1] == Poly.const(2, Fraction(2, 3))
        b = mf_bracket(metric, conn, -1)
        assert b.tails[0].sign == -1

    def test_non_square_rejected(self):
        u = Poly.variable(1, 0)
        with pytest.raises(NonSquareCurvature):
            mf_bracket([[2 * u]], [[[Poly.const(1, 1)]]], 2)


class TestSamplePoints:
    def test_deterministic(self, disc):
        assert sample_points(disc, 3, 5) == sample_points(disc, 3, 5)

    def test_skips_singular(self, disc):
        for point in sample_points(disc, 11, 20):
            value = [
                [disc.metric[i][j].eval(point) for j in range(2)] for i in range(2)
            ]
            assert value[0][0] * value[1][1] - value[0][1] * value[1][0] != 0


class TestValidation:
    def test_dimension_check(self):
        with pytest.raises(ValueError):
            HydroBracket(2, [[Poly.zero(2)]], [[[Poly.zero(2)]]], ())

    def test_tail_sign_check(self):
        with pytest.raises(ValueError):
            Tail(2, [[Poly.const(1, 1)]])

    def test_tail_weight_check(self):
        with pytest.raises(ValueError):
            Tail(1, [[Poly.const(1, 1)]], Fraction(-1))
