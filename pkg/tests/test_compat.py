from fractions import Fraction

import pytest

from hydrobrackets import (
    CanonicalData,
    ConstantBracket,
    HydroBracket,
    NotExact,
    NotPoisson,
    PencilWeights,
    Poly,
    Tail,
    build_pencil,
    canonical_bracket,
    check_compatibility,
    check_integrability,
    check_poisson,
    check_special_liouville,
    reconstruct_potentials,
)

HALF = Fraction(1, 2)
ETA1 = ConstantBracket([[1]])
ETA2 = ConstantBracket([[1, 0], [0, 1]])


def var(n, i):
    return Poly.variable(n, i)


class TestConstantBracket:
    def test_inverse_exact(self):
        eta = ConstantBracket([[2, 1], [1, 1]])
        n = 2
        for i in range(n):
            for j in range(n):
                delta = sum(eta.eta[i][s] * eta.lower[s][j] for s in range(n))
                assert delta == (1 if i == j else 0)

    def test_rejects_nonsymmetric(self):
        with pytest.raises(ValueError, match="symmetric"):
            ConstantBracket([[1, 2], [3, 4]])

    def test_rejects_degenerate(self):
        from hydrobrackets import SingularMetric

        with pytest.raises(SingularMetric):
            ConstantBracket([[1, 1], [1, 1]])


class TestCanonicalBracket:
    def test_n1_quadratic(self):
        u = var(1, 0)
        b = canonical_bracket(CanonicalData(ETA1, [HALF * u * u]))
        assert b.metric[0][0] == 2 * u
        assert b.conn[0][0][0] == Poly.const(1, 1)
        assert b.ntails == 0

    def test_half_identity_recovers_constant(self):
        eta = ConstantBracket([[2, 1], [1, 1]])
        d = CanonicalData(eta, [HALF * var(2, 0), HALF * var(2, 1)])
        b = canonical_bracket(d)
        for i in range(2):
            for j in range(2):
                assert b.metric[i][j] == Poly.const(2, eta.eta[i][j])
                for k in range(2):
                    assert not b.conn[i][j][k]

    def test_n1_tail_only(self):
        u = var(1, 0)
        b = canonical_bracket(CanonicalData(ETA1, [Poly.zero(1)], [HALF * u * u], [1]))
        assert b.metric[0][0] == -u * u
        assert b.conn[0][0][0] == -u
        assert b.tails[0].affinor[0][0] == Poly.const(1, 1)
        assert b.tails[0].sign == 1


class TestCheckIntegrability:
    def test_valid_pair(self):
        u1, u2 = var(2, 0), var(2, 1)
        d = CanonicalData(ETA2, [HALF * (u1 * u1 + u2 * u2), u1 * u2])
        assert check_integrability(d).ok

    def test_hessian_clash(self):
        u1, u2 = var(2, 0), var(2, 1)
        d = CanonicalData(ETA2, [u1 * u1, u1 * u2])
        report = check_integrability(d)
        assert "ass1" in report.relations()
        # Hessian products [[0,2],[0,0]] vs [[0,0],[2,0]] differ by 2 at (0,1)
        entry = next(v for v in report if v.relation == "ass1" and v.index[2:] == (0, 1))
        assert entry.residual == Poly.const(2, 2)

    def test_linear_potentials_trivial(self):
        d = CanonicalData(ETA2, [3 * var(2, 0), HALF * var(2, 1)])
        assert check_integrability(d).ok

    def test_matches_poisson_on_corpus(self, corpus, mutations):
        for member in corpus + mutations:
            symbolic = check_poisson(canonical_bracket(member.data)).ok
            assert check_integrability(member.data).ok == symbolic, member.name


class TestCheckCompatibility:
    def test_canonical_always_compatible(self, corpus):
        for member in corpus:
            b = canonical_bracket(member.data)
            report = check_compatibility(member.data.eta, b)
            assert report.ok, member.name

    def test_n1_example(self):
        u = var(1, 0)
        b = HydroBracket(1, [[2 * u]], [[[Poly.const(1, 1)]]], ())
        assert check_compatibility(ETA1, b).ok

    def test_nonsymmetric_affinor_derivative_fires_relation_3(self):
        u1 = var(2, 0)
        zero = Poly.zero(2)
        affinor = [[zero, u1], [zero, zero]]
        eta_polys = [
            [Poly.const(2, 1), zero],
            [zero, Poly.const(2, 1)],
        ]
        b = HydroBracket(
            2, eta_polys, [[[zero] * 2] * 2] * 2, (Tail(1, affinor),)
        )
        report = check_compatibility(ETA2, b, require_poisson=False)
        assert "3" in report.relations()

    def test_precondition_enforced(self):
        u = var(1, 0)
        bad = HydroBracket(1, [[2 * u]], [[[Poly.zero(1)]]], ())
        with pytest.raises(NotPoisson):
            check_compatibility(ETA1, bad)

    def test_bw_never_fires_when_1_to_3_clean(self, corpus):
        for member in corpus:
            b = canonical_bracket(member.data)
            report = check_compatibility(member.data.eta, b, require_poisson=False)
            assert "bw" not in report.relations(), member.name


class TestBuildPencil:
    def test_lambda_identity(self):
        u = var(1, 0)
        b = canonical_bracket(CanonicalData(ETA1, [HALF * u * u]))
        assert build_pencil(b, ETA1, PencilWeights(1, 0)) == b

    def test_pure_constant(self):
        u = var(1, 0)
        b = canonical_bracket(CanonicalData(ETA1, [HALF * u * u]))
        p = build_pencil(b, ETA1, PencilWeights(0, 1))
        assert p.metric[0][0] == Poly.const(1, 1)
        assert not p.conn[0][0][0]
        assert p.ntails == 0

    def test_shifted_metric_still_poisson(self):
        u = var(1, 0)
        b = canonical_bracket(CanonicalData(ETA1, [HALF * u * u]))
        p = build_pencil(b, ETA1, PencilWeights(1, 3))
        assert p.metric[0][0] == 2 * u + 3
        assert p.conn[0][0][0] == Poly.const(1, 1)
        assert check_poisson(p).ok

    def test_negative_lambda1_flips_sign_into_tail(self, corpus):
        disc = next(m.data for m in corpus if m.name == "n2-disc")
        b = canonical_bracket(disc)
        p = build_pencil(b, disc.eta, PencilWeights(-2, 1))
        assert p.tails[0].sign == -1
        assert p.tails[0].weight == 2
        assert check_poisson(p).ok


class TestReconstruction:
    def test_round_trip_quadratic(self):
        u = var(1, 0)
        d = CanonicalData(ETA1, [HALF * u * u])
        chain = reconstruct_potentials(canonical_bracket(d), ETA1)
        assert chain.potentials == (HALF * u * u,)
        assert chain.tail_potentials == ()

    def test_round_trip_tail(self):
        u = var(1, 0)
        d = CanonicalData(ETA1, [Poly.zero(1)], [HALF * u * u], [1])
        chain = reconstruct_potentials(canonical_bracket(d), ETA1)
        assert chain.potentials == (Poly.zero(1),)
        assert chain.tail_potentials == (HALF * u * u,)

    def test_bad_tail_raises_not_exact(self):
        u1 = var(2, 0)
        zero = Poly.zero(2)
        affinor = [[zero, u1], [zero, zero]]
        eta_polys = [[Poly.const(2, 1), zero], [zero, Poly.const(2, 1)]]
        b = HydroBracket(2, eta_polys, [[[zero] * 2] * 2] * 2, (Tail(1, affinor),))
        with pytest.raises(NotExact):
            reconstruct_potentials(b, ETA2)

    def test_chain_invariants(self, corpus):
        for member in corpus:
            d = member.data
            b = canonical_bracket(d)
            chain = reconstruct_potentials(b, d.eta)
            n = d.nvars
            # dP^{ij}/du^k equals the reduced connection
            for i in range(n):
                for j in range(n):
                    for k in range(n):
                        assert (
                            chain.conn_potential[i][j].partial(k)
                            == chain.reduced_conn[i][j][k]
                        ), member.name
            # g = R + R^T + sum_a eff_a phi phi
            for i in range(n):
                for j in range(n):
                    acc = chain.metric_split[i][j] + chain.metric_split[j][i]
                    for a, tail in enumerate(b.tails):
                        acc = acc + tail.effective * (
                            chain.tail_primitives[a][i] * chain.tail_primitives[a][j]
                        )
                    assert acc == b.metric[i][j], member.name

    def test_bracket_level_round_trip(self, corpus):
        for member in corpus:
            d = member.data
            b = canonical_bracket(d)
            chain = reconstruct_potentials(b, d.eta)
            rebuilt = canonical_bracket(
                CanonicalData(d.eta, chain.potentials, chain.tail_potentials, d.signs)
            )
            assert rebuilt == b, member.name


class TestSpecialLiouville:
    def test_valid_data(self, corpus):
        disc = next(m.data for m in corpus if m.name == "n2-disc")
        b = canonical_bracket(disc)
        result = check_special_liouville(b, disc.eta)
        assert result.ok
        # Phi^{ij} = eta^{is} dF^j/du^s with the recovered potentials
        assert result.liouville_matrix[0][0] == Poly.const(2, HALF)
        assert result.tail_primitives[0][0] == var(2, 0)

    def test_constant_bracket_itself(self):
        zero = Poly.zero(2)
        eta_polys = [[Poly.const(2, 1), zero], [zero, Poly.const(2, 1)]]
        b = HydroBracket(2, eta_polys, [[[zero] * 2] * 2] * 2, ())
        result = check_special_liouville(b, ETA2)
        assert result.ok
        # canonical gauge splits the constant evenly: Phi = eta / 2
        for i in range(2):
            for j in range(2):
                assert result.liouville_matrix[i][j] == Poly.const(
                    2, Fraction(ETA2.eta[i][j], 2)
                )

    def test_incompatible_bracket_pinpointed(self):
        u1 = var(2, 0)
        zero = Poly.zero(2)
        affinor = [[zero, u1], [zero, zero]]
        eta_polys = [[Poly.const(2, 1), zero], [zero, Poly.const(2, 1)]]
        b = HydroBracket(2, eta_polys, [[[zero] * 2] * 2] * 2, (Tail(1, affinor),))
        # this bracket fails the axioms themselves -> NotPoisson
        with pytest.raises(NotPoisson):
            check_special_liouville(b, ETA2)

    def test_incompatible_eta_pinpointed(self, corpus):
        # a genuine bracket paired with the wrong constant bracket: the
        # result is False and the violated relation is named
        cubic = next(m.data for m in corpus if m.name == "n2-cubic-algebra")
        b = canonical_bracket(cubic)
        wrong_eta = ConstantBracket([[1, 0], [0, -1]])
        result = check_special_liouville(b, wrong_eta)
        assert not result.ok
        assert "1" in result.report.relations()
        assert result.liouville_matrix is None
