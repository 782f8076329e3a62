"""Compatibility with a constant bracket: verification, the canonical pair,
potential reconstruction, and the involution characterization.

Everything here revolves around one structure: a first-order bracket whose
every linear combination with the constant bracket eta^{ij} d/dx is again a
bracket.  Such brackets are exactly the ones generated by potential data
(eta, F^1..F^N, psi^1..psi^L, signs):

    g^{ij}   = eta^{is} dF^j/du^s + eta^{js} dF^i/du^s
               - eta^{is} eta^{jk} sum_a e_a dpsi^a/du^s dpsi^a/du^k
    b^{ij}_k = eta^{is} d2F^j/du^s du^k
               - eta^{is} eta^{jp} sum_a e_a d2psi^a/du^s du^k dpsi^a/du^p
    tails    = (e_a, w^a) with (w^a)^i_k = eta^{ip} d2psi^a/du^p du^k

:func:`canonical_bracket` reads the coefficients off this form;
:func:`reconstruct_potentials` inverts it by a chain of exact 1-form
integrations; :func:`check_integrability` tests the closed nonlinear system
on (F, psi) that makes the construction a Poisson bracket.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .bracketcore import HydroBracket, Tail, ViolationReport, check_poisson
from .exactalg import (
    NotExact,
    Poly,
    Scalar,
    fraction_matrix,
    gradient,
    matrix_inverse_exact,
    one_form_potential,
)


class NotPoisson(Exception):
    """Precondition failure: the bracket does not satisfy the axioms."""

    code = "not-poisson"

    def __init__(self, report: ViolationReport):
        self.report = report
        super().__init__(f"bracket fails {len(report)} bracket-axiom relation(s)")


class NonConstantGauge(Exception):
    """The symmetric remainder that fixes the gauge constant is not constant."""

    code = "non-constant-gauge"


@dataclass(frozen=True)
class ConstantBracket:
    """A nondegenerate symmetric constant coefficient matrix and its inverse.

    ``eta[i][j]`` is the contravariant coefficient of the constant bracket;
    ``lower[i][j]`` its exact inverse, used by momentum-type densities.
    """

    eta: tuple[tuple[Fraction, ...], ...]
    lower: tuple[tuple[Fraction, ...], ...]

    def __init__(self, eta: Sequence[Sequence[Scalar]]):
        rows = fraction_matrix(eta)
        n = len(rows)
        if any(len(r) != n for r in rows):
            raise ValueError("eta must be square")
        for i in range(n):
            for j in range(i + 1, n):
                if rows[i][j] != rows[j][i]:
                    raise ValueError("eta must be symmetric")
        lower = matrix_inverse_exact(rows)  # raises if degenerate
        object.__setattr__(self, "eta", tuple(tuple(r) for r in rows))
        object.__setattr__(self, "lower", tuple(tuple(r) for r in lower))

    @property
    def nvars(self) -> int:
        return len(self.eta)


@dataclass(frozen=True)
class CanonicalData:
    """Generating data (eta, potentials, tail potentials, signs) of the pair."""

    eta: ConstantBracket
    potentials: tuple[Poly, ...]
    tail_potentials: tuple[Poly, ...] = ()
    signs: tuple[int, ...] = ()

    def __post_init__(self):
        n = self.eta.nvars
        object.__setattr__(self, "potentials", tuple(self.potentials))
        object.__setattr__(self, "tail_potentials", tuple(self.tail_potentials))
        object.__setattr__(self, "signs", tuple(self.signs))
        if len(self.potentials) != n:
            raise ValueError(f"need exactly {n} potentials, got {len(self.potentials)}")
        if len(self.signs) != len(self.tail_potentials):
            raise ValueError("one sign per tail potential required")
        if any(s not in (1, -1) for s in self.signs):
            raise ValueError("signs must be +1 or -1")
        for p in (*self.potentials, *self.tail_potentials):
            if p.nvars != n:
                raise ValueError("potential over wrong variable count")

    @property
    def nvars(self) -> int:
        return self.eta.nvars

    @property
    def ntails(self) -> int:
        return len(self.tail_potentials)


@dataclass(frozen=True)
class PencilWeights:
    """Coefficients (lambda1, lambda2) of a linear bracket combination."""

    lambda1: Fraction
    lambda2: Fraction

    def __init__(self, lambda1: Scalar, lambda2: Scalar):
        object.__setattr__(self, "lambda1", Fraction(lambda1))
        object.__setattr__(self, "lambda2", Fraction(lambda2))


@dataclass(frozen=True)
class PotentialChain:
    """Everything recovered from a compatible bracket, in integration order.

    * ``tail_primitives[a][i]``: phi with w^a_ij = d phi^a_i / du_j
    * ``reduced_conn[i][j][k]``: b^{ij}_k minus the tail product terms
    * ``conn_potential[i][j]``: P with dP^{ij}/du^k = reduced_conn
    * ``gauge_constant[i][j]``: the constant c fixing the symmetric split
    * ``metric_split[i][j]``: R = P + c, so g = R + R^T + sum_a e_a phi phi
    * ``tail_potentials``, ``potentials``: recovered psi^a and F^i
    """

    tail_primitives: tuple[tuple[Poly, ...], ...]
    reduced_conn: tuple[tuple[tuple[Poly, ...], ...], ...]
    conn_potential: tuple[tuple[Poly, ...], ...]
    gauge_constant: tuple[tuple[Fraction, ...], ...]
    metric_split: tuple[tuple[Poly, ...], ...]
    tail_potentials: tuple[Poly, ...]
    potentials: tuple[Poly, ...]


@dataclass
class LiouvilleResult:
    """Outcome of the involution characterization.

    When the bracket is compatible, ``liouville_matrix`` holds the matrix
    Phi^{ij} = eta^{is} dF^j/du^s and ``tail_primitives`` the vectors
    phi^a_i = eta^{is} dpsi^a/du^s realizing the density-flux form of the
    bracket in these coordinates.
    """

    ok: bool
    report: ViolationReport
    liouville_matrix: tuple[tuple[Poly, ...], ...] | None = None
    tail_primitives: tuple[tuple[Poly, ...], ...] | None = None


# ---------------------------------------------------------------------------
# Construction and verification.
# ---------------------------------------------------------------------------


def canonical_bracket(d: CanonicalData) -> HydroBracket:
    """Coefficients of the bracket generated by the potential data.

    No validity check happens here; pair with :func:`check_integrability`
    or :func:`check_poisson` to know whether the result is a bracket.
    """
    n = d.nvars
    eta = d.eta.eta
    grads = [gradient(f) for f in d.potentials]
    psi_grads = [gradient(p) for p in d.tail_potentials]
    hessians = [
        [[pg[s].partial(k) for k in range(n)] for s in range(n)]
        for pg in psi_grads
    ]

    zero = Poly.zero(n)

    metric = []
    for i in range(n):
        row = []
        for j in range(n):
            acc = zero
            for s in range(n):
                acc = acc + eta[i][s] * grads[j][s] + eta[j][s] * grads[i][s]
            for a, sign in enumerate(d.signs):
                for s in range(n):
                    for k in range(n):
                        acc = acc - sign * eta[i][s] * eta[j][k] * (
                            psi_grads[a][s] * psi_grads[a][k]
                        )
            row.append(acc)
        metric.append(row)

    conn = []
    for i in range(n):
        plane = []
        for j in range(n):
            row = []
            for k in range(n):
                acc = zero
                for s in range(n):
                    acc = acc + eta[i][s] * grads[j][s].partial(k)
                for a, sign in enumerate(d.signs):
                    for s in range(n):
                        for p in range(n):
                            acc = acc - sign * eta[i][s] * eta[j][p] * (
                                hessians[a][s][k] * psi_grads[a][p]
                            )
                row.append(acc)
            plane.append(row)
        conn.append(plane)

    tails = []
    for a, sign in enumerate(d.signs):
        affinor = [
            [
                sum(
                    (eta[i][p] * hessians[a][p][k] for p in range(n)),
                    zero,
                )
                for k in range(n)
            ]
            for i in range(n)
        ]
        tails.append(Tail(sign, affinor))

    return HydroBracket(n, metric, conn, tuple(tails))


def check_integrability(d: CanonicalData) -> ViolationReport:
    """The closed system on (F, psi) equivalent to the bracket axioms.

    * "ass1": for every pair Q1, Q2 drawn from {F^i} u {psi^a}, the Hessians
      commute through eta:  Hess(Q1) eta Hess(Q2) = Hess(Q2) eta Hess(Q1).
      (Swapped pairs give the negated residual, so each unordered pair is
      reported once.)
    * "ass2": for every such Q, g^{is} eta^{jr} Q_{,rs} is (i,j)-symmetric,
      with g the metric from :func:`canonical_bracket`.

    Empty report iff the generated bracket satisfies the bracket axioms.
    """
    n = d.nvars
    eta = d.eta.eta
    qs = list(d.potentials) + list(d.tail_potentials)
    hessians = [
        [[q.partial(s).partial(k) for k in range(n)] for s in range(n)] for q in qs
    ]
    report = ViolationReport()
    zero = Poly.zero(n)

    for a in range(len(qs)):
        for b in range(a + 1, len(qs)):
            ha, hb = hessians[a], hessians[b]
            for i in range(n):
                for j in range(n):
                    res = zero
                    for s in range(n):
                        for p in range(n):
                            res = res + eta[s][p] * (
                                ha[i][s] * hb[p][j] - hb[i][s] * ha[p][j]
                            )
                    report.add("ass1", (a, b, i, j), res)

    g = canonical_bracket(d).metric
    for q_index, hess in enumerate(hessians):
        for i in range(n):
            for j in range(i + 1, n):
                res = zero
                for s in range(n):
                    for r in range(n):
                        res = res + (
                            g[i][s] * eta[j][r] - g[j][s] * eta[i][r]
                        ) * hess[r][s]
                report.add("ass2", (q_index, i, j), res)

    return report


def check_compatibility(
    eta: ConstantBracket, b: HydroBracket, require_poisson: bool = True
) -> ViolationReport:
    """Exact relations equivalent to compatibility with the constant bracket.

    Relation codes:

    * "1"  eta^{is} b^{jk}_s = eta^{js} b^{ik}_s
    * "2"  eta^{is} w^j_s = eta^{js} w^i_s          (each tail)
    * "3"  dw^i_j/du^k = dw^i_k/du^j                (each tail)
    * "4"  eta^{jr} b^{ik}_s w^s_r = eta^{ir} b^{jk}_s w^s_r
    * "5"  db^{jk}_r/du^s - db^{jk}_s/du^r
           = sum_a eff_a (w^j_s w^k_r - w^j_r w^k_s)

    plus the derived diagnostic "bw"  b^{rk}_s w^j_r = b^{jk}_r w^r_s, which
    cannot fire for a genuine bracket once "1".."3" are clean; it is included
    as an internal consistency cross-check.

    With ``require_poisson`` (the default), :func:`check_poisson` runs first
    and a dirty result raises :class:`NotPoisson`.
    """
    if eta.nvars != b.nvars:
        raise ValueError("dimension mismatch between eta and bracket")
    if require_poisson:
        pre = check_poisson(b)
        if not pre.ok:
            raise NotPoisson(pre)

    n = b.nvars
    e = eta.eta
    conn = b.conn
    report = ViolationReport()
    zero = Poly.zero(n)

    for i in range(n):
        for j in range(i + 1, n):
            for k in range(n):
                res = zero
                for s in range(n):
                    res = res + e[i][s] * conn[j][k][s] - e[j][s] * conn[i][k][s]
                report.add("1", (i, j, k), res)

    for a, tail in enumerate(b.tails):
        w = tail.affinor
        for i in range(n):
            for j in range(i + 1, n):
                res = zero
                for s in range(n):
                    res = res + e[i][s] * w[j][s] - e[j][s] * w[i][s]
                report.add("2", (a, i, j), res)

    for a, tail in enumerate(b.tails):
        w = tail.affinor
        for i in range(n):
            for j in range(n):
                for k in range(j + 1, n):
                    report.add(
                        "3", (a, i, j, k), w[i][j].partial(k) - w[i][k].partial(j)
                    )

    for a, tail in enumerate(b.tails):
        w = tail.affinor
        for i in range(n):
            for j in range(i + 1, n):
                for k in range(n):
                    res = zero
                    for s in range(n):
                        for r in range(n):
                            res = res + (
                                e[j][r] * conn[i][k][s] - e[i][r] * conn[j][k][s]
                            ) * w[s][r]
                    report.add("4", (a, i, j, k), res)

    for j in range(n):
        for k in range(n):
            for s in range(n):
                for r in range(s + 1, n):
                    res = conn[j][k][r].partial(s) - conn[j][k][s].partial(r)
                    for tail in b.tails:
                        w = tail.affinor
                        res = res - tail.effective * (
                            w[j][s] * w[k][r] - w[j][r] * w[k][s]
                        )
                    report.add("5", (j, k, s, r), res)

    for a, tail in enumerate(b.tails):
        w = tail.affinor
        for j in range(n):
            for k in range(n):
                for s in range(n):
                    res = zero
                    for r in range(n):
                        res = res + conn[r][k][s] * w[j][r] - conn[j][k][r] * w[r][s]
                    report.add("bw", (a, j, k, s), res)

    return report


def build_pencil(
    b1: HydroBracket, eta: ConstantBracket, weights: PencilWeights
) -> HydroBracket:
    """Coefficient-wise linear combination lambda1 * bracket + lambda2 * constant.

    Tails scale through their rational weight (with the sign absorbing a
    negative lambda1) so the combination never needs an irrational affinor.
    """
    if eta.nvars != b1.nvars:
        raise ValueError("dimension mismatch between eta and bracket")
    n = b1.nvars
    l1, l2 = weights.lambda1, weights.lambda2
    metric = [
        [l1 * b1.metric[i][j] + Poly.const(n, l2 * eta.eta[i][j]) for j in range(n)]
        for i in range(n)
    ]
    conn = [
        [[l1 * b1.conn[i][j][k] for k in range(n)] for j in range(n)]
        for i in range(n)
    ]
    if l1 == 0:
        tails: tuple[Tail, ...] = ()
    else:
        sign_flip = 1 if l1 > 0 else -1
        tails = tuple(
            Tail(t.sign * sign_flip, t.affinor, t.weight * abs(l1)) for t in b1.tails
        )
    return HydroBracket(n, metric, conn, tails)


# ---------------------------------------------------------------------------
# Reconstruction of the potentials from a compatible bracket.
# ---------------------------------------------------------------------------


def reconstruct_potentials(b: HydroBracket, eta: ConstantBracket) -> PotentialChain:
    """Invert :func:`canonical_bracket` by successive exact integrations.

    Preconditions (caller's responsibility): the bracket axioms and the
    compatibility relations hold.  A violated precondition surfaces as
    :class:`NotExact` at the corresponding integration step, or as
    :class:`NonConstantGauge` if the symmetric remainder fails to be
    constant.

    Gauge: every 1-form potential is normalized to vanish at the origin and
    the constant matrix is the even split c = S/2 of the symmetric remainder
    S = g - sum_a eff_a phi phi - P - P^T.  Under this gauge the recovered
    (F, psi) reproduce data whose tail potentials have no constant or linear
    part and whose eta^{-1}-raised potential Jacobian is symmetric at the
    origin; the bracket itself is always reproduced exactly.
    """
    if eta.nvars != b.nvars:
        raise ValueError("dimension mismatch between eta and bracket")
    n = b.nvars
    lower = eta.lower
    zero = Poly.zero(n)

    phi: list[list[Poly]] = []
    for tail in b.tails:
        phi.append(
            [one_form_potential([tail.affinor[i][j] for j in range(n)]) for i in range(n)]
        )

    psi: list[Poly] = []
    for prim in phi:
        forms = [
            sum((lower[r][s] * prim[s] for s in range(n)), zero) for r in range(n)
        ]
        psi.append(one_form_potential(forms))

    reduced = [
        [
            [
                b.conn[i][j][k]
                - sum(
                    (
                        tail.effective * phi[a][i] * tail.affinor[j][k]
                        for a, tail in enumerate(b.tails)
                    ),
                    zero,
                )
                for k in range(n)
            ]
            for j in range(n)
        ]
        for i in range(n)
    ]

    conn_potential = [
        [one_form_potential(reduced[i][j]) for j in range(n)] for i in range(n)
    ]

    gauge: list[list[Fraction]] = []
    for i in range(n):
        row = []
        for j in range(n):
            s = (
                b.metric[i][j]
                - sum(
                    (
                        tail.effective * phi[a][i] * phi[a][j]
                        for a, tail in enumerate(b.tails)
                    ),
                    zero,
                )
                - conn_potential[i][j]
                - conn_potential[j][i]
            )
            if not s.is_constant():
                raise NonConstantGauge(
                    f"symmetric remainder at ({i}, {j}) is not constant: {s}"
                )
            row.append(s.constant_term() / 2)
        gauge.append(row)

    split = [
        [conn_potential[i][j] + gauge[i][j] for j in range(n)] for i in range(n)
    ]

    potentials: list[Poly] = []
    for k in range(n):
        forms = []
        for l in range(n):
            form = sum((lower[l][j] * split[j][k] for j in range(n)), zero)
            for a, tail in enumerate(b.tails):
                psi_grad = gradient(psi[a])
                for p in range(n):
                    form = form + tail.effective * eta.eta[k][p] * (
                        psi_grad[l] * psi_grad[p]
                    )
            forms.append(form)
        potentials.append(one_form_potential(forms))

    return PotentialChain(
        tail_primitives=tuple(tuple(row) for row in phi),
        reduced_conn=tuple(tuple(tuple(col) for col in row) for row in reduced),
        conn_potential=tuple(tuple(row) for row in conn_potential),
        gauge_constant=tuple(tuple(row) for row in gauge),
        metric_split=tuple(tuple(row) for row in split),
        tail_potentials=tuple(psi),
        potentials=tuple(potentials),
    )


def check_special_liouville(b: HydroBracket, eta: ConstantBracket) -> LiouvilleResult:
    """Do the fields and their eta-square integrate to commuting functionals?

    Equivalently: is the bracket compatible with the constant bracket?  On
    success the density-flux data of the bracket in these coordinates is
    emitted: Phi^{ij} = eta^{is} dF^j/du^s and phi^a_i = eta^{is} dpsi^a/du^s.
    """
    pre = check_poisson(b)
    if not pre.ok:
        raise NotPoisson(pre)
    report = check_compatibility(eta, b, require_poisson=False)
    if not report.ok:
        return LiouvilleResult(ok=False, report=report)

    chain = reconstruct_potentials(b, eta)
    n = b.nvars
    zero = Poly.zero(n)
    grads = [gradient(f) for f in chain.potentials]
    liouville = tuple(
        tuple(
            sum((eta.eta[i][s] * grads[j][s] for s in range(n)), zero)
            for j in range(n)
        )
        for i in range(n)
    )
    primitives = tuple(
        tuple(
            sum((eta.eta[i][s] * g[s] for s in range(n)), zero)
            for i in range(n)
        )
        for g in (gradient(p) for p in chain.tail_potentials)
    )
    return LiouvilleResult(
        ok=True,
        report=report,
        liouville_matrix=liouville,
        tail_primitives=primitives,
    )
