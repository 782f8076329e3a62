"""First-order bracket data model and its verification suites.

A bracket is stored through its coefficient fields: a contravariant metric
g^{ij}(u), a connection-type field b^{ij}_k(u), and a list of nonlocal tails,
each a signed affinor w^i_j(u).  Two independent suites run against it:

* the algebraic suite (:func:`check_poisson`) checks the closed system of
  polynomial identities, labelled "01".."07", that characterize the bracket
  axioms (skew-symmetry plus Jacobi) for this class of operators;
* the geometric suite (:func:`check_ferapontov_conditions`,
  :func:`classify_geometry`) checks the equivalent differential-geometric
  statements - Levi-Civita compatibility, symmetric covariant derivative of
  each affinor ("peter2"), and the curvature factorization through the tails
  ("gauss") - pointwise with exact rational jets at sample points, since the
  covariant metric is generally not polynomial.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from .exactalg import (
    FractionMatrix,
    Jet,
    Poly,
    Scalar,
    eval_jet,
    matrix_determinant_exact,
    matrix_inverse_jet,
)

PolyMatrix = list[list[Poly]]


class NonSquareCurvature(Exception):
    """|K| is not the square of a rational, so no rational tail exists."""

    code = "non-square-curvature"


@dataclass(frozen=True)
class Tail:
    """One nonlocal term: sign in {+1,-1}, a rational weight, an affinor.

    The weight is 1 for every bracket arising directly from the operator
    form; bracket pencils scale tails by the pencil coefficient, which must
    stay rational, so the scale lives here rather than inside the affinor.
    The quadratic tail contribution everywhere is sign * weight * w (x) w.
    """

    sign: int
    affinor: tuple[tuple[Poly, ...], ...]
    weight: Fraction = Fraction(1)

    def __post_init__(self):
        if self.sign not in (1, -1):
            raise ValueError("tail sign must be +1 or -1")
        if self.weight <= 0:
            raise ValueError("tail weight must be a positive rational")
        object.__setattr__(
            self, "affinor", tuple(tuple(row) for row in self.affinor)
        )

    @property
    def effective(self) -> Fraction:
        return self.sign * self.weight


@dataclass(frozen=True)
class HydroBracket:
    """Coefficient data (g^{ij}, b^{ij}_k, tails) of a first-order bracket.

    Index layout: metric[i][j] = g^{ij}, conn[i][j][k] = b^{ij}_k,
    tail.affinor[i][j] = w^i_j.  Degenerate metrics may be stored; geometry
    checks reject them pointwise.
    """

    nvars: int
    metric: tuple[tuple[Poly, ...], ...]
    conn: tuple[tuple[tuple[Poly, ...], ...], ...]
    tails: tuple[Tail, ...] = ()

    def __post_init__(self):
        n = self.nvars
        metric = tuple(tuple(row) for row in self.metric)
        conn = tuple(tuple(tuple(col) for col in row) for row in self.conn)
        tails = tuple(self.tails)
        if len(metric) != n or any(len(row) != n for row in metric):
            raise ValueError("metric must be an N x N matrix of Poly")
        if (
            len(conn) != n
            or any(len(row) != n for row in conn)
            or any(len(col) != n for row in conn for col in row)
        ):
            raise ValueError("connection field must be an N x N x N array of Poly")
        for p in self._all_polys(metric, conn, tails):
            if p.nvars != n:
                raise ValueError("coefficient polynomial over wrong variable count")
        object.__setattr__(self, "metric", metric)
        object.__setattr__(self, "conn", conn)
        object.__setattr__(self, "tails", tails)

    @staticmethod
    def _all_polys(metric, conn, tails):
        for row in metric:
            yield from row
        for row in conn:
            for col in row:
                yield from col
        for tail in tails:
            for row in tail.affinor:
                yield from row

    @property
    def ntails(self) -> int:
        return len(self.tails)


@dataclass(frozen=True)
class Violation:
    """One failed relation: its id, the index tuple, and the exact residual."""

    relation: str
    index: tuple[int, ...]
    residual: Poly | Fraction

    def render(self) -> str:
        return f"({self.relation}) at {self.index}: residual {self.residual}"


@dataclass
class ViolationReport:
    entries: list[Violation] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.entries

    def add(self, relation: str, index: Sequence[int], residual) -> None:
        if residual:
            self.entries.append(Violation(relation, tuple(index), residual))

    def extend(self, other: "ViolationReport") -> None:
        self.entries.extend(other.entries)

    def relations(self) -> set[str]:
        return {v.relation for v in self.entries}

    def __len__(self):
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def render(self) -> str:
        if self.ok:
            return "all relations hold exactly"
        return "\n".join(v.render() for v in self.entries)


# ---------------------------------------------------------------------------
# Algebraic suite: exact polynomial identities "01".."07".
# ---------------------------------------------------------------------------


def check_poisson(b: HydroBracket) -> ViolationReport:
    """Verify the bracket axioms as exact polynomial identities.

    Relation codes (all implicit sums over repeated indices):

    * 01  g^{ij} = g^{ji}
    * 02  dg^{ij}/du^k = b^{ij}_k + b^{ji}_k
    * 03  g^{is} b^{jk}_s = g^{js} b^{ik}_s
    * 04  g^{is} w^j_s = g^{js} w^i_s                    (each tail)
    * 05  affinors commute pairwise
    * 06  g^{is} g^{jr} dw^k_r/du^s - g^{jr} b^{ik}_s w^s_r  is (i,j)-symmetric
    * 07  g^{is}(db^{jk}_r/du^s - db^{jk}_s/du^r) + b^{ik}_s b^{sj}_r
          - b^{ij}_s b^{sk}_r = sum_a eff_a g^{is}(w^j_s w^k_r - w^j_r w^k_s)

    The report is empty iff every relation holds identically; each entry
    carries the residual polynomial.
    """
    n = b.nvars
    g, conn = b.metric, b.conn
    report = ViolationReport()

    for i in range(n):
        for j in range(i + 1, n):
            report.add("01", (i, j), g[i][j] - g[j][i])

    for i in range(n):
        for j in range(i, n):
            for k in range(n):
                report.add(
                    "02", (i, j, k), g[i][j].partial(k) - conn[i][j][k] - conn[j][i][k]
                )

    zero = Poly.zero(n)
    for i in range(n):
        for j in range(i + 1, n):
            for k in range(n):
                res = zero
                for s in range(n):
                    res = res + g[i][s] * conn[j][k][s] - g[j][s] * conn[i][k][s]
                report.add("03", (i, j, k), res)

    for a, tail in enumerate(b.tails):
        w = tail.affinor
        for i in range(n):
            for j in range(i + 1, n):
                res = zero
                for s in range(n):
                    res = res + g[i][s] * w[j][s] - g[j][s] * w[i][s]
                report.add("04", (a, i, j), res)

    for a in range(b.ntails):
        for c in range(a + 1, b.ntails):
            wa, wc = b.tails[a].affinor, b.tails[c].affinor
            for i in range(n):
                for j in range(n):
                    res = zero
                    for s in range(n):
                        res = res + wa[i][s] * wc[s][j] - wc[i][s] * wa[s][j]
                    report.add("05", (a, c, i, j), res)

    for a, tail in enumerate(b.tails):
        w = tail.affinor
        for i in range(n):
            for j in range(i + 1, n):
                for k in range(n):
                    res = zero
                    for s in range(n):
                        for r in range(n):
                            res = res + (
                                g[i][s] * g[j][r] * w[k][r].partial(s)
                                - g[j][s] * g[i][r] * w[k][r].partial(s)
                            )
                        for r in range(n):
                            res = res - (
                                g[j][r] * conn[i][k][s] * w[s][r]
                                - g[i][r] * conn[j][k][s] * w[s][r]
                            )
                    report.add("06", (a, i, j, k), res)

    for i in range(n):
        for j in range(n):
            for k in range(n):
                for r in range(n):
                    res = zero
                    for s in range(n):
                        res = res + g[i][s] * (
                            conn[j][k][r].partial(s) - conn[j][k][s].partial(r)
                        )
                        res = res + conn[i][k][s] * conn[s][j][r]
                        res = res - conn[i][j][s] * conn[s][k][r]
                    for tail in b.tails:
                        w = tail.affinor
                        for s in range(n):
                            res = res - tail.effective * g[i][s] * (
                                w[j][s] * w[k][r] - w[j][r] * w[k][s]
                            )
                    report.add("07", (i, j, k, r), res)

    return report


# ---------------------------------------------------------------------------
# Geometric suite: Christoffel symbols, curvature, classification.
# ---------------------------------------------------------------------------


@dataclass
class GeometryReport:
    """Pointwise geometry of the bracket metric at a rational sample point.

    ``christoffel[j][s][k]`` holds Gamma^j_{sk} as an order-1 jet,
    ``curvature[i][j][k][l]`` the exact rational R^{ij}_{kl}, and
    ``levi_civita_residual[i][j][k]`` = b^{ij}_k + g^{is} Gamma^j_{sk}
    evaluated at the point (zero iff the connection is the Levi-Civita one).
    """

    point: tuple[Fraction, ...]
    christoffel: list[list[list[Jet]]]
    curvature: list[list[list[list[Fraction]]]]
    classification: str
    curvature_constant: Fraction | None
    levi_civita_residual: list[list[list[Fraction]]]


def _geometry_at_point(b: HydroBracket, point: Sequence[Scalar]):
    """Jets of g^{ij}, g_{ij}, Gamma and the rational curvature at a point.

    Curvature convention (fixed by requiring the tail factorization "gauss"
    to hold with sign +1 for the model metric g^{ij} = d^{ij} - u^i u^j with
    identity affinor):

        Gamma^j_{sk} = (1/2) g^{jr} (d_s g_{rk} + d_k g_{rs} - d_r g_{sk})
        R^j_{skl}    = d_k Gamma^j_{ls} - d_l Gamma^j_{ks}
                       + Gamma^j_{kp} Gamma^p_{ls} - Gamma^j_{lp} Gamma^p_{ks}
        R^{ij}_{kl}  = g^{is} R^j_{skl}
    """
    n = b.nvars
    g_up = [[eval_jet(b.metric[i][j], point, 2) for j in range(n)] for i in range(n)]
    g_low = matrix_inverse_jet(g_up)

    half = Fraction(1, 2)
    gamma: list[list[list[Jet]]] = [
        [[None] * n for _ in range(n)] for _ in range(n)
    ]
    for j in range(n):
        for s in range(n):
            for k in range(n):
                acc = None
                for r in range(n):
                    term = g_up[j][r] * (
                        g_low[r][k].partial(s)
                        + g_low[r][s].partial(k)
                        - g_low[s][k].partial(r)
                    )
                    acc = term if acc is None else acc + term
                gamma[j][s][k] = half * acc

    riemann_13 = [
        [
            [
                [
                    gamma[j][l][s].get(k) - gamma[j][k][s].get(l)
                    + sum(
                        (
                            gamma[j][k][p].value * gamma[p][l][s].value
                            - gamma[j][l][p].value * gamma[p][k][s].value
                            for p in range(n)
                        ),
                        Fraction(0),
                    )
                    for l in range(n)
                ]
                for k in range(n)
            ]
            for s in range(n)
        ]
        for j in range(n)
    ]
    curvature = [
        [
            [
                [
                    sum(
                        (g_up[i][s].value * riemann_13[j][s][k][l] for s in range(n)),
                        Fraction(0),
                    )
                    for l in range(n)
                ]
                for k in range(n)
            ]
            for j in range(n)
        ]
        for i in range(n)
    ]
    return g_up, g_low, gamma, curvature


def classify_geometry(b: HydroBracket, point: Sequence[Scalar]) -> GeometryReport:
    """Compute Gamma and R^{ij}_{kl} at the point and classify the metric.

    Classification: "flat" when every curvature component vanishes;
    "constant-curvature" when R^{ij}_{kl} = K (d^i_l d^j_k - d^j_l d^i_k)
    for a single rational K (the pattern a one-tail bracket with affinor
    proportional to the identity produces); "general" otherwise.
    """
    n = b.nvars
    point = tuple(Fraction(v) for v in point)
    g_up, _g_low, gamma, curvature = _geometry_at_point(b, point)

    residual = [
        [
            [
                b.conn[i][j][k].eval(point)
                + sum(
                    (g_up[i][s].value * gamma[j][s][k].value for s in range(n)),
                    Fraction(0),
                )
                for k in range(n)
            ]
            for j in range(n)
        ]
        for i in range(n)
    ]

    def pattern(i, j, k, l):
        return Fraction(int(i == l and j == k) - int(j == l and i == k))

    constant: Fraction | None = None
    is_flat = True
    is_constant = True
    for i in range(n):
        for j in range(n):
            for k in range(n):
                for l in range(n):
                    r = curvature[i][j][k][l]
                    if r:
                        is_flat = False
                    p = pattern(i, j, k, l)
                    if p:
                        if constant is None:
                            constant = r / p
                        elif r != constant * p:
                            is_constant = False
                    elif r:
                        is_constant = False

    if is_flat:
        classification, k_value = "flat", None
    elif is_constant and constant is not None:
        classification, k_value = "constant-curvature", constant
    else:
        classification, k_value = "general", None

    return GeometryReport(
        point=point,
        christoffel=gamma,
        curvature=curvature,
        classification=classification,
        curvature_constant=k_value,
        levi_civita_residual=residual,
    )


def check_ferapontov_conditions(
    b: HydroBracket, point: Sequence[Scalar]
) -> ViolationReport:
    """Geometric characterization of the bracket axioms.

    * "peter1": metric-symmetry of each affinor, checked symbolically in the
      equivalent contravariant form g^{is} w^j_s = g^{js} w^i_s;
    * "05": pairwise commutativity of the affinors, symbolic;
    * "peter2": nabla_k w^i_j = nabla_j w^i_k, exact jets at the point;
    * "gauss": R^{ij}_{kl} = sum_a eff_a (w^i_l w^j_k - w^j_l w^i_k) at the
      point, with R in the convention documented on the geometry helpers.
    """
    n = b.nvars
    point = tuple(Fraction(v) for v in point)
    g = b.metric
    report = ViolationReport()
    zero = Poly.zero(n)

    for a, tail in enumerate(b.tails):
        w = tail.affinor
        for i in range(n):
            for j in range(i + 1, n):
                res = zero
                for s in range(n):
                    res = res + g[i][s] * w[j][s] - g[j][s] * w[i][s]
                report.add("peter1", (a, i, j), res)

    for a in range(b.ntails):
        for c in range(a + 1, b.ntails):
            wa, wc = b.tails[a].affinor, b.tails[c].affinor
            for i in range(n):
                for j in range(n):
                    res = zero
                    for s in range(n):
                        res = res + wa[i][s] * wc[s][j] - wc[i][s] * wa[s][j]
                    report.add("05", (a, c, i, j), res)

    _g_up, _g_low, gamma, curvature = _geometry_at_point(b, point)

    for a, tail in enumerate(b.tails):
        w_val = [[w.eval(point) for w in row] for row in tail.affinor]
        w_jet = [[eval_jet(w, point, 1) for w in row] for row in tail.affinor]

        def nabla(k, i, j):
            total = w_jet[i][j].get(k)
            for s in range(n):
                total += gamma[i][k][s].value * w_val[s][j]
                total -= gamma[s][k][j].value * w_val[i][s]
            return total

        for i in range(n):
            for k in range(n):
                for j in range(k + 1, n):
                    report.add("peter2", (a, i, j, k), nabla(k, i, j) - nabla(j, i, k))

    for i in range(n):
        for j in range(n):
            for k in range(n):
                for l in range(n):
                    res = curvature[i][j][k][l]
                    for tail in b.tails:
                        w_val = [[w.eval(point) for w in row] for row in tail.affinor]
                        res -= tail.effective * (
                            w_val[i][l] * w_val[j][k] - w_val[j][l] * w_val[i][k]
                        )
                    report.add("gauss", (i, j, k, l), res)

    return report


def mf_bracket(
    metric: Sequence[Sequence[Poly]],
    conn: Sequence[Sequence[Sequence[Poly]]],
    curvature: Scalar,
) -> HydroBracket:
    """Wrap constant-curvature data as a one-tail bracket.

    The single nonlocal term K u^i_x (d/dx)^{-1} u^j_x factorizes through the
    affinor c * Id with sign(K) and c^2 = |K|; K whose magnitude is not a
    rational square is rejected (the factorization would leave the rational
    category).
    """
    k = Fraction(curvature)
    n = len(metric)
    if k == 0:
        return HydroBracket(n, metric, conn, ())
    mag = abs(k)
    num, den = mag.numerator, mag.denominator
    sq_num = _exact_isqrt(num)
    sq_den = _exact_isqrt(den)
    if sq_num is None or sq_den is None:
        raise NonSquareCurvature(
            f"|K| = {mag} is not the square of a rational; no rational affinor exists"
        )
    c = Fraction(sq_num, sq_den)
    affinor = [
        [Poly.const(n, c if i == j else 0) for j in range(n)] for i in range(n)
    ]
    sign = 1 if k > 0 else -1
    return HydroBracket(n, metric, conn, (Tail(sign, affinor),))


def _exact_isqrt(m: int) -> int | None:
    r = int(m**0.5)
    for candidate in (r - 1, r, r + 1):
        if candidate >= 0 and candidate * candidate == m:
            return candidate
    return None


def sample_points(
    b: HydroBracket, seed: int, count: int, max_tries: int = 1000
) -> list[tuple[Fraction, ...]]:
    """Deterministic stream of small rational points with nondegenerate metric.

    Points are drawn from a seeded RNG with coordinates p/q, |p| <= 3,
    1 <= q <= 4; points where det g^{ij}(u) = 0 are skipped.
    """
    rng = random.Random(seed)
    points: list[tuple[Fraction, ...]] = []
    for _ in range(max_tries):
        if len(points) == count:
            break
        pt = tuple(
            Fraction(rng.randint(-3, 3), rng.randint(1, 4)) for _ in range(b.nvars)
        )
        value = [[b.metric[i][j].eval(pt) for j in range(b.nvars)] for i in range(b.nvars)]
        if matrix_determinant_exact(value) == 0:
            continue
        points.append(pt)
    if len(points) < count:
        raise SingularMetric(
            f"could not find {count} nondegenerate sample points in {max_tries} tries"
        )
    return points
