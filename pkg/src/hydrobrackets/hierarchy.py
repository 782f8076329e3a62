"""First flow of the recursion hierarchy and its two Hamiltonian faces.

Applying the recursion operator (nonlocal operator composed with the inverse
of the constant one) to the translation system u_t = u_x gives a closed-form
quasilinear system

    u^i_t = (V^i(u))_x,
    V^i = F^i + eta^{is} eta_{jr} dF^j/du^s u^r
          - eta^{is} sum_a e_a dpsi^a/du^s psi^a,

generated by either Hamiltonian structure: through the constant bracket by
H2 = int (eta_{jk} F^k u^j - 1/2 sum_a e_a (psi^a)^2) dx, and through the
nonlocal bracket by the momentum H1 = 1/2 int eta_{jl} u^j u^l dx.

The nonlocal term applied to gradients of u-only densities resolves through
the total-derivative identity

    psi_{,ls} u^s_x u^l = d/dx (psi_{,l} u^l - psi)

with the integration constant set to zero ("zero-constant gauge"); all
symbolic identities below are checked in that gauge, coefficient-wise in u_x.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .bracketcore import ViolationReport
from .compat import CanonicalData, canonical_bracket, check_integrability
from .exactalg import Poly, gradient


class NotIntegrable(Exception):
    """The potential data does not generate a Poisson bracket."""

    code = "not-integrable"

    def __init__(self, report: ViolationReport):
        self.report = report
        super().__init__(
            f"potential data fails {len(report)} integrability relation(s)"
        )


@dataclass(frozen=True)
class HamiltonianDensity:
    """A u-only density h(u); its variational derivative is the plain gradient."""

    density: Poly


@dataclass(frozen=True)
class FlowSystem:
    """The first hierarchy flow u^i_t = (V^i)_x in both of its guises.

    ``flux`` holds V^i; ``char_matrix[i][j]`` = dV^i/du^j is the quasilinear
    form u^i_t = V^i_j u^j_x; the densities generate the flow through the
    constant bracket (h2) and the nonlocal bracket (h1, the momentum).
    """

    flux: tuple[Poly, ...]
    char_matrix: tuple[tuple[Poly, ...], ...]
    h1_density: HamiltonianDensity
    h2_density: HamiltonianDensity


def variational_derivative(h: HamiltonianDensity) -> list[Poly]:
    """delta/delta u^i of int h(u) dx for a u-only density: the gradient."""
    return gradient(h.density)


def flow1(d: CanonicalData) -> FlowSystem:
    """Closed form of the first recursion flow; requires valid data."""
    pre = check_integrability(d)
    if not pre.ok:
        raise NotIntegrable(pre)
    return _flow1_unchecked(d)


def _flow1_unchecked(d: CanonicalData) -> FlowSystem:
    n = d.nvars
    eta, lower = d.eta.eta, d.eta.lower
    zero = Poly.zero(n)

    flux = []
    for i in range(n):
        v = d.potentials[i]
        for s in range(n):
            for j in range(n):
                for r in range(n):
                    v = v + eta[i][s] * lower[j][r] * (
                        d.potentials[j].partial(s) * Poly.variable(n, r)
                    )
        for a, sign in enumerate(d.signs):
            psi = d.tail_potentials[a]
            for s in range(n):
                v = v - sign * eta[i][s] * (psi.partial(s) * psi)
        flux.append(v)

    char = tuple(tuple(v.partial(j) for j in range(n)) for v in flux)

    h1 = zero
    for j in range(n):
        for l in range(n):
            h1 = h1 + Poly.monomial(
                n,
                tuple(
                    (1 if m == j else 0) + (1 if m == l else 0) for m in range(n)
                ),
                lower[j][l] / 2,
            )

    h2 = zero
    for j in range(n):
        for k in range(n):
            h2 = h2 + lower[j][k] * (d.potentials[k] * Poly.variable(n, j))
    for a, sign in enumerate(d.signs):
        psi = d.tail_potentials[a]
        h2 = h2 - sign * Fraction(1, 2) * (psi * psi)

    return FlowSystem(
        flux=tuple(flux),
        char_matrix=char,
        h1_density=HamiltonianDensity(h1),
        h2_density=HamiltonianDensity(h2),
    )


def verify_bihamiltonian(d: CanonicalData, f: FlowSystem) -> ViolationReport:
    """Check both Hamiltonian representations of the flow, exactly.

    * "h2-flux": eta^{ij} dh2/du^j = V^i (the constant structure applied to
      the gradient of h2 reproduces the flux).
    * "h1-flux": the full nonlocal operator applied to dH1/du^j = eta_{jl}u^l
      reproduces (V^i)_x.  The result is linear in u_x, so the identity is
      checked coefficient-wise: for every (i, k) the coefficient of u^k_x,

          g^{is} eta_{sk} + b^{ij}_k eta_{jl} u^l
          + sum_a e_a w^i_k (psi_{,l} u^l - psi)  -  dV^i/du^k,

      must vanish; the nonlocal tail is resolved in the zero-constant gauge.
    """
    n = d.nvars
    eta, lower = d.eta.eta, d.eta.lower
    report = ViolationReport()
    zero = Poly.zero(n)

    grad_h2 = gradient(f.h2_density.density)
    for i in range(n):
        res = -f.flux[i]
        for j in range(n):
            res = res + eta[i][j] * grad_h2[j]
        report.add("h2-flux", (i,), res)

    b = canonical_bracket(d)
    for i in range(n):
        for k in range(n):
            res = -f.flux[i].partial(k)
            for s in range(n):
                res = res + b.metric[i][s] * lower[s][k]
            for j in range(n):
                for l in range(n):
                    res = res + b.conn[i][j][k] * lower[j][l] * Poly.variable(n, l)
            for a, tail in enumerate(b.tails):
                psi = d.tail_potentials[a]
                primitive = -psi
                for l in range(n):
                    primitive = primitive + psi.partial(l) * Poly.variable(n, l)
                res = res + tail.effective * (tail.affinor[i][k] * primitive)
            report.add("h1-flux", (i, k), res)

    return report


def casimir_momentum_involution(d: CanonicalData) -> ViolationReport:
    """Field integrals and the momentum commute under the nonlocal bracket.

    For each pair of functionals the bracket integrand is linear in u_x,
    T_k(u) u^k_x; it integrates to zero over a period iff the 1-form T is
    closed.  Violations report the non-exactness residual dT_k/du^l -
    dT_l/du^k per functional pair:

    * "casimir-casimir": pairs (U^i, U^j) of field integrals, where
      T_k = b^{ij}_k + sum_a e_a w^i_k Phi^j_a with Phi^j_a = eta^{jp}
      psi^a_{,p} the primitive of the tail integrand;
    * "casimir-momentum": pairs (U^i, H1), where T_k is the operator image
      coefficient from :func:`verify_bihamiltonian`.
    """
    pre = check_integrability(d)
    if not pre.ok:
        raise NotIntegrable(pre)

    n = d.nvars
    eta, lower = d.eta.eta, d.eta.lower
    b = canonical_bracket(d)
    report = ViolationReport()
    zero = Poly.zero(n)

    primitives = []
    for psi in d.tail_potentials:
        grad = gradient(psi)
        primitives.append(
            [sum((eta[j][p] * grad[p] for p in range(n)), zero) for j in range(n)]
        )

    for i in range(n):
        for j in range(n):
            t = [
                b.conn[i][j][k]
                + sum(
                    (
                        tail.effective * tail.affinor[i][k] * primitives[a][j]
                        for a, tail in enumerate(b.tails)
                    ),
                    zero,
                )
                for k in range(n)
            ]
            for k in range(n):
                for l in range(k + 1, n):
                    report.add(
                        "casimir-casimir",
                        (i, j, k, l),
                        t[k].partial(l) - t[l].partial(k),
                    )

    for i in range(n):
        t = []
        for k in range(n):
            tk = zero
            for s in range(n):
                tk = tk + b.metric[i][s] * lower[s][k]
            for j in range(n):
                for l in range(n):
                    tk = tk + b.conn[i][j][k] * lower[j][l] * Poly.variable(n, l)
            for a, tail in enumerate(b.tails):
                psi = d.tail_potentials[a]
                primitive = -psi
                for l in range(n):
                    primitive = primitive + psi.partial(l) * Poly.variable(n, l)
                tk = tk + tail.effective * (tail.affinor[i][k] * primitive)
            t.append(tk)
        for k in range(n):
            for l in range(k + 1, n):
                report.add(
                    "casimir-momentum",
                    (i, k, l),
                    t[k].partial(l) - t[l].partial(k),
                )

    return report
