"""Shared corpus: generating data known to produce genuine brackets, plus
single-term mutations known to break at least one relation.

Validity of every member and the firing of every mutation are themselves
asserted by the acceptance suite, so this module only has to be honest once.
"""

from dataclasses import dataclass
from fractions import Fraction

from hydrobrackets import CanonicalData, ConstantBracket, Poly

HALF = Fraction(1, 2)


@dataclass(frozen=True)
class Member:
    name: str
    data: CanonicalData


def _vars(n):
    return [Poly.variable(n, i) for i in range(n)]


def valid_members() -> list[Member]:
    u, = _vars(1)
    u1, u2 = _vars(2)
    v1, v2, v3 = _vars(3)
    e1 = ConstantBracket([[1]])
    e1b = ConstantBracket([[2]])
    e2 = ConstantBracket([[1, 0], [0, 1]])
    e2m = ConstantBracket([[1, 0], [0, -1]])
    e3 = ConstantBracket([[1, 0, 0], [0, 1, 0], [0, 0, 1]])
    e3m = ConstantBracket([[1, 0, 0], [0, 1, 0], [0, 0, -1]])

    return [
        Member("n1-quadratic", CanonicalData(e1, [HALF * u * u])),
        Member("n1-cubic-eta2", CanonicalData(e1b, [Fraction(1, 3) * u**3])),
        Member(
            "n1-tail-only",
            CanonicalData(e1, [Poly.zero(1)], [HALF * u * u], [1]),
        ),
        Member(
            "n1-mixed",
            CanonicalData(e1, [HALF * u * u], [Fraction(1, 6) * u**3], [-1]),
        ),
        Member(
            "n1-two-tails",
            CanonicalData(
                e1,
                [Fraction(1, 6) * u**3],
                [HALF * u * u, Fraction(1, 6) * u**3],
                [1, -1],
            ),
        ),
        Member(
            "n2-pair",
            CanonicalData(e2, [HALF * (u1 * u1 + u2 * u2), u1 * u2]),
        ),
        Member(
            "n2-cubic-algebra",
            CanonicalData(
                e2,
                [
                    Fraction(1, 3) * u1**3 + u1 * u2 * u2,
                    u1 * u1 * u2 + Fraction(1, 3) * u2**3,
                ],
            ),
        ),
        Member("n2-translation", CanonicalData(e2, [HALF * u1, HALF * u2])),
        Member(
            "n2-disc",
            CanonicalData(
                e2, [HALF * u1, HALF * u2], [HALF * (u1 * u1 + u2 * u2)], [1]
            ),
        ),
        Member(
            "n2-minkowski-tail",
            CanonicalData(
                e2m, [HALF * u1, HALF * u2], [HALF * (u1 * u1 - u2 * u2)], [1]
            ),
        ),
        Member(
            "n2-two-tails",
            CanonicalData(
                e2,
                [HALF * (u1 * u1 + u2 * u2), u1 * u2],
                [Fraction(1, 6) * (u1 + u2) ** 3, HALF * (u1 + u2) ** 2],
                [1, -1],
            ),
        ),
        Member(
            "n3-block",
            CanonicalData(
                e3, [HALF * (v1 * v1 + v2 * v2), v1 * v2, HALF * v3 * v3]
            ),
        ),
        Member(
            "n3-disc-neg",
            CanonicalData(
                e3,
                [HALF * v1, HALF * v2, HALF * v3],
                [HALF * (v1 * v1 + v2 * v2 + v3 * v3)],
                [-1],
            ),
        ),
        Member(
            "n3-two-tails-mixed",
            CanonicalData(
                e3m,
                [HALF * v1, HALF * v2, HALF * v3],
                [
                    HALF * (v1 * v1 + v2 * v2 - v3 * v3),
                    v1 * v1 + v2 * v2 - v3 * v3,
                ],
                [1, 1],
            ),
        ),
    ]


def _perturb(d: CanonicalData, which: str, idx: int, term: Poly) -> CanonicalData:
    potentials = list(d.potentials)
    tails = list(d.tail_potentials)
    if which == "F":
        potentials[idx] = potentials[idx] + term
    else:
        tails[idx] = tails[idx] + term
    return CanonicalData(d.eta, potentials, tails, d.signs)


def firing_mutations() -> list[Member]:
    """Single-term perturbations of valid members that break integrability."""
    by_name = {m.name: m.data for m in valid_members()}
    u1, u2 = _vars(2)
    v1, v2, v3 = _vars(3)
    pair = by_name["n2-pair"]
    disc = by_name["n2-disc"]
    mink = by_name["n2-minkowski-tail"]
    two = by_name["n2-two-tails"]
    block = by_name["n3-block"]
    disc3 = by_name["n3-disc-neg"]
    return [
        Member("pair+F2:u1^2", _perturb(pair, "F", 1, u1 * u1)),
        Member("pair+F1:u1^2*u2", _perturb(pair, "F", 0, u1 * u1 * u2)),
        Member("pair+F1:u1^3", _perturb(pair, "F", 0, u1**3)),
        Member("disc+psi:u1^3", _perturb(disc, "psi", 0, u1**3)),
        Member("disc+F1:u2^2", _perturb(disc, "F", 0, u2 * u2)),
        Member("disc+psi:u1^2", _perturb(disc, "psi", 0, u1 * u1)),
        Member("mink+psi:u1^2", _perturb(mink, "psi", 0, u1 * u1)),
        Member("mink+F2:u1^2", _perturb(mink, "F", 1, u1 * u1)),
        Member("two+psi2:u1^2", _perturb(two, "psi", 1, u1 * u1)),
        Member("two+F1:u1^3", _perturb(two, "F", 0, u1**3)),
        Member("block+F1:u1*u3", _perturb(block, "F", 0, v1 * v3)),
        Member("block+F3:u1^2", _perturb(block, "F", 2, v1 * v1)),
        Member("disc3+psi:u1^2*u2", _perturb(disc3, "psi", 0, v1 * v1 * v2)),
        Member("disc3+F1:u2^2", _perturb(disc3, "F", 0, v2 * v2)),
    ]


def benign_mutations() -> list[Member]:
    """Perturbations that happen to stay integrable; the equivalence must
    still hold for them (both checks come back clean)."""
    by_name = {m.name: m.data for m in valid_members()}
    u1, u2 = _vars(2)
    return [
        Member(
            "disc+psi:u1*u2", _perturb(by_name["n2-disc"], "psi", 0, u1 * u2)
        ),
    ]
