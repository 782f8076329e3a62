"""Exact sparse polynomial arithmetic over the rationals, plus truncated
derivative towers (jets) at rational base points.

A polynomial in the field variables u1..uN is a map from exponent tuples to
``Fraction`` coefficients; the zero polynomial is the empty map.  Every
identity checked elsewhere in the package reduces to "this polynomial is
exactly zero", so no floating point is allowed anywhere in this module.

Jets carry the derivative values (not Taylor coefficients) of a scalar at a
base point up to order 3, which is enough for Christoffel symbols and the
curvature tensor of a metric given by polynomial contravariant components.
"""

from __future__ import annotations

from fractions import Fraction
from itertools import combinations_with_replacement
from typing import Iterable, Mapping, Sequence

Exponents = tuple[int, ...]
Scalar = int | Fraction


class NotExact(Exception):
    """A 1-form that was required to be closed is not.

    Carries the violating index pair and the residual polynomial
    d(form_i)/du_j - d(form_j)/du_i.
    """

    code = "not-exact"

    def __init__(self, i: int, j: int, residual: "Poly"):
        self.pair = (i, j)
        self.residual = residual
        super().__init__(
            f"1-form is not closed: d/du{j + 1} of component {i + 1} differs "
            f"from d/du{i + 1} of component {j + 1} by {residual}"
        )


class SingularMetric(Exception):
    """Matrix value part is singular at the sample point."""

    code = "singular-metric"


def _as_fraction(value: Scalar) -> Fraction:
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    raise TypeError(f"expected an exact rational, got {type(value).__name__}")


class Poly:
    """Exact multivariate polynomial over the rationals.

    Immutable; term map never stores zero coefficients, so ``==`` is exact
    polynomial identity.
    """

    __slots__ = ("nvars", "terms")

    def __init__(self, nvars: int, terms: Mapping[Exponents, Scalar] | None = None):
        if nvars < 1:
            raise ValueError("nvars must be positive")
        clean: dict[Exponents, Fraction] = {}
        for exps, coeff in (terms or {}).items():
            exps = tuple(exps)
            if len(exps) != nvars or any(e < 0 for e in exps):
                raise ValueError(f"bad exponent vector {exps} for nvars={nvars}")
            c = _as_fraction(coeff)
            if c:
                clean[exps] = c
        object.__setattr__(self, "nvars", nvars)
        object.__setattr__(self, "terms", clean)

    def __setattr__(self, name, value):
        raise AttributeError("Poly is immutable")

    # -- constructors -----------------------------------------------------

    @classmethod
    def zero(cls, nvars: int) -> "Poly":
        return cls(nvars)

    @classmethod
    def const(cls, nvars: int, value: Scalar) -> "Poly":
        return cls(nvars, {(0,) * nvars: value})

    @classmethod
    def variable(cls, nvars: int, index: int) -> "Poly":
        """The polynomial u_{index+1} (indices are 0-based)."""
        if not 0 <= index < nvars:
            raise IndexError(f"variable index {index} out of range for nvars={nvars}")
        exps = [0] * nvars
        exps[index] = 1
        return cls(nvars, {tuple(exps): 1})

    @classmethod
    def monomial(cls, nvars: int, exps: Sequence[int], coeff: Scalar = 1) -> "Poly":
        return cls(nvars, {tuple(exps): coeff})

    # -- ring structure ----------------------------------------------------

    def _check_same_vars(self, other: "Poly") -> None:
        if self.nvars != other.nvars:
            raise ValueError(
                f"dimension mismatch: {self.nvars} vs {other.nvars} variables"
            )

    def __add__(self, other):
        if isinstance(other, (int, Fraction)):
            other = Poly.const(self.nvars, other)
        if not isinstance(other, Poly):
            return NotImplemented
        self._check_same_vars(other)
        out = dict(self.terms)
        for exps, coeff in other.terms.items():
            out[exps] = out.get(exps, Fraction(0)) + coeff
        return Poly(self.nvars, out)

    __radd__ = __add__

    def __neg__(self):
        return Poly(self.nvars, {e: -c for e, c in self.terms.items()})

    def __sub__(self, other):
        if isinstance(other, (int, Fraction)):
            other = Poly.const(self.nvars, other)
        if not isinstance(other, Poly):
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            c = _as_fraction(other)
            if not c:
                return Poly.zero(self.nvars)
            return Poly(self.nvars, {e: k * c for e, k in self.terms.items()})
        if not isinstance(other, Poly):
            return NotImplemented
        self._check_same_vars(other)
        if not self.terms or not other.terms:
            return Poly.zero(self.nvars)
        out: dict[Exponents, Fraction] = {}
        for ea, ca in self.terms.items():
            for eb, cb in other.terms.items():
                e = tuple(x + y for x, y in zip(ea, eb))
                out[e] = out.get(e, Fraction(0)) + ca * cb
        return Poly(self.nvars, out)

    __rmul__ = __mul__

    def __pow__(self, n: int):
        if not isinstance(n, int) or n < 0:
            raise ValueError("polynomial powers must be non-negative integers")
        out = Poly.const(self.nvars, 1)
        for _ in range(n):
            out = out * self
        return out

    def __eq__(self, other):
        if isinstance(other, (int, Fraction)):
            other = Poly.const(self.nvars, other)
        if not isinstance(other, Poly):
            return NotImplemented
        return self.nvars == other.nvars and self.terms == other.terms

    def __hash__(self):
        return hash((self.nvars, frozenset(self.terms.items())))

    def __bool__(self):
        return bool(self.terms)

    # -- calculus and evaluation --------------------------------------------

    def partial(self, index: int) -> "Poly":
        """Exact partial derivative with respect to u_{index+1}."""
        if not 0 <= index < self.nvars:
            raise IndexError(f"variable index {index} out of range for nvars={self.nvars}")
        out: dict[Exponents, Fraction] = {}
        for exps, coeff in self.terms.items():
            e = exps[index]
            if e == 0:
                continue
            new = list(exps)
            new[index] = e - 1
            out[tuple(new)] = coeff * e
        return Poly(self.nvars, out)

    def degree(self) -> int:
        """Total degree; 0 for the zero polynomial."""
        return max((sum(e) for e in self.terms), default=0)

    def eval(self, point: Sequence[Scalar]) -> Fraction:
        if len(point) != self.nvars:
            raise ValueError(f"point has {len(point)} coordinates, expected {self.nvars}")
        pt = [_as_fraction(v) for v in point]
        total = Fraction(0)
        for exps, coeff in self.terms.items():
            term = coeff
            for v, e in zip(pt, exps):
                if e:
                    term *= v**e
            total += term
        return total

    def constant_term(self) -> Fraction:
        return self.terms.get((0,) * self.nvars, Fraction(0))

    def is_constant(self) -> bool:
        return all(sum(e) == 0 for e in self.terms)

    # -- rendering ----------------------------------------------------------

    def __str__(self):
        if not self.terms:
            return "0"
        parts = []
        for exps in sorted(self.terms, key=lambda e: (sum(e), e)):
            coeff = self.terms[exps]
            factors = [
                f"u{i + 1}^{e}" if e > 1 else f"u{i + 1}"
                for i, e in enumerate(exps)
                if e
            ]
            if not factors:
                parts.append(str(coeff))
            elif coeff == 1:
                parts.append("*".join(factors))
            elif coeff == -1:
                parts.append("-" + "*".join(factors))
            else:
                parts.append(str(coeff) + "*" + "*".join(factors))
        out = parts[0]
        for p in parts[1:]:
            out += " - " + p[1:] if p.startswith("-") else " + " + p
        return out

    def __repr__(self):
        return f"Poly({self})"


def gradient(p: Poly) -> list[Poly]:
    return [p.partial(k) for k in range(p.nvars)]


def one_form_potential(forms: Sequence[Poly]) -> Poly:
    """Integrate an exact 1-form: return f with df/du_k = forms[k], f(0) = 0.

    Closedness is verified first; a violating pair raises :class:`NotExact`
    with the residual polynomial.  The integration constant is normalized so
    the potential has zero constant term.
    """
    if not forms:
        raise ValueError("empty 1-form")
    nvars = forms[0].nvars
    if len(forms) != nvars:
        raise ValueError(f"1-form must have {nvars} components, got {len(forms)}")
    for a in forms:
        if a.nvars != nvars:
            raise ValueError("1-form components over different variable counts")
    for i in range(nvars):
        for j in range(i + 1, nvars):
            residual = forms[i].partial(j) - forms[j].partial(i)
            if residual:
                raise NotExact(i, j, residual)
    # Radial integration: f(u) = sum_k u_k * int_0^1 forms_k(t*u) dt, which is
    # exact term by term (each monomial of degree d integrates to 1/(d+1)).
    out: dict[Exponents, Fraction] = {}
    for k, form in enumerate(forms):
        for exps, coeff in form.terms.items():
            new = list(exps)
            new[k] += 1
            key = tuple(new)
            out[key] = out.get(key, Fraction(0)) + coeff / sum(new)
    return Poly(nvars, out)


# ---------------------------------------------------------------------------
# Jets: derivative values of a scalar at a base point, order <= 3.
# ---------------------------------------------------------------------------

MAX_JET_ORDER = 3


def _derivative_keys(nvars: int, order: int):
    for r in range(order + 1):
        yield from combinations_with_replacement(range(nvars), r)


def _position_splits(key: Exponents):
    """All (subset, complement) splits of the multi-index by position.

    Splitting by position rather than by multiset value gives the Leibniz
    rule its correct multiplicities, e.g. d_11(ab) = a''b + 2 a'b' + a b''.
    """
    m = len(key)
    for mask in range(1 << m):
        left = tuple(sorted(key[i] for i in range(m) if mask >> i & 1))
        right = tuple(sorted(key[i] for i in range(m) if not mask >> i & 1))
        yield left, right


class Jet:
    """Derivative values of a scalar at a fixed rational point.

    ``coef`` maps sorted derivative multi-indices (as tuples of variable
    indices) to Fractions; the empty tuple is the value slot.  Symmetry of
    mixed partials is built into the sorted-key representation.
    """

    __slots__ = ("nvars", "order", "coef")

    def __init__(self, nvars: int, order: int, coef: Mapping[Exponents, Scalar]):
        if not 0 <= order <= MAX_JET_ORDER:
            raise ValueError(f"jet order must be in 0..{MAX_JET_ORDER}")
        clean: dict[Exponents, Fraction] = {}
        for key in _derivative_keys(nvars, order):
            clean[key] = _as_fraction(coef.get(key, 0))
        object.__setattr__(self, "nvars", nvars)
        object.__setattr__(self, "order", order)
        object.__setattr__(self, "coef", clean)

    def __setattr__(self, name, value):
        raise AttributeError("Jet is immutable")

    @classmethod
    def constant(cls, nvars: int, order: int, value: Scalar) -> "Jet":
        return cls(nvars, order, {(): value})

    @property
    def value(self) -> Fraction:
        return self.coef[()]

    def get(self, *indices: int) -> Fraction:
        """Derivative value for the given variable indices (any order)."""
        return self.coef[tuple(sorted(indices))]

    def _binary_order(self, other: "Jet") -> int:
        if self.nvars != other.nvars:
            raise ValueError("jets over different variable counts")
        return min(self.order, other.order)

    def __add__(self, other):
        if isinstance(other, (int, Fraction)):
            other = Jet.constant(self.nvars, self.order, other)
        if not isinstance(other, Jet):
            return NotImplemented
        order = self._binary_order(other)
        return Jet(
            self.nvars,
            order,
            {k: self.coef[k] + other.coef[k] for k in _derivative_keys(self.nvars, order)},
        )

    __radd__ = __add__

    def __neg__(self):
        return Jet(self.nvars, self.order, {k: -v for k, v in self.coef.items()})

    def __sub__(self, other):
        if isinstance(other, (int, Fraction)):
            other = Jet.constant(self.nvars, self.order, other)
        if not isinstance(other, Jet):
            return NotImplemented
        return self + (-other)

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            c = _as_fraction(other)
            return Jet(self.nvars, self.order, {k: v * c for k, v in self.coef.items()})
        if not isinstance(other, Jet):
            return NotImplemented
        order = self._binary_order(other)
        out: dict[Exponents, Fraction] = {}
        for key in _derivative_keys(self.nvars, order):
            total = Fraction(0)
            for left, right in _position_splits(key):
                total += self.coef[left] * other.coef[right]
            out[key] = total
        return Jet(self.nvars, order, out)

    __rmul__ = __mul__

    def partial(self, index: int) -> "Jet":
        """Shift: the jet of the derivative d/du_{index+1}, one order lower."""
        if self.order == 0:
            raise ValueError("cannot take the derivative of an order-0 jet")
        if not 0 <= index < self.nvars:
            raise IndexError(f"variable index {index} out of range")
        out = {
            k: self.coef[tuple(sorted(k + (index,)))]
            for k in _derivative_keys(self.nvars, self.order - 1)
        }
        return Jet(self.nvars, self.order - 1, out)

    def __eq__(self, other):
        if not isinstance(other, Jet):
            return NotImplemented
        return (
            self.nvars == other.nvars
            and self.order == other.order
            and self.coef == other.coef
        )

    def __repr__(self):
        return f"Jet(order={self.order}, value={self.value})"


def eval_jet(p: Poly, point: Sequence[Scalar], order: int) -> Jet:
    """Exact derivative values of ``p`` at ``point`` up to ``order``."""
    if len(point) != p.nvars:
        raise ValueError(f"point has {len(point)} coordinates, expected {p.nvars}")
    if not 0 <= order <= MAX_JET_ORDER:
        raise ValueError(f"jet order must be in 0..{MAX_JET_ORDER}")
    derivs: dict[Exponents, Poly] = {(): p}
    coef: dict[Exponents, Fraction] = {}
    for key in _derivative_keys(p.nvars, order):
        if key not in derivs:
            derivs[key] = derivs[key[:-1]].partial(key[-1])
        coef[key] = derivs[key].eval(point)
    return Jet(p.nvars, order, coef)


# ---------------------------------------------------------------------------
# Exact linear algebra over Fraction, and jets of an inverse matrix.
# ---------------------------------------------------------------------------

FractionMatrix = list[list[Fraction]]


def fraction_matrix(rows: Iterable[Iterable[Scalar]]) -> FractionMatrix:
    return [[_as_fraction(v) for v in row] for row in rows]


def matrix_inverse_exact(m: FractionMatrix) -> FractionMatrix:
    """Gauss-Jordan inverse over Fractions; raises SingularMetric."""
    n = len(m)
    aug = [[Fraction(v) for v in row] + [Fraction(int(i == j)) for j in range(n)]
           for i, row in enumerate(m)]
    for col in range(n):
        pivot = next((r for r in range(col, n) if aug[r][col]), None)
        if pivot is None:
            raise SingularMetric("matrix value part is singular")
        aug[col], aug[pivot] = aug[pivot], aug[col]
        inv = 1 / aug[col][col]
        aug[col] = [v * inv for v in aug[col]]
        for r in range(n):
            if r != col and aug[r][col]:
                factor = aug[r][col]
                aug[r] = [a - factor * b for a, b in zip(aug[r], aug[col])]
    return [row[n:] for row in aug]


def matrix_determinant_exact(m: FractionMatrix) -> Fraction:
    n = len(m)
    work = [[Fraction(v) for v in row] for row in m]
    det = Fraction(1)
    for col in range(n):
        pivot = next((r for r in range(col, n) if work[r][col]), None)
        if pivot is None:
            return Fraction(0)
        if pivot != col:
            work[col], work[pivot] = work[pivot], work[col]
            det = -det
        det *= work[col][col]
        inv = 1 / work[col][col]
        for r in range(col + 1, n):
            if work[r][col]:
                factor = work[r][col] * inv
                work[r] = [a - factor * b for a, b in zip(work[r], work[col])]
    return det


def matrix_inverse_jet(g: Sequence[Sequence[Jet]]) -> list[list[Jet]]:
    """Jets of the inverse of a jet-valued matrix, to the input order.

    Derivatives propagate through the identity G * inv(G) = I: at each
    multi-index S the Leibniz expansion pins d_S inv(G) in terms of lower
    orders.  Raises :class:`SingularMetric` when the value part is singular.
    """
    n = len(g)
    nvars = g[0][0].nvars
    order = g[0][0].order
    for row in g:
        for entry in row:
            if entry.nvars != nvars or entry.order != order:
                raise ValueError("inconsistent jets in matrix")
    value = [[entry.value for entry in row] for row in g]
    h0 = matrix_inverse_exact(value)

    def mat_mul(a, b):
        return [
            [sum((a[i][k] * b[k][j] for k in range(n)), Fraction(0)) for j in range(n)]
            for i in range(n)
        ]

    h: dict[Exponents, FractionMatrix] = {(): h0}
    for key in _derivative_keys(nvars, order):
        if key == ():
            continue
        acc = [[Fraction(0)] * n for _ in range(n)]
        for left, right in _position_splits(key):
            if not left:
                continue  # the unknown d_key(inv) term, solved for below
            g_left = [[entry.coef[left] for entry in row] for row in g]
            prod = mat_mul(g_left, h[right])
            for i in range(n):
                for j in range(n):
                    acc[i][j] += prod[i][j]
        h[key] = [[-v for v in row] for row in mat_mul(h0, acc)]

    return [
        [
            Jet(nvars, order, {key: h[key][i][j] for key in h})
            for j in range(n)
        ]
        for i in range(n)
    ]
