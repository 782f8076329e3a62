"""Periodic pseudospectral evaluation of the bracket operators and explicit
time integration of the hierarchy flows, with conservation auditing.

Discretization: M equally spaced nodes on [0, 2pi), M a power of two, real
fields, Fourier differentiation.  The antiderivative (d/dx)^{-1} is the
zero-mean one; non-zero-mean inputs are an error, never silently projected,
because every integrand the operators produce is analytically a total
x-derivative and a nonzero mean signals a modeling mistake.

Note on gauge: the zero-mean antiderivative fixes the nonlocal integration
constant from samples alone.  For data without tail potentials it agrees
with the symbolic zero-constant resolution on zero-mean states; with tails
the two conventions differ by a conserved multiple of the tail-primitive
derivative (a recalibration of the flow inside the same commuting family).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .compat import CanonicalData, canonical_bracket
from .hierarchy import FlowSystem, HamiltonianDensity, flow1


class NonZeroMean(Exception):
    """Input to the periodic antiderivative has a nonzero mean."""

    code = "non-zero-mean"

    def __init__(self, mean: float, scale: float, what: str = "field"):
        self.mean = mean
        self.scale = scale
        super().__init__(
            f"{what} has mean {mean:.3e} (tolerance {scale:.3e}); the periodic "
            "antiderivative is only defined for zero-mean input"
        )


class NonFinite(Exception):
    """A field value left the finite range (gradient catastrophe)."""

    code = "non-finite"

    def __init__(self, time: float, step: int):
        self.blow_up_time = time
        self.step = step
        super().__init__(f"field became non-finite at t = {time:.6g} (step {step})")


@dataclass(frozen=True)
class Grid:
    """M equally spaced nodes 2*pi*m/M with rfft wavenumbers."""

    npoints: int
    nodes: np.ndarray = field(repr=False, compare=False, default=None)
    wavenumbers: np.ndarray = field(repr=False, compare=False, default=None)

    def __init__(self, npoints: int):
        if npoints < 16 or npoints & (npoints - 1):
            raise ValueError("grid size must be a power of two, at least 16")
        object.__setattr__(self, "npoints", npoints)
        object.__setattr__(
            self, "nodes", 2.0 * np.pi * np.arange(npoints) / npoints
        )
        object.__setattr__(
            self, "wavenumbers", np.fft.rfftfreq(npoints, d=1.0 / npoints)
        )

    @property
    def spacing(self) -> float:
        return 2.0 * np.pi / self.npoints

    def quadrature(self, values: np.ndarray) -> float:
        """Trapezoid integral over the period (spectrally exact)."""
        return float(values.sum(axis=-1) * self.spacing)


@dataclass
class FieldState:
    """Field values u^i at the grid nodes, shape (N, M)."""

    values: np.ndarray
    time: float = 0.0

    def __post_init__(self):
        self.values = np.atleast_2d(np.asarray(self.values, dtype=float))
        if not np.isfinite(self.values).all():
            raise ValueError("field values must be finite")

    @property
    def ncomponents(self) -> int:
        return self.values.shape[0]


@dataclass
class ConservationSeries:
    """Per-functional time series of integrals along a trajectory."""

    names: list[str]
    times: np.ndarray
    values: np.ndarray  # shape (len(times), len(names))

    def series(self, name: str) -> np.ndarray:
        return self.values[:, self.names.index(name)]

    def relative_drift(self) -> dict[str, float]:
        """Max drift of each functional, relative to the monitored scale.

        Each drift is normalized by the functional's own initial magnitude
        or, when that starts at (numerically) zero, by the largest initial
        magnitude among all monitored functionals.
        """
        initial = self.values[0]
        scale_floor = max(np.abs(initial).max(), np.finfo(float).tiny)
        out = {}
        for idx, name in enumerate(self.names):
            denom = max(abs(initial[idx]), scale_floor)
            out[name] = float(np.abs(self.values[:, idx] - initial[idx]).max() / denom)
        return out


@dataclass
class SimulationResult:
    trajectory: np.ndarray  # shape (steps + 1, N, M)
    times: np.ndarray
    conservation: ConservationSeries
    grid: Grid


# ---------------------------------------------------------------------------
# Spectral primitives.
# ---------------------------------------------------------------------------

DEFAULT_MEAN_TOL = 1e-12


def spectral_dx(f: np.ndarray) -> np.ndarray:
    """Fourier differentiation along the last axis."""
    f = np.asarray(f, dtype=float)
    k = np.fft.rfftfreq(f.shape[-1], d=1.0 / f.shape[-1])
    return np.fft.irfft(1j * k * np.fft.rfft(f), n=f.shape[-1])


def spectral_dx_inv(f: np.ndarray, mean_tol: float = DEFAULT_MEAN_TOL) -> np.ndarray:
    """Zero-mean Fourier antiderivative; requires (numerically) zero mean."""
    f = np.asarray(f, dtype=float)
    _require_zero_mean(f, mean_tol, "antiderivative input")
    k = np.fft.rfftfreq(f.shape[-1], d=1.0 / f.shape[-1])
    spec = np.fft.rfft(f)
    spec[..., 0] = 0.0
    spec[..., 1:] = spec[..., 1:] / (1j * k[1:])
    return np.fft.irfft(spec, n=f.shape[-1])


def _require_zero_mean(f: np.ndarray, mean_tol: float, what: str) -> None:
    scale = float(np.abs(f).max(initial=0.0))
    if scale == 0.0:
        return
    mean = float(f.mean(axis=-1) if f.ndim == 1 else np.abs(f.mean(axis=-1)).max())
    if abs(mean) > mean_tol * scale:
        raise NonZeroMean(mean, mean_tol * scale, what)


def eval_poly_on_grid(p, u: np.ndarray) -> np.ndarray:
    """Evaluate a Poly at every node of a (N, M) state array."""
    out = np.zeros(u.shape[-1])
    for exps, coeff in p.terms.items():
        term = np.full(u.shape[-1], float(coeff))
        for i, e in enumerate(exps):
            if e:
                term = term * u[i] ** e
        out += term
    return out


# ---------------------------------------------------------------------------
# Operator application.
# ---------------------------------------------------------------------------


def apply_p1(
    d: CanonicalData,
    u: FieldState,
    xi: np.ndarray,
    mean_tol: float = DEFAULT_MEAN_TOL,
) -> np.ndarray:
    """Apply the nonlocal operator of the canonical pair to a covector field.

    Pointwise evaluation of g^{ij} dxi_j/dx + b^{ij}_k u^k_x xi_j plus the
    tails sum_a e_a w^i_k u^k_x (d/dx)^{-1}(w^j_s u^s_x xi_j), the inner
    antiderivative taken zero-mean (its input must be zero-mean, which holds
    analytically whenever xi is the gradient of a u-only density).
    """
    bracket = canonical_bracket(d)
    n = bracket.nvars
    vals = u.values
    xi = np.asarray(xi, dtype=float)
    if xi.shape != vals.shape:
        raise ValueError(f"covector field shape {xi.shape} != state shape {vals.shape}")
    ux = spectral_dx(vals)
    xi_x = spectral_dx(xi)

    out = np.zeros_like(vals)
    for i in range(n):
        acc = np.zeros(vals.shape[-1])
        for j in range(n):
            acc += eval_poly_on_grid(bracket.metric[i][j], vals) * xi_x[j]
            for k in range(n):
                acc += eval_poly_on_grid(bracket.conn[i][j][k], vals) * ux[k] * xi[j]
        out[i] = acc

    for tail in bracket.tails:
        w = [[eval_poly_on_grid(p, vals) for p in row] for row in tail.affinor]
        inner = np.zeros(vals.shape[-1])
        for j in range(n):
            for s in range(n):
                inner += w[j][s] * ux[s] * xi[j]
        primitive = spectral_dx_inv(inner, mean_tol)
        eff = float(tail.effective)
        for i in range(n):
            outer = np.zeros(vals.shape[-1])
            for k in range(n):
                outer += w[i][k] * ux[k]
            out[i] += eff * outer * primitive

    return out


def recursion_apply(
    d: CanonicalData,
    u: FieldState,
    flow: np.ndarray,
    mean_tol: float = DEFAULT_MEAN_TOL,
) -> np.ndarray:
    """One application of the recursion operator to a flow field.

    The constant structure is inverted by the zero-mean antiderivative:
    xi_j = eta_{jl} (d/dx)^{-1} flow^l; each flow component must be zero-mean
    (analytically each is an exact x-derivative).
    """
    flow = np.asarray(flow, dtype=float)
    n = d.nvars
    if flow.shape != u.values.shape:
        raise ValueError("flow field shape does not match the state")
    for l in range(n):
        _require_zero_mean(flow[l], mean_tol, f"flow component {l + 1}")
    anti = np.stack([spectral_dx_inv(flow[l], mean_tol) for l in range(n)])
    lower = d.eta.lower
    xi = np.zeros_like(flow)
    for j in range(n):
        for l in range(n):
            xi[j] += float(lower[j][l]) * anti[l]
    return apply_p1(d, u, xi, mean_tol)


def flow_field(
    d: CanonicalData,
    n: int,
    u: FieldState,
    flow_system: FlowSystem | None = None,
    mean_tol: float = DEFAULT_MEAN_TOL,
) -> np.ndarray:
    """The n-th hierarchy flow field at the state (n >= 1).

    n = 1 uses the closed-form flux differentiated spectrally; n >= 2 applies
    the recursion operator repeatedly starting from u_x.
    """
    if n < 1:
        raise ValueError("flow index must be >= 1")
    if flow_system is None:
        flow_system = flow1(d)
    if n == 1:
        flux = np.stack(
            [eval_poly_on_grid(v, u.values) for v in flow_system.flux]
        )
        return spectral_dx(flux)
    current = spectral_dx(u.values)
    for _ in range(n):
        current = recursion_apply(d, u, current, mean_tol)
    return current


# ---------------------------------------------------------------------------
# Time integration with conservation monitoring.
# ---------------------------------------------------------------------------

CFL_SAFETY = 0.5


def integrate(
    d: CanonicalData,
    n: int,
    u0: FieldState,
    dt: float,
    steps: int,
    mean_tol: float = DEFAULT_MEAN_TOL,
) -> SimulationResult:
    """Classical 4th-order explicit stepping of u_t = flow_n(u).

    Monitors the field integrals U^i, the momentum H1 and the flow
    Hamiltonian H2 at every step.  Raises :class:`NonFinite` with the blow-up
    time when the solution leaves the finite range (hydrodynamic flows
    genuinely break; nothing is damped).  The CFL bound
    dt * max|speed| <= 0.5 * dx is advisory: exceeding it warns.
    """
    grid = Grid(u0.values.shape[-1])
    nvars = d.nvars
    if u0.ncomponents != nvars:
        raise ValueError("initial state has the wrong number of components")
    system = flow1(d)

    if n == 1:
        speeds = np.stack(
            [
                [eval_poly_on_grid(c, u0.values) for c in row]
                for row in system.char_matrix
            ]
        )  # (N, N, M)
        per_node = np.abs(np.linalg.eigvals(np.moveaxis(speeds, -1, 0))).max()
        if dt * per_node > CFL_SAFETY * grid.spacing:
            warnings.warn(
                f"dt*max|speed| = {dt * per_node:.3e} exceeds the advisory CFL "
                f"bound {CFL_SAFETY * grid.spacing:.3e}",
                stacklevel=2,
            )

    h1 = system.h1_density.density
    h2 = system.h2_density.density
    names = [f"U{i + 1}" for i in range(nvars)] + ["H1", "H2"]

    def monitor(values: np.ndarray) -> list[float]:
        out = [grid.quadrature(values[i]) for i in range(nvars)]
        out.append(grid.quadrature(eval_poly_on_grid(h1, values)))
        out.append(grid.quadrature(eval_poly_on_grid(h2, values)))
        return out

    def rhs(values: np.ndarray) -> np.ndarray:
        return flow_field(
            d, n, FieldState(values), flow_system=system, mean_tol=mean_tol
        )

    trajectory = np.empty((steps + 1, nvars, grid.npoints))
    times = np.empty(steps + 1)
    monitored = np.empty((steps + 1, len(names)))
    current = u0.values.copy()
    trajectory[0], times[0], monitored[0] = current, u0.time, monitor(current)

    for step in range(1, steps + 1):
        t = u0.time + step * dt
        try:
            k1 = rhs(current)
            k2 = rhs(current + 0.5 * dt * k1)
            k3 = rhs(current + 0.5 * dt * k2)
            k4 = rhs(current + dt * k3)
            current = current + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        except ValueError as exc:  # a stage state left the finite range
            raise NonFinite(t, step) from exc
        if not np.isfinite(current).all():
            raise NonFinite(t, step)
        trajectory[step], times[step], monitored[step] = current, t, monitor(current)

    return SimulationResult(
        trajectory=trajectory,
        times=times,
        conservation=ConservationSeries(names, times.copy(), monitored),
        grid=grid,
    )


def bracket_quadrature(
    d: CanonicalData,
    h_a: HamiltonianDensity,
    h_b: HamiltonianDensity,
    u: FieldState,
    which: int,
    mean_tol: float = DEFAULT_MEAN_TOL,
) -> float:
    """Numeric bracket {A, B} = int (dA/du) P (dB/du) dx of u-only densities.

    ``which`` picks the structure: 1 for the nonlocal operator, 2 for the
    constant one.  Periodic trapezoid quadrature, spectrally exact for
    smooth integrands.
    """
    if which not in (1, 2):
        raise ValueError("which must be 1 or 2")
    n = d.nvars
    grid = Grid(u.values.shape[-1])
    xi_a = np.stack(
        [eval_poly_on_grid(h_a.density.partial(i), u.values) for i in range(n)]
    )
    xi_b = np.stack(
        [eval_poly_on_grid(h_b.density.partial(i), u.values) for i in range(n)]
    )
    if which == 1:
        image = apply_p1(d, u, xi_b, mean_tol)
    else:
        xi_b_x = spectral_dx(xi_b)
        eta = d.eta.eta
        image = np.zeros_like(xi_b)
        for i in range(n):
            for j in range(n):
                image[i] += float(eta[i][j]) * xi_b_x[j]
    return grid.quadrature((xi_a * image).sum(axis=0))


def fourier_state(
    grid: Grid, coefficients: list[dict[str, list[float]]], time: float = 0.0
) -> FieldState:
    """Build a state from truncated Fourier data per component.

    Each component is {"cos": [a0, a1, ...], "sin": [b1, ...]} meaning
    a0 + sum_k a_k cos(k x) + sum_k b_k sin(k x).
    """
    x = grid.nodes
    rows = []
    for comp in coefficients:
        vals = np.zeros_like(x)
        for k, a in enumerate(comp.get("cos", [])):
            vals += a * np.cos(k * x)
        for k, b in enumerate(comp.get("sin", []), start=1):
            vals += b * np.sin(k * x)
        rows.append(vals)
    return FieldState(np.stack(rows), time)
