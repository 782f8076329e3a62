"""Batch front-end: parse a JSON problem spec, dispatch, emit a report.

Problem documents carry exactly one ``mode`` plus the payload it needs;
polynomials are explicit term lists ({"coeff": "p/q", "exps": [...]}), never
parsed expression strings.  Reports are deterministic: identical document +
seed give byte-identical output (timing is therefore excluded from the JSON
report unless explicitly requested).

Exit codes: 0 all checks passed, 1 a check failed, 2 error (bad input or a
module-level error such as a singular matrix); every error carries a stable
machine-readable code.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from fractions import Fraction

from .bracketcore import (
    HydroBracket,
    Tail,
    ViolationReport,
    check_ferapontov_conditions,
    check_poisson,
    classify_geometry,
    sample_points,
)
from .compat import (
    CanonicalData,
    ConstantBracket,
    canonical_bracket,
    check_compatibility,
    check_integrability,
    reconstruct_potentials,
)
from .exactalg import Poly, SingularMetric
from .hierarchy import casimir_momentum_involution, flow1, verify_bihamiltonian
from .simulator import FieldState, Grid, NonFinite, fourier_state, integrate

MODES = (
    "check-bracket",
    "check-compat",
    "check-integrability",
    "build-canonical",
    "reconstruct",
    "flow",
    "simulate",
    "involution",
)


class SpecError(Exception):
    """Problem document rejected; message carries a JSON-path diagnostic."""

    code = "bad-spec"

    def __init__(self, path: str, message: str):
        self.path = path
        super().__init__(f"{path}: {message}")


# ---------------------------------------------------------------------------
# Parsing.
# ---------------------------------------------------------------------------


def _fraction(value, path: str) -> Fraction:
    try:
        if isinstance(value, bool):
            raise ValueError
        if isinstance(value, (int, str)):
            return Fraction(value)
    except (ValueError, ZeroDivisionError):
        pass
    raise SpecError(path, f"expected an exact rational like 3 or '3/2', got {value!r}")


def _poly(doc, nvars: int, path: str) -> Poly:
    if not isinstance(doc, list):
        raise SpecError(path, "polynomial must be a list of terms")
    terms = {}
    for t, term in enumerate(doc):
        tpath = f"{path}[{t}]"
        if not isinstance(term, dict) or set(term) != {"coeff", "exps"}:
            raise SpecError(tpath, "term must be {'coeff': ..., 'exps': [...]}")
        exps = term["exps"]
        if (
            not isinstance(exps, list)
            or len(exps) != nvars
            or any(not isinstance(e, int) or e < 0 for e in exps)
        ):
            raise SpecError(
                f"{tpath}.exps", f"need {nvars} non-negative integer exponents"
            )
        coeff = _fraction(term["coeff"], f"{tpath}.coeff")
        key = tuple(exps)
        terms[key] = terms.get(key, Fraction(0)) + coeff
    return Poly(nvars, terms)


def _matrix(doc, path: str):
    if not isinstance(doc, list) or not doc:
        raise SpecError(path, "expected a non-empty matrix (list of rows)")
    n = len(doc)
    rows = []
    for i, row in enumerate(doc):
        if not isinstance(row, list) or len(row) != n:
            raise SpecError(f"{path}[{i}]", f"expected a row of length {n}")
        rows.append([_fraction(v, f"{path}[{i}][{j}]") for j, v in enumerate(row)])
    return rows


def _eta(doc, path: str) -> ConstantBracket:
    rows = _matrix(doc, path)
    n = len(rows)
    for i in range(n):
        for j in range(i + 1, n):
            if rows[i][j] != rows[j][i]:
                raise SpecError(path, "eta must be symmetric (NonSymmetricEta)")
    try:
        return ConstantBracket(rows)
    except SingularMetric:
        raise SpecError(path, "eta must be nondegenerate (SingularEta)") from None


def _canonical(doc, path: str) -> CanonicalData:
    if not isinstance(doc, dict):
        raise SpecError(path, "canonical payload must be an object")
    if "eta" not in doc or "F" not in doc:
        raise SpecError(path, "canonical payload needs 'eta' and 'F'")
    eta = _eta(doc["eta"], f"{path}.eta")
    n = eta.nvars
    f_doc = doc["F"]
    if not isinstance(f_doc, list) or len(f_doc) != n:
        raise SpecError(f"{path}.F", f"need exactly {n} potentials")
    potentials = [_poly(p, n, f"{path}.F[{i}]") for i, p in enumerate(f_doc)]
    psi_doc = doc.get("psi", [])
    if not isinstance(psi_doc, list):
        raise SpecError(f"{path}.psi", "must be a list of polynomials")
    tail_potentials = [_poly(p, n, f"{path}.psi[{i}]") for i, p in enumerate(psi_doc)]
    signs_doc = doc.get("signs", [])
    if not isinstance(signs_doc, list) or len(signs_doc) != len(tail_potentials):
        raise SpecError(f"{path}.signs", "need one sign (+1/-1) per psi entry")
    signs = []
    for i, s in enumerate(signs_doc):
        if s not in (1, -1):
            raise SpecError(f"{path}.signs[{i}]", "signs must be 1 or -1")
        signs.append(s)
    return CanonicalData(eta, potentials, tail_potentials, signs)


def _bracket(doc, path: str) -> HydroBracket:
    if not isinstance(doc, dict):
        raise SpecError(path, "bracket payload must be an object")
    n = doc.get("nvars")
    if not isinstance(n, int) or n < 1:
        raise SpecError(f"{path}.nvars", "need a positive integer")
    metric_doc = doc.get("metric")
    if not isinstance(metric_doc, list) or len(metric_doc) != n:
        raise SpecError(f"{path}.metric", f"need an {n} x {n} matrix of polynomials")
    metric = [
        [_poly(metric_doc[i][j], n, f"{path}.metric[{i}][{j}]") for j in range(n)]
        for i in range(n)
    ]
    conn_doc = doc.get("conn")
    if not isinstance(conn_doc, list) or len(conn_doc) != n:
        raise SpecError(f"{path}.conn", f"need an {n} x {n} x {n} array of polynomials")
    conn = [
        [
            [_poly(conn_doc[i][j][k], n, f"{path}.conn[{i}][{j}][{k}]") for k in range(n)]
            for j in range(n)
        ]
        for i in range(n)
    ]
    tails = []
    for a, tail_doc in enumerate(doc.get("tails", [])):
        tpath = f"{path}.tails[{a}]"
        if not isinstance(tail_doc, dict) or "affinor" not in tail_doc:
            raise SpecError(tpath, "tail must be {'sign': +-1, 'affinor': [[...]]}")
        sign = tail_doc.get("sign")
        if sign not in (1, -1):
            raise SpecError(f"{tpath}.sign", "sign must be 1 or -1")
        weight = _fraction(tail_doc.get("weight", 1), f"{tpath}.weight")
        if weight <= 0:
            raise SpecError(f"{tpath}.weight", "weight must be positive")
        aff_doc = tail_doc["affinor"]
        if not isinstance(aff_doc, list) or len(aff_doc) != n:
            raise SpecError(f"{tpath}.affinor", f"need an {n} x {n} matrix")
        affinor = [
            [_poly(aff_doc[i][j], n, f"{tpath}.affinor[{i}][{j}]") for j in range(n)]
            for i in range(n)
        ]
        tails.append(Tail(sign, affinor, weight))
    try:
        return HydroBracket(n, metric, conn, tuple(tails))
    except ValueError as exc:
        raise SpecError(path, str(exc)) from None


def _simulation(doc, nvars: int, path: str) -> dict:
    if not isinstance(doc, dict):
        raise SpecError(path, "simulation parameters must be an object")
    out = {
        "M": doc.get("M", 256),
        "dt": doc.get("dt", 1e-3),
        "steps": doc.get("steps", 100),
        "flow": doc.get("flow", 1),
    }
    if not isinstance(out["M"], int):
        raise SpecError(f"{path}.M", "grid size must be an integer")
    if not isinstance(out["steps"], int) or out["steps"] < 1:
        raise SpecError(f"{path}.steps", "step count must be a positive integer")
    if not isinstance(out["flow"], int) or out["flow"] < 1:
        raise SpecError(f"{path}.flow", "flow index must be a positive integer")
    try:
        out["dt"] = float(out["dt"])
    except (TypeError, ValueError):
        raise SpecError(f"{path}.dt", "time step must be a number") from None
    initial = doc.get("initial")
    if not isinstance(initial, list) or len(initial) != nvars:
        raise SpecError(
            f"{path}.initial",
            f"need Fourier data for exactly {nvars} components",
        )
    for i, comp in enumerate(initial):
        if not isinstance(comp, dict) or not set(comp) <= {"cos", "sin"}:
            raise SpecError(
                f"{path}.initial[{i}]", "component must be {'cos': [...], 'sin': [...]}"
            )
        for key in ("cos", "sin"):
            coeffs = comp.get(key, [])
            if not isinstance(coeffs, list) or any(
                not isinstance(v, (int, float)) or isinstance(v, bool) for v in coeffs
            ):
                raise SpecError(f"{path}.initial[{i}].{key}", "must be a list of numbers")
    out["initial"] = initial
    return out


class ProblemSpec:
    """Validated problem document: one mode plus its payload."""

    def __init__(self, mode, canonical=None, bracket=None, eta=None,
                 simulation=None, seed=0):
        self.mode = mode
        self.canonical = canonical
        self.bracket = bracket
        self.eta = eta
        self.simulation = simulation
        self.seed = seed


def parse_spec(text: str) -> ProblemSpec:
    """Parse and validate a problem document from JSON text."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SpecError("$", f"not well-formed JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise SpecError("$", "top level must be an object")
    mode = doc.get("mode")
    if mode not in MODES:
        raise SpecError("$.mode", f"mode must be one of {', '.join(MODES)}")
    seed = doc.get("seed", 0)
    if not isinstance(seed, int):
        raise SpecError("$.seed", "seed must be an integer")

    canonical = bracket = eta = simulation = None
    if mode in ("check-bracket", "check-compat", "reconstruct"):
        if "bracket" not in doc:
            raise SpecError("$.bracket", f"mode {mode} needs a bracket payload")
        bracket = _bracket(doc["bracket"], "$.bracket")
        if mode in ("check-compat", "reconstruct"):
            if "eta" not in doc:
                raise SpecError("$.eta", f"mode {mode} needs a constant bracket")
            eta = _eta(doc["eta"], "$.eta")
            if eta.nvars != bracket.nvars:
                raise SpecError("$.eta", "eta dimension does not match the bracket")
    else:
        if "canonical" not in doc:
            raise SpecError("$.canonical", f"mode {mode} needs a canonical payload")
        canonical = _canonical(doc["canonical"], "$.canonical")
        if mode == "simulate":
            if "simulation" not in doc:
                raise SpecError("$.simulation", "mode simulate needs parameters")
            simulation = _simulation(doc["simulation"], canonical.nvars, "$.simulation")

    return ProblemSpec(mode, canonical, bracket, eta, simulation, seed)


# ---------------------------------------------------------------------------
# Dispatch and reporting.
# ---------------------------------------------------------------------------


def _poly_json(p: Poly):
    return {
        "text": str(p),
        "terms": [
            {"coeff": str(c), "exps": list(e)}
            for e, c in sorted(p.terms.items(), key=lambda kv: (sum(kv[0]), kv[0]))
        ],
    }


def _violations_json(report: ViolationReport):
    entries = sorted(
        report.entries, key=lambda v: (v.relation, v.index)
    )
    out = []
    for v in entries:
        residual = (
            _poly_json(v.residual) if isinstance(v.residual, Poly) else str(v.residual)
        )
        out.append({"relation": v.relation, "index": list(v.index), "residual": residual})
    return out


class Report:
    def __init__(self, mode, status, violations=None, artifacts=None, error=None,
                 seed=0, timing_ms=None):
        self.mode = mode
        self.status = status  # pass | fail | error
        self.violations = violations or []
        self.artifacts = artifacts or {}
        self.error = error
        self.seed = seed
        self.timing_ms = timing_ms

    def to_json(self, include_timing: bool = False) -> str:
        doc = {
            "mode": self.mode,
            "status": self.status,
            "violations": self.violations,
            "artifacts": self.artifacts,
            "seed": self.seed,
            # Timing is volatile; it is opt-in so identical inputs produce
            # byte-identical reports by default.
            "timing_ms": round(self.timing_ms, 3) if include_timing else None,
        }
        if self.error:
            doc["error"] = self.error
        return json.dumps(doc, sort_keys=True, indent=2) + "\n"

    def to_text(self) -> str:
        lines = [f"mode: {self.mode}", f"status: {self.status}"]
        if self.error:
            lines.append(f"error [{self.error['code']}]: {self.error['message']}")
        for v in self.violations:
            residual = v["residual"]
            if isinstance(residual, dict):
                residual = residual["text"]
            lines.append(
                f"  violation ({v['relation']}) at {tuple(v['index'])}: {residual}"
            )
        for key, value in sorted(self.artifacts.items()):
            lines.append(f"{key}: {json.dumps(value, sort_keys=True)}")
        if self.timing_ms is not None:
            lines.append(f"timing: {self.timing_ms:.1f} ms")
        return "\n".join(lines) + "\n"

    @property
    def exit_code(self) -> int:
        return {"pass": 0, "fail": 1, "error": 2}[self.status]


def _bracket_artifacts(b: HydroBracket):
    return {
        "nvars": b.nvars,
        "metric": [[_poly_json(p) for p in row] for row in b.metric],
        "conn": [
            [[_poly_json(p) for p in col] for col in row] for row in b.conn
        ],
        "tails": [
            {
                "sign": t.sign,
                "weight": str(t.weight),
                "affinor": [[_poly_json(p) for p in row] for row in t.affinor],
            }
            for t in b.tails
        ],
    }


def run(spec: ProblemSpec, csv_path: str | None = None) -> Report:
    """Dispatch a validated problem document; never raises for check failures."""
    start = time.perf_counter()
    try:
        report = _dispatch(spec, csv_path)
    except SpecError as exc:
        report = Report(
            spec.mode, "error", error={"code": exc.code, "message": str(exc)},
            seed=spec.seed,
        )
    except Exception as exc:
        code = getattr(exc, "code", None)
        if code is None:
            raise
        error = {"code": code, "message": str(exc)}
        if isinstance(exc, NonFinite):
            error["blow_up_time"] = exc.blow_up_time
        report = Report(spec.mode, "error", error=error, seed=spec.seed)
    report.timing_ms = (time.perf_counter() - start) * 1e3
    return report


def _dispatch(spec: ProblemSpec, csv_path: str | None) -> Report:
    mode = spec.mode

    if mode == "check-bracket":
        report = check_poisson(spec.bracket)
        artifacts = {}
        try:
            point = sample_points(spec.bracket, spec.seed, 1)[0]
            geometry = classify_geometry(spec.bracket, point)
            ferapontov = check_ferapontov_conditions(spec.bracket, point)
            artifacts["geometry"] = {
                "point": [str(c) for c in point],
                "classification": geometry.classification,
                "curvature_constant": (
                    None
                    if geometry.curvature_constant is None
                    else str(geometry.curvature_constant)
                ),
                "ferapontov_ok": ferapontov.ok,
            }
            violations = _violations_json(report) + _violations_json(ferapontov)
        except SingularMetric:
            artifacts["geometry"] = {"skipped": "metric degenerate at sample points"}
            violations = _violations_json(report)
        status = "pass" if not violations else "fail"
        return Report(mode, status, violations, artifacts, seed=spec.seed)

    if mode == "check-compat":
        axioms = check_poisson(spec.bracket)
        if not axioms.ok:
            return Report(
                mode, "fail", _violations_json(axioms),
                {"note": "bracket axioms fail; compatibility not evaluated"},
                seed=spec.seed,
            )
        report = check_compatibility(spec.eta, spec.bracket, require_poisson=False)
        return Report(
            mode,
            "pass" if report.ok else "fail",
            _violations_json(report),
            seed=spec.seed,
        )

    if mode == "check-integrability":
        report = check_integrability(spec.canonical)
        return Report(
            mode,
            "pass" if report.ok else "fail",
            _violations_json(report),
            seed=spec.seed,
        )

    if mode == "build-canonical":
        bracket = canonical_bracket(spec.canonical)
        report = check_poisson(bracket)
        return Report(
            mode,
            "pass" if report.ok else "fail",
            _violations_json(report),
            {"bracket": _bracket_artifacts(bracket)},
            seed=spec.seed,
        )

    if mode == "reconstruct":
        axioms = check_poisson(spec.bracket)
        if not axioms.ok:
            return Report(
                mode, "fail", _violations_json(axioms),
                {"note": "bracket axioms fail; reconstruction not attempted"},
                seed=spec.seed,
            )
        compatibility = check_compatibility(
            spec.eta, spec.bracket, require_poisson=False
        )
        if not compatibility.ok:
            return Report(
                mode, "fail", _violations_json(compatibility), seed=spec.seed
            )
        chain = reconstruct_potentials(spec.bracket, spec.eta)
        artifacts = {
            "potentials": [_poly_json(p) for p in chain.potentials],
            "tail_potentials": [_poly_json(p) for p in chain.tail_potentials],
            "gauge_constant": [[str(v) for v in row] for row in chain.gauge_constant],
        }
        return Report(mode, "pass", [], artifacts, seed=spec.seed)

    if mode == "flow":
        system = flow1(spec.canonical)
        identities = verify_bihamiltonian(spec.canonical, system)
        artifacts = {
            "flux": [_poly_json(p) for p in system.flux],
            "char_matrix": [[_poly_json(p) for p in row] for row in system.char_matrix],
            "h1_density": _poly_json(system.h1_density.density),
            "h2_density": _poly_json(system.h2_density.density),
        }
        return Report(
            mode,
            "pass" if identities.ok else "fail",
            _violations_json(identities),
            artifacts,
            seed=spec.seed,
        )

    if mode == "involution":
        report = casimir_momentum_involution(spec.canonical)
        return Report(
            mode,
            "pass" if report.ok else "fail",
            _violations_json(report),
            seed=spec.seed,
        )

    if mode == "simulate":
        params = spec.simulation
        grid = Grid(params["M"])
        u0 = fourier_state(grid, params["initial"])
        if u0.ncomponents != spec.canonical.nvars:
            raise SpecError("$.simulation.initial", "component count mismatch")
        result = integrate(
            spec.canonical, params["flow"], u0, params["dt"], params["steps"]
        )
        drift = result.conservation.relative_drift()
        artifacts = {
            "M": params["M"],
            "dt": params["dt"],
            "steps": params["steps"],
            "flow": params["flow"],
            "functionals": result.conservation.names,
            "final_values": [
                float(f"{v:.17g}") for v in result.conservation.values[-1]
            ],
            "relative_drift": {k: float(f"{v:.17g}") for k, v in drift.items()},
        }
        if csv_path:
            write_conservation_csv(csv_path, result)
            artifacts["csv"] = csv_path
        return Report(mode, "pass", [], artifacts, seed=spec.seed)

    raise SpecError("$.mode", f"unhandled mode {mode}")


def write_conservation_csv(path: str, result) -> None:
    """Conservation audit as CSV: step, time, then one column per functional."""
    names = result.conservation.names
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("step,time," + ",".join(names) + "\n")
        for step, t in enumerate(result.times):
            row = result.conservation.values[step]
            fh.write(
                f"{step},{t:.17g}," + ",".join(f"{v:.17g}" for v in row) + "\n"
            )


def write_snapshot_csv(path: str, result, step: int) -> None:
    """One field snapshot as a CSV matrix (components as rows)."""
    with open(path, "w", encoding="utf-8") as fh:
        for row in result.trajectory[step]:
            fh.write(",".join(f"{v:.17g}" for v in row) + "\n")


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="hydrobrackets",
        description="verify, construct and integrate nonlocal hydrodynamic-type "
        "brackets from a JSON problem document",
    )
    parser.add_argument("--spec", required=True, help="path to the JSON problem document")
    parser.add_argument("--out", help="write the report here instead of stdout")
    parser.add_argument("--format", choices=("json", "text"), default="json")
    parser.add_argument("--seed", type=int, help="override the document's sample seed")
    parser.add_argument("--csv", help="conservation CSV output path (simulate mode)")
    parser.add_argument(
        "--timing", action="store_true",
        help="include wall-clock timing in the JSON report (breaks byte-identity)",
    )
    args = parser.parse_args(argv)

    try:
        with open(args.spec, encoding="utf-8") as fh:
            text = fh.read()
        spec = parse_spec(text)
    except OSError as exc:
        print(f"error [io]: {exc}", file=sys.stderr)
        return 2
    except SpecError as exc:
        print(f"error [{exc.code}]: {exc}", file=sys.stderr)
        return 2

    if args.seed is not None:
        spec.seed = args.seed

    report = run(spec, csv_path=args.csv)
    if args.format == "json":
        rendered = report.to_json(include_timing=args.timing)
    else:
        rendered = report.to_text()

    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(rendered)
    else:
        sys.stdout.write(rendered)
    return report.exit_code


if __name__ == "__main__":
    raise SystemExit(main())
