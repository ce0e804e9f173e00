"""Scenario runner and report emitter.

Loads declarative JSON scenario files (a top-level "kind" discriminant
plus kind-specific parameters), dispatches to the computational modules
and writes deterministic JSON reports: identical inputs and seeds
produce byte-identical reports, so wall-clock timings are only included
on explicit request.
"""

from __future__ import annotations

import argparse
import json
import os
import random
import sys
import tempfile
import time
from fractions import Fraction

import jsonschema
import numpy as np

from . import __version__, diophantine, lie, normalform, series
from .errors import KamError, ResonantDenominator, SchemaError
from .normalform import IntegrableHamiltonian
from .scalar import ScalarContext, parse_literal, quadratic
from .series import Generator, PoissonSeries, TruncationSpec, compose_flows, poisson_bracket

_CONTEXT = {
    "type": "object",
    "properties": {
        "mode": {"enum": ["rational", "quadratic", "float64"]},
        "d": {"type": "integer", "minimum": 2},
    },
    "required": ["mode"],
    "additionalProperties": False,
}
_TRUNC = {
    "type": "object",
    "properties": {k: {"type": "integer", "minimum": 0} for k in ("n", "Dp", "Dt", "Nq")},
    "required": ["n", "Dp", "Dt", "Nq"],
    "additionalProperties": False,
}
_TERMS = {"type": "array", "items": {"type": "array", "minItems": 4, "maxItems": 4}}
_NUM = {"type": ["number", "string"]}
_VEC = {"type": "array", "items": {"type": "number"}}
_MAT = {"type": "array", "items": _VEC}

SCENARIO_SCHEMAS = {
    "formal-nf": {
        "type": "object",
        "properties": {
            "kind": {"const": "formal-nf"},
            "context": _CONTEXT,
            "trunc": _TRUNC,
            "H": _TERMS,
            "Q": _TERMS,
        },
        "required": ["kind", "context", "trunc", "H", "Q"],
        "additionalProperties": False,
    },
    "kolmogorov-nf": {
        "type": "object",
        "properties": {
            "kind": {"const": "kolmogorov-nf"},
            "context": _CONTEXT,
            "trunc": _TRUNC,
            "H": _TERMS,
            "Q": _TERMS,
        },
        "required": ["kind", "context", "trunc", "H", "Q"],
        "additionalProperties": False,
    },
    "resonances": {
        "type": "object",
        "properties": {
            "kind": {"const": "resonances"},
            "context": _CONTEXT,
            "omega": {"type": "array"},
            "N": {"type": "integer", "minimum": 1},
        },
        "required": ["kind", "context", "omega", "N"],
        "additionalProperties": False,
    },
    "diophantine": {
        "type": "object",
        "properties": {
            "kind": {"const": "diophantine"},
            "context": _CONTEXT,
            "omega": {"type": "array"},
            "nu": _NUM,
            "N": {"type": "integer", "minimum": 1},
        },
        "required": ["kind", "context", "omega", "nu", "N"],
        "additionalProperties": False,
    },
    "liouville": {
        "type": "object",
        "properties": {
            "kind": {"const": "liouville"},
            "k_values": {"type": "array", "items": {"type": "integer", "minimum": 1}},
            "nu": _NUM,
            "m": {"type": "integer", "minimum": 2},
        },
        "required": ["kind", "k_values", "nu", "m"],
        "additionalProperties": False,
    },
    "hadamard": {
        "type": "object",
        "properties": {
            "kind": {"const": "hadamard"},
            "context": _CONTEXT,
            "omega": {"type": "array"},
            "N": {"type": "integer", "minimum": 1},
            "decay_rate": {"type": "number"},
        },
        "required": ["kind", "context", "omega", "N", "decay_rate"],
        "additionalProperties": False,
    },
    "measure": {
        "type": "object",
        "properties": {
            "kind": {"const": "measure"},
            "n": {"type": "integer", "minimum": 1},
            "R": {"type": "number"},
            "C_values": {"type": "array", "items": {"type": "number"}},
            "nu": _NUM,
            "N": {"type": "integer", "minimum": 1},
            "samples": {"type": "integer", "minimum": 1},
            "seed": {"type": "integer"},
            "partitions": {"type": "integer", "minimum": 1},
        },
        "required": ["kind", "n", "R", "C_values", "nu", "N", "samples", "seed"],
        "additionalProperties": False,
    },
    "lie-homogeneous": {
        "type": "object",
        "properties": {
            "kind": {"const": "lie-homogeneous"},
            "a": _VEC,
            "b": _VEC,
            "tol": {"type": "number"},
            "max_iter": {"type": "integer", "minimum": 1},
        },
        "required": ["kind", "a", "b"],
        "additionalProperties": False,
    },
    "lie-parametric": {
        "type": "object",
        "properties": {
            "kind": {"const": "lie-parametric"},
            "a": _MAT,
            "b": _MAT,
            "tol": {"type": "number"},
            "max_iter": {"type": "integer", "minimum": 1},
        },
        "required": ["kind", "a", "b"],
        "additionalProperties": False,
    },
    "selftest": {
        "type": "object",
        "properties": {
            "kind": {"const": "selftest"},
            "seed": {"type": "integer"},
        },
        "required": ["kind"],
        "additionalProperties": False,
    },
}


def validate_scenario(obj) -> str:
    if not isinstance(obj, dict) or "kind" not in obj:
        raise SchemaError("scenario must be an object with a 'kind' field")
    kind = obj["kind"]
    schema = SCENARIO_SCHEMAS.get(kind)
    if schema is None:
        raise SchemaError(f"unknown scenario kind {kind!r}")
    try:
        jsonschema.validate(obj, schema)
    except jsonschema.ValidationError as exc:
        raise SchemaError(f"scenario does not match the {kind!r} schema: {exc.message}")
    return kind


def _context(obj) -> ScalarContext:
    return ScalarContext.from_json(obj)


def _series_from(ctx, trunc, mode, term_list) -> PoissonSeries:
    terms = [
        ((tuple(I), tuple(J), k), parse_literal(ctx, lit)) for I, J, k, lit in term_list
    ]
    return PoissonSeries(ctx, trunc, mode, terms)


def _scalars(ctx, lst):
    return tuple(parse_literal(ctx, x) for x in lst)


# ---------------------------------------------------------------------------
# kind handlers


def _run_formal_nf(params):
    ctx = _context(params["context"])
    trunc = TruncationSpec.from_json(params["trunc"])
    H = IntegrableHamiltonian.from_series(_series_from(ctx, trunc, "torus", params["H"]))
    Q = _series_from(ctx, trunc, "torus", params["Q"])
    res = normalform.formal_normal_form(H, Q)
    return res.to_json(), {"dropped_terms": res.dropped_terms}


def _run_kolmogorov_nf(params):
    ctx = _context(params["context"])
    trunc = TruncationSpec.from_json(params["trunc"])
    H = IntegrableHamiltonian.from_series(_series_from(ctx, trunc, "torus", params["H"]))
    Q = _series_from(ctx, trunc, "torus", params["Q"])
    res = normalform.kolmogorov_normal_form(H, Q)
    return res.to_json(), {"dropped_terms": res.dropped_terms}


def _run_resonances(params):
    ctx = _context(params["context"])
    omega = _scalars(ctx, params["omega"])
    found = normalform.resonances(omega, params["N"])
    return {"resonances": [list(I) for I in found]}, {}


def _run_diophantine(params):
    ctx = _context(params["context"])
    omega = diophantine.FrequencyVector(_scalars(ctx, params["omega"]), ctx)
    est = diophantine.kolmogorov_constant(omega, Fraction(str(params["nu"])), params["N"])
    return est.to_json(), {"smallest_denominator": est.c_est.to_json()}


def _run_liouville(params):
    nu = Fraction(str(params["nu"]))
    ws = [diophantine.liouville_witness(k, nu, params["m"]) for k in params["k_values"]]
    powers = [w.product_power() for w in ws]
    decreasing = all(powers[i + 1] < powers[i] for i in range(len(powers) - 1))
    return {
        "witnesses": [w.to_json() for w in ws],
        "products_strictly_decreasing": decreasing,
    }, {}


def _run_hadamard(params):
    ctx = _context(params["context"])
    omega = diophantine.FrequencyVector(_scalars(ctx, params["omega"]), ctx)
    h = diophantine.small_denominator_series(omega, params["N"])
    rate = float(params["decay_rate"])
    f = diophantine.FourierTable(
        {
            I: float(np.exp(-rate * np.sqrt(sum(x * x for x in I))))
            for I in h.coefficients
        },
        source=f"exp(-{rate}|I|)",
    )
    prod = diophantine.hadamard_apply(h, f)
    return {
        "denominator_fit": diophantine.decay_fit(h).to_json(),
        "input_fit": diophantine.decay_fit(f).to_json(),
        "product_fit": diophantine.decay_fit(prod).to_json(),
    }, {}


def _run_measure(params):
    nu = Fraction(str(params["nu"]))
    out = []
    for C in params["C_values"]:
        est = diophantine.measure_estimate(
            n=params["n"],
            R=float(params["R"]),
            C=float(C),
            nu=nu,
            N=params["N"],
            samples=params["samples"],
            seed=params["seed"],
            partitions=params.get("partitions", 1),
        )
        out.append({"C": float(C), **est.to_json()})
    return {"per_C": out}, {}


def _run_lie_homogeneous(params):
    a = np.asarray(params["a"], dtype=float)
    b = np.asarray(params["b"], dtype=float)
    action = lie.vector_action()

    def j(v):
        return np.outer(v, a) / float(a @ a)

    gens, trace = lie.lie_iterate_homogeneous(
        action, a, b, j,
        max_iter=params.get("max_iter", 40),
        tol=params.get("tol", 1e-12),
    )
    x = a + b
    for xi in gens:
        x = action.apply(-xi, x)
    return {
        "trace": trace.to_json(),
        "steps": len(gens),
        "residual": float(np.linalg.norm(x - a)),
    }, {}


def _run_lie_parametric(params):
    a = np.asarray(params["a"], dtype=float)
    b = np.asarray(params["b"], dtype=float)
    transversal = lie.transversal_from_commutant(a)
    gens, alpha_total, trace = lie.lie_iterate_parametric(
        a, b, transversal,
        max_iter=params.get("max_iter", 40),
        tol=params.get("tol", 1e-12),
    )
    return {
        "trace": trace.to_json(),
        "steps": len(gens),
        "alpha_total": alpha_total.tolist(),
        "normal_form": (a + alpha_total).tolist(),
        "eigenvalues_input": sorted(np.linalg.eigvals(a + b).real.tolist()),
        "eigenvalues_normal": sorted(np.linalg.eigvals(a + alpha_total).real.tolist()),
    }, {}


_HANDLERS = {
    "formal-nf": _run_formal_nf,
    "kolmogorov-nf": _run_kolmogorov_nf,
    "resonances": _run_resonances,
    "diophantine": _run_diophantine,
    "liouville": _run_liouville,
    "hadamard": _run_hadamard,
    "measure": _run_measure,
    "lie-homogeneous": _run_lie_homogeneous,
    "lie-parametric": _run_lie_parametric,
}


# ---------------------------------------------------------------------------
# selftest: the release-gate invariant suite


def _random_series(rng, ctx, trunc, mode, n_terms, max_absI, max_pdeg, max_t):
    n = trunc.n
    terms = {}
    for _ in range(n_terms):
        I = tuple(rng.randint(-max_absI, max_absI) for _ in range(n))
        total = rng.randint(0, max_pdeg)
        J = [0] * n
        for _ in range(total):
            J[rng.randrange(n)] += 1
        k = rng.randint(0, max_t)
        coeff = Fraction(rng.randint(-6, 6), rng.randint(1, 4))
        key = (I, tuple(J), k)
        terms[key] = terms.get(key, Fraction(0)) + coeff
    return PoissonSeries(ctx, trunc, mode, terms)


def _random_generator(rng, ctx, trunc, mode):
    if rng.random() < 0.5:
        S = _random_series(rng, ctx, trunc, mode, 3, 1, 1, trunc.Dt)
        S = S.select(lambda I, J, k: k >= 1)
        return Generator.hamiltonian(S)
    shift = [Fraction(rng.randint(-3, 3), rng.randint(1, 3)) for _ in range(trunc.n)]
    return Generator.translation(rng.randint(1, max(1, trunc.Dt)), shift, ctx)


def selftest(seed: int = 0, bracket_sign: int = 1) -> dict:
    """Run the invariant suite and report pass/fail per property.

    ``bracket_sign`` is a mutation-test hook: flipping it to -1 leaves the
    Poisson-algebra axioms intact but breaks the eigen-relation with a
    sign diagnostic, which is exactly what distinguishes the two bracket
    orientations.
    """
    rng = random.Random(seed)
    props = {}

    def bk(f, g):
        out = poisson_bracket(f, g)
        return out if bracket_sign == 1 else out.scale(bracket_sign)

    # Jacobi (+ antisymmetry and Leibniz), both bracket modes, with
    # degree budgets keeping all intermediate products inside the window.
    from .scalar import RATIONAL

    trunc = TruncationSpec(n=2, Dp=4, Dt=3, Nq=4)
    ok, trials = True, 0
    for mode in ("torus", "symplectic"):
        for _ in range(20):
            f = _random_series(rng, RATIONAL, trunc, mode, 4, 1, 2, 1)
            g = _random_series(rng, RATIONAL, trunc, mode, 4, 1, 2, 1)
            h = _random_series(rng, RATIONAL, trunc, mode, 4, 1, 0, 1)
            anti = bk(f, g) + bk(g, f)
            leib = bk(f, g * h) - (bk(f, g) * h + g * bk(f, h))
            jac = bk(bk(f, g), h) + bk(bk(g, h), f) + bk(bk(h, f), g)
            trials += 1
            if not (anti.is_zero() and leib.is_zero() and jac.is_zero()):
                ok = False
    props["jacobi"] = {"pass": ok, "trials": trials}

    # Flow morphism: products and brackets preserved exactly mod trunc.
    trunc = TruncationSpec(n=2, Dp=4, Dt=3, Nq=6)
    ok, trials = True, 0
    for _ in range(10):
        f = _random_series(rng, RATIONAL, trunc, "torus", 3, 1, 2, 1)
        g = _random_series(rng, RATIONAL, trunc, "torus", 3, 1, 2, 1)
        gen = _random_generator(rng, RATIONAL, trunc, "torus")
        ff, gg = series.flow_apply(gen, f), series.flow_apply(gen, g)
        mult = series.flow_apply(gen, f * g) - ff * gg
        morp = series.flow_apply(gen, bk(f, g)) - bk(ff, gg)
        trials += 1
        if not (mult.is_zero() and morp.is_zero()):
            ok = False
    props["flow_morphism"] = {"pass": ok, "trials": trials}

    # Eigen-relation: p-degree-0 part of {H, q^I} is (omega, I) q^I.
    ctx = quadratic(2)
    trunc = TruncationSpec(n=2, Dp=2, Dt=0, Nq=12)
    sqrt2 = ctx.sqrt_d()
    H = PoissonSeries(
        ctx,
        trunc,
        "torus",
        {
            ((0, 0), (1, 0), 0): 1,
            ((0, 0), (0, 1), 0): sqrt2,
            ((0, 0), (0, 2), 0): Fraction(1, 2),
        },
    )
    omega = (ctx.one, sqrt2)
    ok, detail = True, ""
    for _ in range(30):
        I = (0, 0)
        while all(x == 0 for x in I):
            I = (rng.randint(-12, 12), rng.randint(-12, 12))
        qI = PoissonSeries.monomial(ctx, trunc, "torus", 1, I=I)
        got = bk(H, qI).select(lambda _I, J, k: sum(J) == 0)
        pairing = omega[0] * I[0] + omega[1] * I[1]
        want = qI.scale(pairing)
        if got != want:
            ok = False
            if got == -want:
                detail = "bracket sign flipped: eigenvalue is -(omega, I)"
            else:
                detail = "eigen-relation mismatch"
            break
    props["eigen_relation"] = {"pass": ok, "trials": 30, **({"detail": detail} if detail else {})}

    # Commutant orthogonality for a random matrix.
    nprng = np.random.default_rng(seed)
    A = nprng.standard_normal((3, 3))
    try:
        lie.transversal_from_commutant(A, checks=100, seed=seed)
        props["commutant_orthogonality"] = {"pass": True, "checks": 100}
    except KamError as exc:
        props["commutant_orthogonality"] = {"pass": False, "detail": str(exc)}

    # Oracle equivalence: normal forms reproduced by composing their flows.
    ok, detail = True, ""
    try:
        from .scalar import RATIONAL as R_

        trunc = TruncationSpec(n=1, Dp=3, Dt=3, Nq=3)
        Hs = PoissonSeries(R_, trunc, "torus", {((0,), (1,), 0): 1})
        H1 = IntegrableHamiltonian.from_series(Hs)
        Q = PoissonSeries(
            R_,
            trunc,
            "torus",
            {((0,), (2,), 0): 1, ((1,), (1,), 0): 1, ((-1,), (1,), 0): 1},
        )
        res = normalform.formal_normal_form(H1, Q)
        t = PoissonSeries.monomial(R_, trunc, "torus", 1, k=1)
        if compose_flows(res.generators, Hs + t * Q) != res.normal:
            ok, detail = False, "formal normal form disagrees with its flow oracle"
        Hk = PoissonSeries(R_, trunc, "torus", {((0,), (1,), 0): 3, ((0,), (2,), 0): Fraction(1, 2)})
        H2 = IntegrableHamiltonian.from_series(Hk)
        Qk = PoissonSeries(R_, trunc, "torus", {((0,), (1,), 0): 1})
        resk = normalform.kolmogorov_normal_form(H2, Qk)
        expected_c = PoissonSeries(
            R_, trunc, "torus", {((0,), (0,), 1): -3, ((0,), (0,), 2): Fraction(-1, 2)}
        )
        if resk.casimir != expected_c or not resk.remainder.is_zero():
            ok, detail = False, "Kolmogorov normal form disagrees with the substitution oracle"
        if compose_flows(resk.generators, Hk + t * Qk) != resk.normal:
            ok, detail = False, "Kolmogorov normal form disagrees with its flow oracle"
    except KamError as exc:
        ok, detail = False, str(exc)
    props["oracle_equivalence"] = {"pass": ok, **({"detail": detail} if detail else {})}

    return {
        "kind": "selftest",
        "seed": seed,
        "properties": props,
        "all_pass": all(p["pass"] for p in props.values()),
    }


# ---------------------------------------------------------------------------
# report plumbing


def _write_report(report: dict, out_path: str | None) -> None:
    text = json.dumps(report, sort_keys=True, indent=2) + "\n"
    if out_path is None:
        sys.stdout.write(text)
        return
    directory = os.path.dirname(os.path.abspath(out_path)) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".kamforge-")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, out_path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def run_scenario(path: str, out: str | None = None, timings: bool = False) -> int:
    """Execute a scenario file and write its report; returns the exit status."""
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        sys.stderr.write(f"kamforge: cannot read scenario: {exc}\n")
        return 2
    try:
        kind = validate_scenario(raw)
    except SchemaError as exc:
        sys.stderr.write(f"kamforge: {exc}\n")
        _write_report(
            {"scenario": raw, "version": __version__, "error": {"type": "SchemaError", "message": str(exc)}},
            out,
        )
        return 2
    report = {"scenario": raw, "version": __version__}
    series.reset_drop_count()
    t0 = time.perf_counter()
    try:
        if kind == "selftest":
            results, diag = selftest(raw.get("seed", 0)), {}
        else:
            results, diag = _HANDLERS[kind](raw)
    except KamError as exc:
        err = {"type": type(exc).__name__, "message": str(exc)}
        if isinstance(exc, ResonantDenominator):
            err["vector"] = list(exc.vector)
            if exc.t_order is not None:
                err["t_order"] = exc.t_order
        report["error"] = err
        _write_report(report, out)
        return 1
    report["results"] = results
    diag.setdefault("dropped_terms", series.drop_count())
    if timings:
        diag["elapsed_seconds"] = time.perf_counter() - t0
    report["diagnostics"] = diag
    _write_report(report, out)
    return 0


def run_selftest(seed: int, out: str | None = None) -> int:
    report = {
        "scenario": {"kind": "selftest", "seed": seed},
        "version": __version__,
        "results": selftest(seed),
        "diagnostics": {},
    }
    _write_report(report, out)
    return 0 if report["results"]["all_pass"] else 1


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="kamforge",
        description="Executable formal KAM theory: scenario runner and self tests.",
    )
    parser.add_argument("--version", action="version", version=f"kamforge {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    p_run = sub.add_parser("run", help="run a JSON scenario file")
    p_run.add_argument("scenario")
    p_run.add_argument("--out", default=None, help="report path (default: stdout)")
    p_run.add_argument("--timings", action="store_true", help="include wall-clock timings")
    p_st = sub.add_parser("selftest", help="run the invariant suite")
    p_st.add_argument("--seed", type=int, default=0)
    p_st.add_argument("--out", default=None)
    args = parser.parse_args(argv)
    if args.command == "run":
        return run_scenario(args.scenario, args.out, args.timings)
    return run_selftest(args.seed, args.out)


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
