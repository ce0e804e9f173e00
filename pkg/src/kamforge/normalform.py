"""Constructive normal-form algorithms.

Contains resonance detection, the triangular homological-equation solver
for {H, -}, the order-by-order formal stability iteration (a central
Poisson automorphism taking H + tQ into K[[p, t]]), the truncated
Kolmogorov normal form H + c(t) + (ideal-square remainder), and the
normal-space class map with certificate.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product

from .errors import (
    ContextMismatch,
    DegenerateAlpha,
    ResonantDenominator,
    TruncationExceeded,
)
from .scalar import CertifiedDecimal, exact_sign
from .series import Generator, PoissonSeries, drop_count, flow_apply, poisson_bracket

__all__ = [
    "IntegrableHamiltonian",
    "NormalFormResult",
    "NormalSpaceClass",
    "resonances",
    "homological_solve",
    "formal_normal_form",
    "kolmogorov_normal_form",
    "normal_space_class",
]


@dataclass(frozen=True)
class IntegrableHamiltonian:
    """An element of K[[p]] without constant term, H = (omega, p) + p.alpha.p + ...

    ``omega`` collects the linear coefficients, ``alpha`` the symmetrized
    quadratic ones (so that sum_ij alpha_ij p_i p_j is the degree-2 part).
    """

    series: PoissonSeries
    omega: tuple
    alpha: tuple

    @classmethod
    def from_series(cls, series: PoissonSeries) -> "IntegrableHamiltonian":
        n = series.trunc.n
        ctx = series.context
        zero_I = (0,) * n
        for (I, J, k), _ in series.items():
            if I != zero_I or k != 0:
                raise ValueError("integrable Hamiltonian must lie in K[[p]]")
            if sum(J) == 0:
                raise ValueError("integrable Hamiltonian must have no constant term")
        omega = tuple(
            series.coefficient(zero_I, tuple(1 if j == i else 0 for j in range(n)))
            for i in range(n)
        )
        half = Fraction(1, 2)
        alpha = []
        for i in range(n):
            row = []
            for j in range(n):
                J = [0] * n
                J[i] += 1
                J[j] += 1
                c = series.coefficient(zero_I, tuple(J))
                row.append(c if i == j else c * half)
            row = tuple(ctx.coerce(x) for x in row)
            alpha.append(row)
        return cls(series=series, omega=omega, alpha=tuple(alpha))

    @property
    def n(self) -> int:
        return self.series.trunc.n

    def pairing(self, I):
        """The scalar product (omega, I) for an integer vector I."""
        out = self.series.context.zero
        for w, i in zip(self.omega, I):
            if i:
                out = out + w * i
        return out


def resonances(omega, N: int) -> list[tuple]:
    """All I with 0 < |I|_sup <= N and (omega, I) = 0, first nonzero entry > 0."""
    if N < 1:
        raise ValueError("lattice cutoff N must be >= 1")
    n = len(omega)
    found = []
    for I in product(range(-N, N + 1), repeat=n):
        nz = next((x for x in I if x != 0), 0)
        if nz <= 0:  # skip zero and keep one representative per +-I pair
            continue
        dot = None
        for w, i in zip(omega, I):
            if i:
                dot = w * i if dot is None else dot + w * i
        if dot is not None and exact_sign(dot) == 0:
            found.append(I)
    return sorted(found)


def _min_abs_update(best, value):
    """Track the minimum of |value| exactly via squared comparisons."""
    sq = value * value
    if best is None or exact_sign(sq - best) < 0:
        return sq
    return best


def homological_solve(H: IntegrableHamiltonian, R: PoissonSeries, p_cap: int):
    """Solve {H, S} + R = residual triangularly in ascending p-degree.

    S is supported on I != 0 with p-degree <= p_cap; the residual is what
    cannot or need not be killed: the averaged part of R plus terms of
    p-degree > p_cap.  The degree-m coefficient of S at q^I is obtained by
    dividing by (omega, I) after subtracting the contributions that lower
    degrees of S pick up through the nonlinear part of H.
    """
    H.series._check(R)
    trunc = R.trunc
    zero_I = (0,) * trunc.n
    pairings = {}

    def pairing_of(I):
        val = pairings.get(I)
        if val is None:
            val = H.pairing(I)
            if exact_sign(val) == 0:
                raise ResonantDenominator(I)
            pairings[I] = val
        return val

    S = R._like({})
    for m in range(0, p_cap + 1):
        defect = poisson_bracket(H.series, S) + R
        corr = {}
        for (I, J, k), c in defect.items():
            if I == zero_I or sum(J) != m:
                continue
            if not trunc.admits(I, J, k):
                raise TruncationExceeded(f"generator term {(I, J, k)} outside window")
            corr[(I, J, k)] = -(c / pairing_of(I))
        if corr:
            S = S + R._like(corr)
    residual = poisson_bracket(H.series, S) + R
    return S, residual


@dataclass
class NormalFormResult:
    """Output of a normal-form iteration.

    ``compose_flows(generators, input)`` reproduces ``normal`` exactly
    modulo truncation.  In Kolmogorov mode, normal = H + casimir +
    remainder with every remainder term of p-degree >= 2 and t-degree >= 1.
    """

    generators: list
    normal: PoissonSeries
    casimir: PoissonSeries
    remainder: PoissonSeries
    dropped_terms: int
    per_order: list = field(default_factory=list)
    smallest_denominator: CertifiedDecimal | None = None

    def to_json(self) -> dict:
        ctx = self.normal.context
        return {
            "generators": [g.to_json(ctx) for g in self.generators],
            "normal": self.normal.to_json(),
            "casimir": self.casimir.to_json(),
            "remainder": self.remainder.to_json(),
            "dropped_terms": self.dropped_terms,
            "per_order": self.per_order,
            "smallest_denominator": (
                None
                if self.smallest_denominator is None
                else self.smallest_denominator.to_json()
            ),
        }


def _with_t_factor(Q: PoissonSeries) -> PoissonSeries:
    t = PoissonSeries.monomial(Q.context, Q.trunc, Q.mode, 1, k=1)
    return t * Q


def _check_trunc_arg(series: PoissonSeries, trunc):
    if trunc is not None and trunc != series.trunc:
        raise ContextMismatch("explicit truncation disagrees with the series' window")


def formal_normal_form(H: IntegrableHamiltonian, Q: PoissonSeries, trunc=None) -> NormalFormResult:
    """Iteratively remove all q-dependence of H + tQ, one t-order at a time.

    Emits one Hamiltonian generator per order; fails with
    ResonantDenominator (carrying the vector and the t-order) when a
    resonant monomial is met.
    """
    H.series._check(Q)
    _check_trunc_arg(Q, trunc)
    trunc = Q.trunc
    zero_I = (0,) * trunc.n
    drops0 = drop_count()
    current = H.series + _with_t_factor(Q)
    generators = []
    per_order = []
    min_sq = None
    for m in range(1, trunc.Dt + 1):
        Rm = current.select(lambda I, J, k, m=m: k == m and I != zero_I)
        if Rm.is_zero():
            continue
        try:
            S, residual = homological_solve(H, Rm, p_cap=trunc.Dp)
        except ResonantDenominator as exc:
            raise ResonantDenominator(exc.vector, t_order=m) from None
        for I in Rm.support_I():
            min_sq = _min_abs_update(min_sq, H.pairing(I))
        gen = Generator.hamiltonian(S)
        current = flow_apply(gen, current)
        generators.append(gen)
        per_order.append({"t_order": m, "eliminated": len(Rm)})
    leftover = current.select(lambda I, J, k: I != zero_I)
    if not leftover.is_zero():  # cannot happen for nonresonant omega
        raise RuntimeError("normal form retains q-dependent terms")
    zero = current._like({})
    return NormalFormResult(
        generators=generators,
        normal=current,
        casimir=zero,
        remainder=zero,
        dropped_terms=drop_count() - drops0,
        per_order=per_order,
        smallest_denominator=None if min_sq is None else _cert_sqrt(min_sq),
    )


def _cert_sqrt(squared) -> CertifiedDecimal:
    from .scalar import certified_root

    return certified_root(squared, 2)


def exact_det(matrix) -> object:
    """Determinant over the scalar field by fraction-free expansion (small n)."""
    n = len(matrix)
    if n == 1:
        return matrix[0][0]
    out = None
    for j in range(n):
        c = matrix[0][j]
        if not c:
            continue
        minor = [
            [matrix[i][jj] for jj in range(n) if jj != j] for i in range(1, n)
        ]
        term = c * exact_det(minor)
        if j % 2:
            term = -term
        out = term if out is None else out + term
    if out is None:
        out = matrix[0][0] - matrix[0][0]  # typed zero
    return out


def solve_linear(matrix, rhs, ctx):
    """Exact Gaussian elimination for A x = rhs over the scalar field."""
    n = len(rhs)
    A = [list(row) + [rhs[i]] for i, row in enumerate(matrix)]
    for col in range(n):
        piv = next(
            (r for r in range(col, n) if exact_sign(A[r][col]) != 0), None
        )
        if piv is None:
            raise DegenerateAlpha("singular linear system")
        A[col], A[piv] = A[piv], A[col]
        pivval = A[col][col]
        A[col] = [x / pivval for x in A[col]]
        for r in range(n):
            if r != col and A[r][col]:
                f = A[r][col]
                A[r] = [x - f * y for x, y in zip(A[r], A[col])]
    return tuple(ctx.coerce(A[i][n]) for i in range(n))


def kolmogorov_normal_form(H: IntegrableHamiltonian, Q: PoissonSeries, trunc=None) -> NormalFormResult:
    """Truncated constructive Kolmogorov normal form: H + c(t) + I^2-remainder.

    Per t-order: the zero-average part of p-degree <= 1 is killed by a
    Hamiltonian generator (triangular in p-degree 0 then 1, the degree-1
    stage receiving the cross-terms from alpha), the averaged linear part
    b.p by a translation with d = -(2 alpha)^{-1} b, Casimir terms
    accumulate into c(t), and everything of p-degree >= 2 is left in the
    remainder.
    """
    H.series._check(Q)
    _check_trunc_arg(Q, trunc)
    trunc = Q.trunc
    n = trunc.n
    ctx = Q.context
    zero_I = (0,) * n
    two_alpha = tuple(tuple(x * 2 for x in row) for row in H.alpha)
    if exact_sign(exact_det(two_alpha)) == 0:
        raise DegenerateAlpha("quadratic part alpha is not invertible")
    drops0 = drop_count()
    current = H.series + _with_t_factor(Q)
    generators = []
    per_order = []
    min_sq = None
    unit_J = [tuple(1 if j == i else 0 for j in range(n)) for i in range(n)]
    for m in range(1, trunc.Dt + 1):
        Rm = current.select(
            lambda I, J, k, m=m: k == m and I != zero_I and sum(J) <= 1
        )
        eliminated = len(Rm)
        if not Rm.is_zero():
            try:
                S, _ = homological_solve(H, Rm, p_cap=1)
            except ResonantDenominator as exc:
                raise ResonantDenominator(exc.vector, t_order=m) from None
            for I in Rm.support_I():
                min_sq = _min_abs_update(min_sq, H.pairing(I))
            gen = Generator.hamiltonian(S)
            current = flow_apply(gen, current)
            generators.append(gen)
        b = [current.coefficient(zero_I, unit_J[i], m) for i in range(n)]
        if any(exact_sign(x) != 0 for x in b):
            d = solve_linear(two_alpha, [-x for x in b], ctx)
            gen = Generator.translation(m, d, ctx)
            current = flow_apply(gen, current)
            generators.append(gen)
            eliminated += sum(1 for x in b if exact_sign(x) != 0)
        per_order.append({"t_order": m, "eliminated": eliminated})
    normal = current
    zero_J = (0,) * n
    casimir = normal.select(lambda I, J, k: I == zero_I and J == zero_J and k >= 1)
    remainder = normal - H.series - casimir
    for (I, J, k), _ in remainder.items():  # cannot fail by construction
        if sum(J) < 2 or k < 1:
            raise RuntimeError(f"remainder term {(I, J, k)} outside I^2 (t)")
    return NormalFormResult(
        generators=generators,
        normal=normal,
        casimir=casimir,
        remainder=remainder,
        dropped_terms=drop_count() - drops0,
        per_order=per_order,
        smallest_denominator=None if min_sq is None else _cert_sqrt(min_sq),
    )


@dataclass(frozen=True)
class NormalSpaceClass:
    """Class of f in A / ({H, A} + I^2 + Casimirs), with decomposition witness.

    The certificate satisfies f = {H, g} + ideal_part + constant +
    sum_i nu_i basis_i exactly modulo truncation; ``basis`` names the
    class basis ("p" for the torus case, "pq" for the hyperbolic one).
    """

    nu: tuple
    g: PoissonSeries
    ideal_part: PoissonSeries
    constant: object
    basis: str = "p"


def _hyperbolic_class(H: PoissonSeries, f: PoissonSeries) -> NormalSpaceClass:
    if H.trunc.n != 1:
        raise ValueError("hyperbolic normal-space classes are one-dimensional")
    pq = PoissonSeries.monomial(H.context, H.trunc, H.mode, 1, I=(1,), J=(1,))
    if H != pq:
        raise ValueError("hyperbolic case expects H = p q")
    ctx = f.context
    nu = ctx.zero
    const = ctx.zero
    g_terms = {}
    ideal = {}
    for (I, J, k), c in f.items():
        if k != 0:
            raise ValueError("normal-space classes are computed for t-free elements")
        j, i = I[0], J[0]  # f term = c * p^i q^j
        if i == j == 0:
            const = const + c
        elif i == j == 1:
            nu = nu + c
        elif i == j:
            ideal[(I, J, k)] = c
        else:
            # {pq, p^i q^j} = (j - i) p^i q^j under this bracket convention
            g_terms[(I, J, k)] = c / (j - i)
    g = f._like(g_terms)
    return NormalSpaceClass(
        nu=(nu,), g=g, ideal_part=f._like(ideal), constant=const, basis="pq"
    )


def normal_space_class(H, f: PoissonSeries, trunc=None) -> NormalSpaceClass:
    """Decompose f = {H, g} + i + c + sum nu_i p_i exactly mod truncation.

    Torus mode needs nonresonant omega (checked on the support actually
    used); symplectic mode handles the hyperbolic pair H = pq, n = 1 and
    returns the coefficient of the class [pq].
    """
    if isinstance(H, PoissonSeries):
        if H.mode != "symplectic":
            raise ValueError("a raw series Hamiltonian is only used in symplectic mode")
        _check_trunc_arg(f, trunc)
        H._check(f)
        return _hyperbolic_class(H, f)
    H.series._check(f)
    _check_trunc_arg(f, trunc)
    n = f.trunc.n
    ctx = f.context
    zero_I = (0,) * n
    for (_, _, k), _c in f.items():
        if k != 0:
            raise ValueError("normal-space classes are computed for t-free elements")
    kill = f.select(lambda I, J, k: I != zero_I and sum(J) <= 1)
    g, residual = homological_solve(H, -kill, p_cap=1)
    spill = residual  # I != 0 terms of p-degree >= 2 created by the solve
    ideal = f.select(lambda I, J, k: sum(J) >= 2) - spill
    unit_J = [tuple(1 if j == i else 0 for j in range(n)) for i in range(n)]
    nu = tuple(ctx.coerce(f.coefficient(zero_I, unit_J[i])) for i in range(n))
    const = f.coefficient(zero_I)
    return NormalSpaceClass(nu=nu, g=g, ideal_part=ideal, constant=const, basis="p")
