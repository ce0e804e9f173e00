"""Small-denominator analysis.

Exact minimization of |(omega, I)| * |I|^(n-1+nu) over lattice balls,
the Liouville-type counterexample with exact partial sums, the
small-denominator Fourier table and its Hadamard calculus with decay
classification, and a seeded Monte-Carlo check of the measure bound
Vol(B_R \\ Omega(C, nu)) <= k * C.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import product

import numpy as np

from .errors import InsufficientSupport, ResonantDenominator
from .scalar import (
    CertifiedDecimal,
    ScalarContext,
    certified_root,
    exact_floor,
    exact_sign,
)

__all__ = [
    "FrequencyVector",
    "DiophantineEstimate",
    "FourierTable",
    "LiouvilleWitness",
    "DecayFit",
    "MeasureEstimate",
    "kolmogorov_constant",
    "liouville_witness",
    "small_denominator_series",
    "hadamard_apply",
    "decay_fit",
    "measure_estimate",
]


@dataclass(frozen=True)
class FrequencyVector:
    entries: tuple
    context: ScalarContext

    def __post_init__(self):
        object.__setattr__(
            self, "entries", tuple(self.context.coerce(x) for x in self.entries)
        )

    @property
    def n(self) -> int:
        return len(self.entries)

    def dot(self, I):
        out = self.context.zero
        for w, i in zip(self.entries, I):
            if i:
                out = out + w * i
        return out


def _normalize(I):
    for x in I:
        if x > 0:
            return tuple(I)
        if x < 0:
            return tuple(-y for y in I)
    return tuple(I)


@dataclass(frozen=True)
class DiophantineEstimate:
    """Certified lower bound for |(omega, I)| * |I|^(n-1+nu) over a lattice ball.

    ``min_power`` holds the exact value of C_est**power, which is what
    cross-cutoff monotonicity comparisons use; ``c_est`` is its certified
    real root.  The norm in the quantity is Euclidean, the ball is sup-norm.
    """

    c_est: CertifiedDecimal
    nu: Fraction
    N: int
    worst: tuple
    min_power: object
    power: int
    norm_kind: str = "euclidean"

    def to_json(self) -> dict:
        return {
            "C_est": self.c_est.to_json(),
            "nu": str(self.nu),
            "N": self.N,
            "worst": list(self.worst),
            "norm_kind": self.norm_kind,
        }


def _power_key(dot, nrm2: int, p: int, q: int):
    """Exact value of (|(omega,I)| * |I|^s)**(2q) for s = p/q."""
    return (dot * dot) ** q * Fraction(nrm2) ** p


def kolmogorov_constant(omega: FrequencyVector, nu, N: int) -> DiophantineEstimate:
    """Exact minimization of |(omega, I)| * |I|^(n-1+nu) over 0 < |I|_sup <= N.

    All comparisons happen on the (2q)-th power of the quantity (s = p/q),
    so they are exact rational / quadratic-field sign tests.  For n = 2 a
    pruned sweep over the second coordinate brings the cost down to O(N);
    other dimensions enumerate the full ball.
    """
    if N < 1:
        raise ValueError("lattice cutoff N must be >= 1")
    n = omega.n
    nu = Fraction(nu)
    s = n - 1 + nu
    p_, q_ = s.numerator, s.denominator
    power = 2 * q_

    best = {"key": None, "worst": None}

    def consider(I) -> bool:
        """Returns True when a resonance ends the search."""
        dot = omega.dot(I)
        if exact_sign(dot) == 0:
            best["key"] = Fraction(0)
            best["worst"] = _normalize(I)
            return True
        key = _power_key(dot, sum(x * x for x in I), p_, q_)
        if best["key"] is None or exact_sign(key - best["key"]) < 0:
            best["key"] = key
            best["worst"] = _normalize(I)
        return False

    resonant = False
    if n == 2 and s >= 0 and omega.context.mode in ("rational", "quadratic"):
        resonant = _scan_dim2(omega, N, p_, q_, consider, best)
    else:
        for I in product(range(-N, N + 1), repeat=n):
            nz = next((x for x in I if x != 0), 0)
            if nz <= 0:
                continue
            if consider(I):
                resonant = True
                break
    c_est = (
        CertifiedDecimal(0.0, 0.0)
        if resonant
        else certified_root(best["key"], power)
    )
    return DiophantineEstimate(
        c_est=c_est,
        nu=nu,
        N=N,
        worst=best["worst"],
        min_power=best["key"],
        power=power,
    )


def _scan_dim2(omega, N, p_, q_, consider, best) -> bool:
    """Pruned exact sweep for n = 2.

    For fixed I2, any integer I1 at distance >= r from the real minimizer
    of |(omega, I)| satisfies
        quantity >= |omega_1| * r * |I2|^s,
    so only a short interval of candidates around the minimizer can beat
    the current best.
    """
    w1, w2 = omega.entries
    if exact_sign(w1) == 0:
        return consider((1, 0))
    if consider((1, 0)) or consider((0, 1)):
        return True
    w1sq_q = (w1 * w1) ** q_
    for b in range(1, N + 1):
        for I2 in (b, -b):
            xstar = -(w2 * I2) / w1
            c0 = exact_floor(xstar)
            r = 1
            lo, hi = c0, c0 + 1
            while r <= 2 * N:
                bound = w1sq_q * Fraction(r) ** (2 * q_) * Fraction(I2 * I2) ** p_
                if exact_sign(bound - best["key"]) >= 0:
                    break
                lo, hi = c0 - r, c0 + r + 1
                r += 1
            for I1 in range(max(lo, -N), min(hi, N) + 1):
                if I1 == 0 and I2 == 0:
                    continue
                if consider((I1, I2)):
                    return True
    return False


@dataclass(frozen=True)
class LiouvilleWitness:
    """Exact data for the fast-approximation vector beta_k against (1, alpha).

    ``pairing_exact`` is |(omega, beta_k)| for the exact partial sum
    alpha_m; the true alpha differs by at most ``tail_bound`` after the
    pairing, turning every derived quantity into a rigorous interval.
    """

    k: int
    nu: Fraction
    m: int
    beta: tuple
    pairing_exact: Fraction
    tail_bound: Fraction
    norm_sq: int
    pairing: CertifiedDecimal
    product: CertifiedDecimal

    def product_power(self) -> Fraction:
        """Exact (pairing * |beta|^(1+nu))**(2 dq) with 1 + nu = dp/dq."""
        e = 1 + self.nu
        return self.pairing_exact ** (2 * e.denominator) * Fraction(
            self.norm_sq
        ) ** e.numerator

    def to_json(self) -> dict:
        return {
            "k": self.k,
            "beta": list(self.beta),
            "pairing": self.pairing.to_json(),
            "product": self.product.to_json(),
            "tail_bound": float(self.tail_bound),
        }


def liouville_witness(k: int, nu, m: int) -> LiouvilleWitness:
    """Build omega = (1, alpha_m) with alpha_m = sum_{j<=m} 10^(-j!) and pair it
    with beta_k oriented so the pairing equals the tail 10^(k!) sum_{j>k} 10^(-j!)."""
    if k < 1:
        raise ValueError("index k must be >= 1")
    if m <= k:
        raise ValueError("tail order m must exceed k")
    from math import factorial

    alpha = sum(Fraction(1, 10 ** factorial(j)) for j in range(m + 1))
    first = sum(10 ** (factorial(k) - factorial(j)) for j in range(k + 1))
    beta = (first, -(10 ** factorial(k)))
    pairing = first - alpha * 10 ** factorial(k)
    pairing = abs(pairing)
    tail = 2 * Fraction(1, 10 ** factorial(m + 1)) * 10 ** factorial(k)
    norm_sq = beta[0] * beta[0] + beta[1] * beta[1]
    nu = Fraction(nu)
    e = 1 + nu
    prod_pow = pairing ** (2 * e.denominator) * Fraction(norm_sq) ** e.numerator
    return LiouvilleWitness(
        k=k,
        nu=nu,
        m=m,
        beta=beta,
        pairing_exact=pairing,
        tail_bound=tail,
        norm_sq=norm_sq,
        pairing=CertifiedDecimal.from_exact(pairing),
        product=certified_root(prod_pow, 2 * e.denominator),
    )


@dataclass(frozen=True)
class FourierTable:
    """Finite table of nonnegative Fourier-coefficient magnitudes |a_I|."""

    coefficients: dict
    source: str = ""

    def __post_init__(self):
        for I, v in self.coefficients.items():
            if v < 0:
                raise ValueError(f"negative magnitude at {I}")

    def to_json(self) -> dict:
        return {
            "source": self.source,
            "coefficients": [
                [list(I), v] for I, v in sorted(self.coefficients.items())
            ],
        }


def small_denominator_series(omega: FrequencyVector, N: int) -> FourierTable:
    """The table |(omega, I)|^{-1} for 0 < |I|_sup <= N (all signs kept)."""
    if N < 1:
        raise ValueError("lattice cutoff N must be >= 1")
    coeffs = {}
    for I in product(range(-N, N + 1), repeat=omega.n):
        if all(x == 0 for x in I):
            continue
        dot = omega.dot(I)
        if exact_sign(dot) == 0:
            raise ResonantDenominator(_normalize(I))
        inv = 1 / (dot * dot)
        coeffs[I] = certified_root(inv, 2).value
    return FourierTable(coeffs, source=f"small-denominators N={N}")


def hadamard_apply(h: FourierTable, f: FourierTable) -> FourierTable:
    """Coefficient-wise (convolution) product on the common support."""
    coeffs = {
        I: h.coefficients[I] * f.coefficients[I]
        for I in h.coefficients.keys() & f.coefficients.keys()
    }
    return FourierTable(coeffs, source=f"({h.source}) * ({f.source})")


@dataclass(frozen=True)
class DecayFit:
    slope: float
    intercept: float
    residual: float

    def to_json(self) -> dict:
        return {"slope": self.slope, "intercept": self.intercept, "residual": self.residual}


def decay_fit(f: FourierTable) -> DecayFit:
    """Least-squares fit of log|a_I| against the Euclidean |I|.

    A clearly negative slope with small residual indicates exponential
    decay (the holomorphic Fourier class at finite scale); slope >= 0 is
    consistent with the sub-exponential obstruction bound.
    """
    pts = [(I, v) for I, v in f.coefficients.items() if v > 0]
    if len(pts) < 3:
        raise InsufficientSupport("decay_fit needs at least 3 nonzero magnitudes")
    r = np.array([np.sqrt(sum(x * x for x in I)) for I, _ in pts])
    y = np.log(np.array([v for _, v in pts]))
    A = np.stack([r, np.ones_like(r)], axis=1)
    coef, _, _, _ = np.linalg.lstsq(A, y, rcond=None)
    resid = y - A @ coef
    return DecayFit(
        slope=float(coef[0]),
        intercept=float(coef[1]),
        residual=float(np.sqrt(np.mean(resid**2))),
    )


@dataclass(frozen=True)
class MeasureEstimate:
    fraction_bad: float
    stderr: float
    samples: int
    seed: int
    partitions: int
    min_margin: float
    exact_rechecks: int

    def to_json(self) -> dict:
        return {
            "fraction_bad": self.fraction_bad,
            "stderr": self.stderr,
            "samples": self.samples,
            "seed": self.seed,
            "partitions": self.partitions,
            "min_margin": self.min_margin,
            "exact_rechecks": self.exact_rechecks,
        }


def _half_lattice(n: int, N: int) -> np.ndarray:
    vecs = [
        I
        for I in product(range(-N, N + 1), repeat=n)
        if next((x for x in I if x != 0), 0) > 0
    ]
    return np.array(vecs, dtype=float)


def _exact_bad(sample, C, s: Fraction, lattice) -> bool:
    """Exact re-test of a borderline sample, on its rounded coordinates."""
    w = [Fraction(x) for x in sample]
    Csq = Fraction(C) ** (2 * s.denominator)
    for I in lattice:
        dot = sum(wi * int(i) for wi, i in zip(w, I))
        nrm2 = Fraction(int(sum(i * i for i in I)))
        if (dot * dot) ** s.denominator * nrm2**s.numerator < Csq:
            return True
    return False


def measure_estimate(
    n: int,
    R: float,
    C: float,
    nu,
    N: int,
    samples: int,
    seed: int,
    partitions: int = 1,
) -> MeasureEstimate:
    """Monte-Carlo estimate of the bad-frequency fraction in the ball B_R.

    A sample omega is bad when some 0 < |I|_sup <= N violates
    |(omega, I)| >= C / |I|^(n-1+nu).  Sampling is seeded rejection from
    the bounding cube, so results are bit-for-bit reproducible for a fixed
    (seed, partitions); samples whose decision margin falls below 1e-12
    are re-tested in exact rational arithmetic.
    """
    if samples < 1:
        raise ValueError("need at least one sample")
    if partitions < 1:
        raise ValueError("partitions must be >= 1")
    nu = Fraction(nu)
    s = n - 1 + nu
    lattice = _half_lattice(n, N)
    norms = np.sqrt((lattice**2).sum(axis=1))
    thresh = C / norms ** float(s)

    counts = [samples // partitions] * partitions
    counts[0] += samples - sum(counts)
    n_bad = 0
    min_margin = np.inf
    rechecks = 0
    int_lattice = None
    for part, count in enumerate(counts):
        rng = np.random.default_rng(seed if partitions == 1 else [seed, part])
        pts = np.empty((0, n))
        while len(pts) < count:
            cand = rng.uniform(-R, R, size=(max(count, 1024), n))
            cand = cand[(cand**2).sum(axis=1) <= R * R]
            pts = np.vstack([pts, cand])
        pts = pts[:count]
        batch = max(1, min(count, 10_000_000 // max(1, len(lattice))))
        for lo in range(0, count, batch):
            chunk = pts[lo : lo + batch]
            margins = (np.abs(chunk @ lattice.T) - thresh).min(axis=1)
            n_bad += int((margins < 0).sum())
            m = float(np.abs(margins).min()) if len(margins) else np.inf
            min_margin = min(min_margin, m)
            narrow = np.nonzero(np.abs(margins) < 1e-12)[0]
            for idx in narrow:
                rechecks += 1
                if int_lattice is None:
                    int_lattice = [tuple(map(int, v)) for v in lattice]
                exact = _exact_bad(chunk[idx], C, s, int_lattice)
                if exact != bool(margins[idx] < 0):
                    n_bad += 1 if exact else -1
    frac = n_bad / samples
    stderr = float(np.sqrt(frac * (1.0 - frac) / samples))
    return MeasureEstimate(
        fraction_bad=frac,
        stderr=stderr,
        samples=samples,
        seed=seed,
        partitions=partitions,
        min_margin=float(min_margin),
        exact_rechecks=rechecks,
    )
