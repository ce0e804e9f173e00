from fractions import Fraction
from itertools import product

import numpy as np
import pytest

from kamforge.diophantine import (
    FourierTable,
    FrequencyVector,
    decay_fit,
    hadamard_apply,
    kolmogorov_constant,
    liouville_witness,
    measure_estimate,
    small_denominator_series,
)
from kamforge.errors import InsufficientSupport, ResonantDenominator
from kamforge.scalar import RATIONAL, continued_fraction, convergents, exact_sign, quadratic

CTX2 = quadratic(2)
OMEGA_SQRT2 = FrequencyVector((CTX2.one, CTX2.sqrt_d()), CTX2)


def test_kolmogorov_constant_resonant():
    om = FrequencyVector((Fraction(1), Fraction(1)), RATIONAL)
    est = kolmogorov_constant(om, 1, 2)
    assert est.c_est.value == 0.0
    assert est.worst == (1, -1)


def test_kolmogorov_constant_sqrt2():
    est = kolmogorov_constant(OMEGA_SQRT2, 1, 100)
    assert est.c_est.value > 0
    # exact value at the worst vector (1,-1): |1-sqrt2| * 2 = 2(sqrt2-1)
    assert abs(est.c_est.value - 2 * (2**0.5 - 1)) < 1e-10
    assert est.worst == (1, -1)


def test_kolmogorov_constant_monotone_in_N():
    prev = None
    for N in (5, 10, 40, 160):
        est = kolmogorov_constant(OMEGA_SQRT2, 1, N)
        if prev is not None:
            assert exact_sign(est.min_power - prev) <= 0
        prev = est.min_power


def test_pruned_scan_matches_brute_force():
    # the n=2 fast path must agree with full exact enumeration
    for omega, nu in [
        (OMEGA_SQRT2, 1),
        (FrequencyVector((CTX2.sqrt_d(), -2), CTX2), 1),
        (FrequencyVector((Fraction(3, 7), Fraction(22, 9)), RATIONAL), Fraction(1, 2)),
    ]:
        N = 25
        s = Fraction(1 + Fraction(nu))
        p_, q_ = s.numerator, s.denominator
        best, worst = None, None
        for I in product(range(-N, N + 1), repeat=2):
            nz = next((x for x in I if x), 0)
            if nz <= 0:
                continue
            dot = omega.dot(I)
            if exact_sign(dot) == 0:
                continue
            key = (dot * dot) ** q_ * Fraction(sum(x * x for x in I)) ** p_
            if best is None or exact_sign(key - best) < 0:
                best, worst = key, I
        est = kolmogorov_constant(omega, nu, N)
        assert exact_sign(est.min_power - best) == 0
        assert est.worst == worst


def test_worst_vectors_are_convergents():
    cf = continued_fraction(CTX2.sqrt_d(), 20)
    pairs = set(convergents(cf))
    for N in (10, 100, 1000):
        est = kolmogorov_constant(OMEGA_SQRT2, 1, N)
        p, q = abs(est.worst[0]), abs(est.worst[1])
        assert (p, q) in pairs


def test_liouville_witness_values():
    w1 = liouville_witness(1, 1, 4)
    # |(omega, beta_1)| = 10 (10^-2 + 10^-6 + 10^-24), exactly
    expected = 10 * (Fraction(1, 10**2) + Fraction(1, 10**6) + Fraction(1, 10**24))
    assert w1.pairing_exact == expected
    w2 = liouville_witness(2, 1, 4)
    # leading order 10^2 * 10^-6 = 10^-4
    assert abs(w2.pairing.value - 1e-4) < 1e-8
    assert w2.pairing_exact == 100 * Fraction(1, 10**6) + 100 * Fraction(1, 10**24)


def test_liouville_products_decrease():
    ws = [liouville_witness(k, 1, 4) for k in (1, 2, 3)]
    powers = [w.product_power() for w in ws]
    assert powers[0] > powers[1] > powers[2]


def test_liouville_validation():
    with pytest.raises(ValueError):
        liouville_witness(0, 1, 4)
    with pytest.raises(ValueError):
        liouville_witness(3, 1, 3)


def test_small_denominator_series():
    table = small_denominator_series(OMEGA_SQRT2, 5)
    assert abs(table.coefficients[(1, -1)] - (1 + 2**0.5)) < 1e-12
    assert abs(table.coefficients[(0, 1)] - 1 / 2**0.5) < 1e-12
    assert (0, 0) not in table.coefficients
    with pytest.raises(ResonantDenominator) as exc:
        small_denominator_series(FrequencyVector((Fraction(1), Fraction(2)), RATIONAL), 3)
    assert exc.value.vector == (2, -1)


def _ball(N):
    return [I for I in product(range(-N, N + 1), repeat=2) if I != (0, 0)]


def test_hadamard_examples():
    # (2q + 3q^2) * (5q + 7q^3) = 10 q
    a = FourierTable({(1, 0): 2.0, (2, 0): 3.0})
    b = FourierTable({(1, 0): 5.0, (3, 0): 7.0})
    assert hadamard_apply(a, b).coefficients == {(1, 0): 10.0}
    f = FourierTable({I: float(np.exp(-np.hypot(*I))) for I in _ball(6)})
    ones = FourierTable({I: 1.0 for I in f.coefficients})
    assert hadamard_apply(ones, f).coefficients == f.coefficients
    # commutative and associative on finite tables
    h = small_denominator_series(OMEGA_SQRT2, 6)
    ab = hadamard_apply(h, f)
    assert ab.coefficients == hadamard_apply(f, h).coefficients
    c = FourierTable({I: 0.5 for I in f.coefficients})
    left = hadamard_apply(hadamard_apply(h, f), c).coefficients
    right = hadamard_apply(h, hadamard_apply(f, c)).coefficients
    assert left == pytest.approx(right)


def test_hadamard_preserves_decay():
    h = small_denominator_series(OMEGA_SQRT2, 12)
    f = FourierTable({I: float(np.exp(-2 * np.hypot(*I))) for I in h.coefficients})
    prod = hadamard_apply(h, f)
    assert decay_fit(prod).slope < -1.0  # still exponentially decaying


def test_decay_fit_examples():
    pts = _ball(20)
    exp2 = FourierTable({I: float(np.exp(-2 * np.hypot(*I))) for I in pts})
    fit = decay_fit(exp2)
    assert abs(fit.slope + 2.0) < 1e-6 and fit.residual < 1e-9
    grow = FourierTable({I: float(np.exp(+np.hypot(*I))) for I in pts})
    assert abs(decay_fit(grow).slope - 1.0) < 1e-6
    poly = FourierTable({I: float(np.hypot(*I) ** 3) for I in pts})
    fit20 = decay_fit(poly)
    poly50 = FourierTable(
        {I: float(np.hypot(*I) ** 3) for I in _ball(50)}
    )
    fit50 = decay_fit(poly50)
    assert abs(fit50.slope) < abs(fit20.slope)  # slope -> 0 as N grows
    with pytest.raises(InsufficientSupport):
        decay_fit(FourierTable({(1, 0): 1.0, (0, 1): 2.0}))


def test_measure_estimate_reproducible_and_limits():
    kw = dict(n=2, R=1.0, nu=1, N=20, samples=4000, seed=11)
    e1 = measure_estimate(C=0.05, **kw)
    e2 = measure_estimate(C=0.05, **kw)
    assert e1 == e2
    assert measure_estimate(C=1e-12, **kw).fraction_bad == 0.0
    assert measure_estimate(C=100.0, **kw).fraction_bad == 1.0
    # same samples: badness is monotone in C
    fr = [measure_estimate(C=c, **kw).fraction_bad for c in (0.02, 0.05, 0.1)]
    assert fr[0] <= fr[1] <= fr[2]


def test_measure_estimate_partitions_recorded():
    est = measure_estimate(n=2, R=1.0, C=0.05, nu=1, N=10, samples=1000, seed=3, partitions=4)
    assert est.partitions == 4
    est2 = measure_estimate(n=2, R=1.0, C=0.05, nu=1, N=10, samples=1000, seed=3, partitions=4)
    assert est == est2
