import math
from fractions import Fraction
from math import comb, factorial

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qrefine.errors import DomainError
from qrefine.stats import (
    binomial_test,
    chi_square_2x2,
    chi_square_p,
    cohen_kappa,
    fisher_exact_2x2,
)

REL = 1e-9


# --- independent oracles ------------------------------------------------------


def binomial_oracle(successes, trials, p0, one_sided):
    p = Fraction(p0)
    probs = [comb(trials, i) * p**i * (1 - p) ** (trials - i) for i in range(trials + 1)]
    if one_sided:
        return float(sum(probs[successes:]))
    observed = probs[successes]
    return float(min(Fraction(1), sum(pr for pr in probs if pr <= observed)))


def fisher_oracle(a, b, c, d):
    # Factorial-form hypergeometric pmf, a different route than comb weights.
    r1, r2, c1, c2 = a + b, c + d, a + c, b + d
    n = r1 + r2
    if n == 0:
        return 1.0
    lo, hi = max(0, c1 - r2), min(r1, c1)

    def pmf(x):
        return Fraction(
            factorial(r1) * factorial(r2) * factorial(c1) * factorial(c2),
            factorial(n) * factorial(x) * factorial(r1 - x)
            * factorial(c1 - x) * factorial(r2 - c1 + x),
        )

    observed = pmf(a)
    return float(sum(pmf(x) for x in range(lo, hi + 1) if pmf(x) <= observed))


def kappa_oracle(a, b):
    n = len(a)
    p_o = Fraction(sum(x == y for x, y in zip(a, b)), n)
    classes = set(a) | set(b)
    p_e = sum(
        Fraction(sum(x == cls for x in a), n) * Fraction(sum(y == cls for y in b), n)
        for cls in classes
    )
    if p_e == 1:
        return 1.0
    return float((p_o - p_e) / (1 - p_e))


# --- binomial -----------------------------------------------------------------


def test_binomial_all_successes():
    assert binomial_test(10, 10, one_sided=True) == pytest.approx(2**-10, rel=REL)


def test_binomial_zero_successes_upper_tail():
    assert binomial_test(0, 10, one_sided=True) == 1.0


def test_binomial_seven_of_ten():
    assert binomial_test(7, 10, one_sided=True) == pytest.approx(0.171875, rel=REL)


def test_binomial_two_sided_symmetric():
    # p0 = 0.5: two-sided doubles the smaller tail when the pmf is symmetric.
    assert binomial_test(8, 10, one_sided=False) == pytest.approx(
        2 * binomial_test(8, 10, one_sided=True), rel=REL
    )


def test_binomial_domain_errors():
    with pytest.raises(DomainError):
        binomial_test(11, 10)
    with pytest.raises(DomainError):
        binomial_test(2, 10, p0=1.5)


@settings(max_examples=120, deadline=None)
@given(
    st.integers(0, 40),
    st.integers(0, 40),
    st.sampled_from([0.5, 0.3, 0.75]),
    st.booleans(),
)
def test_binomial_matches_oracle(successes, trials, p0, one_sided):
    if successes > trials:
        successes, trials = trials, successes
    got = binomial_test(successes, trials, p0=p0, one_sided=one_sided)
    want = binomial_oracle(successes, trials, p0, one_sided)
    assert got == pytest.approx(want, rel=REL, abs=1e-300)


def test_binomial_scipy_cross_check():
    scipy_stats = pytest.importorskip("scipy.stats")
    for successes, trials, p0 in [(7, 10, 0.5), (3, 17, 0.3), (12, 40, 0.5)]:
        mine = binomial_test(successes, trials, p0=p0, one_sided=True)
        ref = scipy_stats.binomtest(successes, trials, p=p0, alternative="greater")
        assert mine == pytest.approx(ref.pvalue, rel=1e-9)


# --- fisher --------------------------------------------------------------------


def test_fisher_named_fixture_34_70():
    assert fisher_exact_2x2([[3, 1], [1, 3]]) == pytest.approx(34 / 70, rel=REL)


def test_fisher_perfect_split():
    assert fisher_exact_2x2([[5, 0], [0, 5]]) == pytest.approx(2 / 252, rel=REL)


def test_fisher_zero_margin_single_table():
    assert fisher_exact_2x2([[0, 0], [3, 4]]) == 1.0
    assert fisher_exact_2x2([[2, 0], [3, 0]]) == 1.0


def test_fisher_domain_error():
    with pytest.raises(DomainError):
        fisher_exact_2x2([[-1, 2], [3, 4]])
    with pytest.raises(DomainError):
        fisher_exact_2x2([[1, 2, 3], [4, 5, 6]])


@settings(max_examples=150, deadline=None)
@given(st.integers(0, 12), st.integers(0, 12), st.integers(0, 12), st.integers(0, 12))
def test_fisher_matches_oracle(a, b, c, d):
    got = fisher_exact_2x2([[a, b], [c, d]])
    assert got == pytest.approx(fisher_oracle(a, b, c, d), rel=REL)


def test_fisher_scipy_cross_check():
    scipy_stats = pytest.importorskip("scipy.stats")
    for table in [[[3, 1], [1, 3]], [[5, 0], [0, 5]], [[8, 2], [1, 5]]]:
        mine = fisher_exact_2x2(table)
        _, ref = scipy_stats.fisher_exact(table)
        assert mine == pytest.approx(ref, rel=1e-7)


# --- chi-square ----------------------------------------------------------------


def test_chi_square_named_fixture():
    stat, p = chi_square_2x2([[20, 30], [30, 20]])
    assert stat == pytest.approx(4.0, rel=REL)
    assert p == pytest.approx(0.0455, abs=1e-3)


def test_chi_square_zero_margin_rejected():
    with pytest.raises(DomainError):
        chi_square_2x2([[0, 0], [3, 4]])


def test_chi_square_continuity_option():
    stat, _ = chi_square_2x2([[20, 30], [30, 20]], continuity=True)
    # |O-E| = 5 shrinks to 4.5: 4 * 4.5^2 / 25 = 3.24
    assert stat == pytest.approx(3.24, rel=REL)


def test_chi_square_tail_against_mpmath():
    mpmath = pytest.importorskip("mpmath")
    mpmath.mp.dps = 30
    for stat in [0.01, 0.5, 1.0, 2.0, 4.0, 10.0, 25.0, 40.0]:
        want = float(mpmath.gammainc(mpmath.mpf(1) / 2, mpmath.mpf(stat) / 2, mpmath.inf,
                                     regularized=True))
        assert chi_square_p(stat) == pytest.approx(want, rel=1e-9)


def test_chi_square_independence_sanity():
    stat, p = chi_square_2x2([[10, 10], [10, 10]])
    assert stat == 0.0 and p == 1.0


# --- kappa ----------------------------------------------------------------------


def test_kappa_perfect_agreement():
    assert cohen_kappa([1, 0, 1, 2], [1, 0, 1, 2]) == 1.0


def test_kappa_single_shared_class_degenerate():
    assert cohen_kappa([1, 1, 1], [1, 1, 1]) == 1.0


def test_kappa_independent_labels_tend_to_zero():
    from qrefine.rng import SplitMix64

    gen = SplitMix64(12345)
    a = [gen.randrange(2) for _ in range(20000)]
    b = [gen.randrange(2) for _ in range(20000)]
    assert abs(cohen_kappa(a, b)) < 0.03


def test_kappa_hand_computed_fixture():
    # a = [1,1,0,0,1], b = [1,0,0,0,1]: p_o = 0.8; marginals 3/5 & 2/5 vs 2/5 & 3/5
    # give p_e = 0.48, so kappa = 0.32 / 0.52 = 8/13.
    assert cohen_kappa([1, 1, 0, 0, 1], [1, 0, 0, 0, 1]) == pytest.approx(8 / 13, abs=1e-12)


def test_kappa_realizes_po_08_pe_052():
    # Both raters mark six of ten positive, disagreeing on two items:
    # p_o = 0.8, p_e = 0.52, kappa = 0.28/0.48 = 7/12 = 0.5833...
    a = [1, 1, 1, 1, 1, 1, 0, 0, 0, 0]
    b = [1, 1, 1, 1, 1, 0, 1, 0, 0, 0]
    assert cohen_kappa(a, b) == pytest.approx(7 / 12, abs=1e-12)


def test_kappa_length_mismatch():
    with pytest.raises(DomainError):
        cohen_kappa([1, 2], [1])
    with pytest.raises(DomainError):
        cohen_kappa([], [])


@settings(max_examples=150, deadline=None)
@given(st.lists(st.integers(0, 2), min_size=1, max_size=40), st.data())
def test_kappa_matches_oracle(a, data):
    b = data.draw(st.lists(st.integers(0, 2), min_size=len(a), max_size=len(a)))
    assert cohen_kappa(a, b) == pytest.approx(kappa_oracle(a, b), rel=REL, abs=1e-12)


def test_kappa_scipy_cross_check():
    sklearn_metrics = pytest.importorskip("sklearn.metrics")
    a = [0, 1, 1, 0, 2, 1, 0, 2, 2, 1]
    b = [0, 1, 0, 0, 2, 1, 1, 2, 0, 1]
    assert cohen_kappa(a, b) == pytest.approx(
        sklearn_metrics.cohen_kappa_score(a, b), rel=1e-9
    )
