"""Exact statistical tests used by the evaluation tooling.

Binomial and Fisher p-values are exact rational tail sums (no normal
approximations); the chi-square tail for one degree of freedom goes through
the complementary error function, p = erfc(sqrt(x / 2)).
"""

from __future__ import annotations

import math
from fractions import Fraction
from typing import Sequence

from .errors import DomainError

Table2x2 = Sequence[Sequence[int]]


def _check_table(table: Table2x2) -> tuple[int, int, int, int]:
    if len(table) != 2 or any(len(row) != 2 for row in table):
        raise DomainError("expected a 2x2 table")
    a, b = table[0]
    c, d = table[1]
    cells = (a, b, c, d)
    if any(x < 0 for x in cells) or any(int(x) != x for x in cells):
        raise DomainError("table cells must be non-negative integers")
    return int(a), int(b), int(c), int(d)


def binomial_test(successes: int, trials: int, p0: float = 0.5, one_sided: bool = True) -> float:
    """Exact binomial tail p-value.

    One-sided tests the upper tail P(X >= successes). Two-sided sums the
    probability of every outcome no more likely than the observed one;
    comparisons are exact because the pmf is evaluated in rational arithmetic.
    """
    if trials < 0 or successes < 0 or successes > trials:
        raise DomainError(f"invalid counts: {successes} of {trials}")
    if not 0 <= p0 <= 1:
        raise DomainError(f"p0 must be within [0, 1], got {p0}")
    p = Fraction(p0)
    q = 1 - p

    def pmf(i: int) -> Fraction:
        return math.comb(trials, i) * p**i * q ** (trials - i)

    if one_sided:
        return float(sum(pmf(i) for i in range(successes, trials + 1)))
    observed = pmf(successes)
    return float(min(1, sum(pr for i in range(trials + 1) if (pr := pmf(i)) <= observed)))


def fisher_exact_2x2(table: Table2x2) -> float:
    """Two-sided Fisher exact p-value by full hypergeometric enumeration.

    With margins fixed, every table is weighted C(r1, a) * C(r2, c1 - a); the
    p-value sums the weights of all tables no more probable than the observed
    one, divided by C(N, c1). Integer weights make the comparison exact.
    """
    a, b, c, d = _check_table(table)
    r1, r2 = a + b, c + d
    c1 = a + c
    total = r1 + r2
    if total == 0:
        return 1.0
    lo = max(0, c1 - r2)
    hi = min(r1, c1)
    weights = {x: math.comb(r1, x) * math.comb(r2, c1 - x) for x in range(lo, hi + 1)}
    observed = weights[a]
    numer = sum(w for w in weights.values() if w <= observed)
    return float(min(Fraction(1), Fraction(numer, math.comb(total, c1))))


def chi_square_2x2(table: Table2x2, continuity: bool = False) -> tuple[float, float]:
    """Pearson chi-square statistic and p-value for a 2x2 table, one dof.

    No continuity correction by default. Requires all row and column margins
    positive; otherwise expected counts are undefined.
    """
    a, b, c, d = _check_table(table)
    r1, r2 = a + b, c + d
    c1, c2 = a + c, b + d
    total = r1 + r2
    if min(r1, r2, c1, c2) == 0:
        raise DomainError("chi-square undefined for a zero margin")
    stat = 0.0
    for observed, row, col in ((a, r1, c1), (b, r1, c2), (c, r2, c1), (d, r2, c2)):
        expected = row * col / total
        delta = abs(observed - expected)
        if continuity:
            delta = max(delta - 0.5, 0.0)
        stat += delta * delta / expected
    return stat, chi_square_p(stat)


def chi_square_p(stat: float) -> float:
    """Upper-tail probability of chi-square with one degree of freedom."""
    if stat < 0:
        raise DomainError("chi-square statistic must be non-negative")
    return math.erfc(math.sqrt(stat / 2.0))


def cohen_kappa(labels_a: Sequence, labels_b: Sequence) -> float:
    """Cohen's kappa: (p_o - p_e) / (1 - p_e) over two raters' label sequences.

    Expected agreement p_e uses each rater's own marginal distribution.
    Returns 1.0 in the degenerate p_e = 1 case, which forces p_o = 1.
    """
    if len(labels_a) != len(labels_b):
        raise DomainError(
            f"label sequences differ in length: {len(labels_a)} vs {len(labels_b)}"
        )
    n = len(labels_a)
    if n == 0:
        raise DomainError("empty label sequences")
    p_o = Fraction(sum(1 for x, y in zip(labels_a, labels_b) if x == y), n)
    classes = set(labels_a) | set(labels_b)
    p_e = sum(
        Fraction(sum(1 for x in labels_a if x == cls), n)
        * Fraction(sum(1 for y in labels_b if y == cls), n)
        for cls in classes
    )
    if p_e == 1:
        return 1.0
    return float((p_o - p_e) / (1 - p_e))
