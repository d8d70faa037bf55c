"""Slow, obviously-correct reference implementations used by the tests."""
import itertools
from fractions import Fraction
from math import comb


def bh_oracle(p, q):
    """Scan every k; the largest k with p_(k) <= k q / m sets the threshold."""
    m = len(p)
    ordered = sorted(p)
    k_star = 0
    for k in range(1, m + 1):
        if ordered[k - 1] <= k * q / m:
            k_star = k
    if k_star == 0:
        return [False] * m
    thr = ordered[k_star - 1]
    return [x <= thr for x in p]


def ks_oracle(a, b):
    best = 0.0
    for x in sorted(set(a) | set(b)):
        fa = sum(1 for v in a if v <= x) / len(a)
        fb = sum(1 for v in b if v <= x) / len(b)
        best = max(best, abs(fa - fb))
    return best


def fisher_oracle(a, b, c, d):
    """Exact rational hypergeometric enumeration over every table with the
    observed margins."""
    r1, r2, c1 = a + b, c + d, a + c
    total = comb(r1 + r2, c1)
    probs = {x: Fraction(comb(r1, x) * comb(r2, c1 - x), total)
             for x in range(max(0, c1 - r2), min(r1, c1) + 1)}
    obs = probs[a]
    return float(sum(p for p in probs.values() if p <= obs))


def all_tables(max_margin):
    for a, b, c, d in itertools.product(range(max_margin + 1), repeat=4):
        r1, r2, c1, c2 = a + b, c + d, a + c, b + d
        if max(r1, r2, c1, c2) > max_margin or min(r1, r2, c1, c2) == 0:
            continue
        yield a, b, c, d
