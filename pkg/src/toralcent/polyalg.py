"""Exact analysis of univariate integer polynomials.

Sturm-sequence real root isolation, irreducibility over Q, and the
self-reciprocal / trace-polynomial transforms used to count roots on the
unit circle.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import comb, gcd, isqrt
from typing import Optional, Sequence

import mpmath

from .errors import NumericalFailure, PreconditionError
from .exact import IntPoly, qpoly_divmod, qpoly_gcd, qpoly_strip, qpoly_to_int

Interval = tuple[Fraction, Fraction]


@dataclass
class RootIsolation:
    """Real-root isolation of a squarefree polynomial.

    ``complex_pair_count`` and ``unit_circle_pair_count`` are only filled in
    for whole-line isolations (they are global properties of the polynomial).
    """

    real_intervals: list[Interval]
    degree: int
    complex_pair_count: Optional[int] = None
    unit_circle_pair_count: Optional[int] = None

    def to_json(self) -> dict:
        return {
            "real_intervals": [
                [[str(a.numerator), str(a.denominator)], [str(b.numerator), str(b.denominator)]]
                for a, b in self.real_intervals
            ],
            "complex_pair_count": self.complex_pair_count,
            "unit_circle_pair_count": self.unit_circle_pair_count,
        }


# ---------------------------------------------------------------------------
# squarefree machinery

def repeated_factor(p: IntPoly) -> IntPoly:
    """gcd(p, p') as a primitive integer polynomial (1 when p is squarefree)."""
    if p.degree <= 0:
        return IntPoly([1])
    return qpoly_to_int(qpoly_gcd(list(p.coeffs), list(p.derivative().coeffs)))


def is_squarefree(p: IntPoly) -> bool:
    return repeated_factor(p).degree == 0


def squarefree_part(p: IntPoly) -> IntPoly:
    g = repeated_factor(p)
    if g.degree == 0:
        return p.primitive()
    q, r = qpoly_divmod(list(p.coeffs), list(g.coeffs))
    return qpoly_to_int(q)


def squarefree_decomposition(p: IntPoly) -> list[tuple[IntPoly, int]]:
    """Yun's algorithm: p = c * prod f_i**i with f_i squarefree, pairwise coprime.

    Returns [(f_i, i)] for the non-constant f_i, each primitive with positive lc.
    """
    if p.degree <= 0:
        return []
    a = [Fraction(c) for c in p.coeffs]
    dp = [Fraction(i * c) for i, c in enumerate(p.coeffs)][1:]
    out = []
    b = qpoly_gcd(a, dp)
    c, _ = qpoly_divmod(a, b)
    d, _ = qpoly_divmod(dp, b)
    dc = [Fraction(i * x) for i, x in enumerate(c)][1:]
    d = _qsub(d, dc)
    i = 1
    while len(qpoly_strip(c)) > 1:
        g = qpoly_gcd(c, d)
        if len(g) > 1:
            out.append((qpoly_to_int(g), i))
        c, _ = qpoly_divmod(c, g)
        d, _ = qpoly_divmod(d, g)
        dc = [Fraction(k * x) for k, x in enumerate(c)][1:]
        d = _qsub(d, dc)
        i += 1
    return out


def _qsub(a, b):
    n = max(len(a), len(b))
    a = list(a) + [0] * (n - len(a))
    b = list(b) + [0] * (n - len(b))
    return qpoly_strip([x - y for x, y in zip(a, b)])


def _require_squarefree(p: IntPoly) -> None:
    g = repeated_factor(p)
    if g.degree > 0:
        raise PreconditionError(
            f"polynomial {p} is not squarefree; repeated factor gcd(p, p') = {g}",
            clause="not squarefree",
        )


# ---------------------------------------------------------------------------
# Sturm sequences

def sturm_sequence(p: IntPoly) -> list[IntPoly]:
    """Sturm chain p, p', -rem(...), ... with each term rescaled by a positive constant."""
    seq = [p, p.derivative()]
    while seq[-1].degree > 0:
        _, r = qpoly_divmod(list(seq[-2].coeffs), list(seq[-1].coeffs))
        if not r:
            break
        nxt = qpoly_to_int([-x for x in r])
        # qpoly_to_int normalises lc > 0; undo if that flipped the sign
        if (nxt.lc > 0) != (-r[-1] > 0):
            nxt = -nxt
        seq.append(nxt)
    return seq


def _sign(x) -> int:
    return (x > 0) - (x < 0)


def _sign_at(poly: IntPoly, x) -> int:
    if x == "+inf":
        return _sign(poly.lc)
    if x == "-inf":
        return _sign(poly.lc) * (-1 if poly.degree % 2 else 1)
    return _sign(poly(x))


def sign_variations(seq: Sequence[IntPoly], x) -> int:
    signs = [s for s in (_sign_at(q, x) for q in seq) if s]
    return sum(1 for a, b in zip(signs, signs[1:]) if a != b)


def count_roots(seq: Sequence[IntPoly], a, b) -> int:
    """Distinct real roots in the half-open interval (a, b]; a, b may be '-inf'/'+inf'."""
    return sign_variations(seq, a) - sign_variations(seq, b)


def count_roots_open(p: IntPoly, a, b, seq=None) -> int:
    """Distinct real roots of squarefree ``p`` in the open interval (a, b)."""
    if seq is None:
        seq = sturm_sequence(p)
    n = count_roots(seq, a, b)
    if b not in ("+inf", "-inf") and p(Fraction(b)) == 0:
        n -= 1
    return n


def cauchy_bound(p: IntPoly) -> int:
    """Integer M with every root strictly inside (-M, M)."""
    lc = abs(p.lc)
    m = max((abs(c) for c in p.coeffs[:-1]), default=0)
    return 1 + -(-m // lc) + 1


def _split_point(p: IntPoly, a: Fraction, b: Fraction) -> Fraction:
    for k in (2, 3, 5, 7, 11, 13):
        m = a + (b - a) / k if k > 2 else (a + b) / 2
        if p(m) != 0:
            return m
    raise NumericalFailure("could not find a non-root split point")  # pragma: no cover


def sturm_isolate(p: IntPoly, interval: Optional[tuple] = None) -> RootIsolation:
    """Disjoint rational intervals, one real root each (endpoints are never roots).

    ``interval`` is an open rational interval (lo, hi); None means the whole line.
    The polynomial must be squarefree.
    """
    if p.is_zero():
        raise PreconditionError("zero polynomial has no isolated roots")
    _require_squarefree(p)
    seq = sturm_sequence(p)
    if interval is None:
        M = Fraction(cauchy_bound(p))
        lo, hi = -M, M
    else:
        lo, hi = Fraction(interval[0]), Fraction(interval[1])
        if lo >= hi:
            raise PreconditionError("empty interval")
        lo = _nudge_endpoint(p, seq, lo, hi, upward=True)
        hi = _nudge_endpoint(p, seq, lo, hi, upward=False)
    out: list[Interval] = []
    stack = [(lo, hi, count_roots(seq, lo, hi))]
    while stack:
        a, b, n = stack.pop()
        if n == 0:
            continue
        if n == 1:
            out.append((a, b))
            continue
        m = _split_point(p, a, b)
        n_left = count_roots(seq, a, m)
        stack.append((m, b, n - n_left))
        stack.append((a, m, n_left))
    out.sort()
    iso = RootIsolation(real_intervals=out, degree=p.degree)
    if interval is None:
        iso.complex_pair_count = (p.degree - len(out)) // 2
        iso.unit_circle_pair_count = unit_circle_pairs(p)
    return iso


def _nudge_endpoint(p, seq, lo, hi, upward):
    """Move an endpoint that is itself a root slightly inward, past no other root."""
    x = lo if upward else hi
    if p(x) != 0:
        return x
    step = (hi - lo) / 2
    while True:
        y = x + step if upward else x - step
        if p(y) != 0:
            if upward and count_roots(seq, x, y) == 0:
                return y
            if not upward and count_roots(seq, y, x) == 1:
                return y
        step /= 2


def refine_root(p: IntPoly, lo: Fraction, hi: Fraction, width) -> Interval:
    """Bisect an isolating interval of a simple root down to ``hi - lo <= width``."""
    lo, hi = Fraction(lo), Fraction(hi)
    width = Fraction(width)
    s_lo = _sign(p(lo))
    s_hi = _sign(p(hi))
    if s_lo == 0:
        return lo, lo
    if s_hi == 0:
        return hi, hi
    if s_lo == s_hi:
        raise PreconditionError("interval does not bracket a simple root")
    while hi - lo > width:
        m = (lo + hi) / 2
        s = _sign(p(m))
        if s == 0:
            return m, m
        if s == s_lo:
            lo = m
        else:
            hi = m
    return lo, hi


def real_roots(p: IntPoly, width=Fraction(1, 10**15)) -> list[Interval]:
    """Isolated and refined real roots of a squarefree polynomial."""
    return [refine_root(p, a, b, width) for a, b in sturm_isolate(p).real_intervals]


# ---------------------------------------------------------------------------
# irreducibility

PRIMES = [q for q in range(2, 1000) if all(q % r for r in range(2, isqrt(q) + 1))]


def _pmod(a: list[int], p: int) -> list[int]:
    a = [x % p for x in a]
    while a and a[-1] == 0:
        a.pop()
    return a


def _pdivmod(a: list[int], b: list[int], p: int) -> tuple[list[int], list[int]]:
    a = list(a)
    inv = pow(b[-1], -1, p)
    db = len(b) - 1
    if len(a) - 1 < db:
        return [], a
    q = [0] * (len(a) - db)
    for k in range(len(a) - 1 - db, -1, -1):
        c = a[k + db] * inv % p
        q[k] = c
        if c:
            for j, bj in enumerate(b):
                a[k + j] = (a[k + j] - c * bj) % p
    return _pmod(q, p), _pmod(a[:db], p)


def _pmulmod(a, b, f, p):
    if not a or not b:
        return []
    out = [0] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        if x:
            for j, y in enumerate(b):
                out[i + j] += x * y
    return _pdivmod(_pmod(out, p), f, p)[1]


def _ppowmod(base, e, f, p):
    result = [1]
    while e:
        if e & 1:
            result = _pmulmod(result, base, f, p)
        base = _pmulmod(base, base, f, p)
        e >>= 1
    return result


def _pgcd(a, b, p):
    a, b = _pmod(a, p), _pmod(b, p)
    while b:
        a, b = b, _pdivmod(a, b, p)[1]
    if a:
        inv = pow(a[-1], -1, p)
        a = [x * inv % p for x in a]
    return a


def _psub(a, b, p):
    n = max(len(a), len(b))
    a = a + [0] * (n - len(a))
    b = b + [0] * (n - len(b))
    return _pmod([x - y for x, y in zip(a, b)], p)


def distinct_degree_mod_p(poly: IntPoly, p: int) -> Optional[list[int]]:
    """Degrees of the irreducible factors of ``poly`` mod p, or None if not squarefree mod p."""
    f = _pmod(list(poly.coeffs), p)
    if len(f) - 1 != poly.degree:
        return None
    df = _pmod([i * c for i, c in enumerate(f)][1:], p)
    if len(_pgcd(f, df, p)) > 1:
        return None
    inv = pow(f[-1], -1, p)
    f = [x * inv % p for x in f]
    degrees = []
    h = [0, 1]
    i = 0
    while len(f) - 1 >= 2 * (i + 1):
        i += 1
        h = _ppowmod(h, p, f, p)
        g = _pgcd(f, _psub(h, [0, 1], p), p)
        if len(g) > 1:
            degrees += [i] * ((len(g) - 1) // i)
            f = _pdivmod(f, g, p)[0]
            h = _pdivmod(h, f, p)[1] if len(f) > 1 else []
    if len(f) > 1:
        degrees.append(len(f) - 1)
    return degrees


def _subset_sums(degrees: list[int]) -> set[int]:
    sums = {0}
    for k in degrees:
        sums |= {s + k for s in sums}
    return sums


def mignotte_bound(p: IntPoly, k: int) -> int:
    """Bound on |coefficients| of any integer factor of degree k of p."""
    norm2 = sum(c * c for c in p.coeffs)
    return comb(k, k // 2) * (isqrt(norm2) + 1)


def is_irreducible_q(p: IntPoly, n_primes: int = 25) -> bool:
    """True iff p is irreducible in Q[t] (constants are an error)."""
    if p.degree <= 0:
        raise PreconditionError("irreducibility is undefined for constants", clause="degree 0")
    p = p.primitive()
    n = p.degree
    if n == 1:
        return True
    if not is_squarefree(p):
        return False
    if p.coeffs[0] == 0:
        return False  # divisible by t
    possible = set(range(1, n))
    used = 0
    for q in PRIMES:
        if used == n_primes:
            break
        if p.lc % q == 0:
            continue
        used += 1
        degs = distinct_degree_mod_p(p, q)
        if degs is None:
            continue
        if len(degs) == 1:
            return True
        possible &= _subset_sums(degs)
        if not possible:
            return True
    return _find_factor(p, sorted(k for k in possible if 2 * k <= n)) is None


def _divisors(n: int) -> list[int]:
    n = abs(n)
    return [k for k in range(1, n + 1) if n % k == 0]


def _find_factor(p: IntPoly, degrees: list[int], dps: int = 60) -> Optional[IntPoly]:
    """Search integer factors of the given degrees among products of complex roots.

    Every rational factor is lc * prod(t - alpha) over a subset of the roots,
    so rounding the numerically formed products (with high precision) and
    confirming by exact division is complete within the Mignotte bound.
    """
    if not degrees:
        return None
    with mpmath.workdps(dps):
        try:
            roots, err = mpmath.polyroots(list(reversed(p.coeffs)), maxsteps=400, extraprec=4 * dps, error=True)
        except mpmath.libmp.libhyper.NoConvergence:
            raise NumericalFailure(f"root finding did not converge for {p}") from None
        if err > mpmath.mpf(10) ** (-dps // 2):
            raise NumericalFailure(f"root finding too inaccurate for {p} (err {err})")
        tol = mpmath.mpf(10) ** (-dps // 4)
        lcs = _divisors(p.lc)
        for k in degrees:
            bound = mignotte_bound(p, k)
            for subset in itertools.combinations(range(len(roots)), k):
                h = [mpmath.mpc(1)]
                for idx in subset:
                    r = roots[idx]
                    h = [mpmath.mpc(0)] + h
                    for j in range(len(h) - 1):
                        h[j] -= r * h[j + 1]
                if any(abs(c.imag) > tol * (1 + abs(c)) for c in h):
                    continue
                for c in lcs:
                    vals = [c * x.real for x in h]
                    rounded = [int(mpmath.nint(v)) for v in vals]
                    if any(abs(v - r) > tol * (1 + abs(v)) for v, r in zip(vals, rounded)):
                        continue
                    if any(abs(r) > bound * c for r in rounded):
                        continue
                    cand = IntPoly(rounded)
                    if cand.divides(p):
                        return cand
    return None


# ---------------------------------------------------------------------------
# self-reciprocal polynomials and the unit circle

def self_reciprocal_test(p: IntPoly) -> bool:
    return p.coeffs == tuple(reversed(p.coeffs))


@lru_cache(maxsize=64)
def _dickson(k: int) -> IntPoly:
    """D_k with t**k + t**-k = D_k(t + 1/t)."""
    if k == 0:
        return IntPoly([2])
    if k == 1:
        return IntPoly([0, 1])
    z = IntPoly([0, 1])
    return z * _dickson(k - 1) - _dickson(k - 2)


def trace_poly_expand(P: IntPoly) -> IntPoly:
    """t**deg(P) * P(t + 1/t)."""
    n = P.degree
    out = IntPoly([])
    base = IntPoly([1, 0, 1])  # t**2 + 1
    for k, c in enumerate(P.coeffs):
        if c:
            out = out + IntPoly.monomial(n - k, c) * base ** k
    return out


def trace_poly_decompose(q: IntPoly) -> IntPoly:
    """The P with q(t) = t**(d/2) * P(t + 1/t) for monic self-reciprocal q of even degree d."""
    if q.degree % 2:
        raise PreconditionError(f"{q} has odd degree", clause="odd degree")
    if not self_reciprocal_test(q):
        raise PreconditionError(f"{q} is not self-reciprocal", clause="not self-reciprocal")
    n = q.degree // 2
    P = IntPoly([q.coeffs[n]])
    for k in range(1, n + 1):
        P = P + _dickson(k) * q.coeffs[n + k]
    if trace_poly_expand(P) != q:  # pragma: no cover - algebraic identity
        raise NumericalFailure("trace polynomial failed to re-expand")
    return P


def _strip_pm1(g: IntPoly) -> IntPoly:
    for root in (1, -1):
        while g.degree > 0 and g(root) == 0:
            g = g.exact_quotient(IntPoly([-root, 1]))
    return g


def unit_circle_pairs(q: IntPoly) -> int:
    """Number of conjugate pairs of non-real roots of modulus one (q squarefree).

    Circle roots of q are shared with its reciprocal, so the count is taken
    on g = gcd(q, reciprocal(q)) with the real roots +-1 divided out; g is
    then self-reciprocal and each root of its trace polynomial inside
    (-2, 2) gives exactly one pair.
    """
    _require_squarefree(q)
    if q.degree < 2:
        return 0
    g = qpoly_to_int(qpoly_gcd(list(q.coeffs), list(q.reciprocal().coeffs)))
    g = _strip_pm1(g)
    if g.degree <= 0:
        return 0
    P = trace_poly_decompose(g)
    if P(2) == 0 or P(-2) == 0:  # pragma: no cover - excluded by _strip_pm1
        raise NumericalFailure("trace polynomial vanishes at the circle boundary")
    return count_roots_open(P, Fraction(-2), Fraction(2))


# ---------------------------------------------------------------------------
# structural predicates

@dataclass
class TnDecomposition:
    """p(t) = t**shift * witness(t**n); witness is None when n == 1."""

    n: int
    witness: Optional[IntPoly] = None
    shift: int = 0


def poly_in_tn(p: IntPoly) -> TnDecomposition:
    if p.is_zero():
        raise PreconditionError("zero polynomial")
    exps = [i for i, c in enumerate(p.coeffs) if c]
    deg = p.degree
    n = 0
    for e in exps:
        n = gcd(n, deg - e)
    if n == 0:
        n = max(deg, 1)
    if n == 1:
        return TnDecomposition(1)
    shift = exps[0] % n
    witness = IntPoly([p.coeffs[shift + n * j] if shift + n * j <= deg else 0
                       for j in range((deg - shift) // n + 1)])
    return TnDecomposition(n, witness, shift)


def euler_phi(m: int) -> int:
    result, k, x = m, 2, m
    while k * k <= x:
        if x % k == 0:
            while x % k == 0:
                x //= k
            result -= result // k
        k += 1
    if x > 1:
        result -= result // x
    return result


@lru_cache(maxsize=None)
def cyclotomic(m: int) -> IntPoly:
    num = IntPoly([-1] + [0] * (m - 1) + [1])
    for e in range(1, m):
        if m % e == 0:
            num = num.exact_quotient(cyclotomic(e))
    return num


def cyclotomic_factors(p: IntPoly) -> list[int]:
    """Indices m (phi(m) <= deg p, m <= 3 deg**2) with Phi_m dividing p."""
    d = p.degree
    out = []
    for m in range(1, 3 * d * d + 1):
        if euler_phi(m) <= d and cyclotomic(m).divides(p):
            out.append(m)
    return out


def has_root_of_unity_factor(p: IntPoly) -> bool:
    if p.is_zero():
        raise PreconditionError("zero polynomial")
    if p.degree == 0:
        return False
    return bool(cyclotomic_factors(p))
