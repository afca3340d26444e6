"""Exact integer/rational matrices and polynomials.

Everything here is exact: Python ints and ``fractions.Fraction`` only.
Dimensions are desk-scale (d <= 12, kernel systems up to 144 unknowns),
so the algorithms are the plain textbook ones: Berkowitz for the
characteristic polynomial, Bareiss for determinants, Euclid-style row
reduction for Hermite normal forms.
"""

from __future__ import annotations

from fractions import Fraction
from functools import reduce
from math import gcd, lcm
from typing import Iterable, Sequence

import numpy as np

from .errors import ParseError, PreconditionError


def _as_int(x) -> int:
    if isinstance(x, bool):
        raise ParseError("booleans are not matrix entries")
    if isinstance(x, int):
        return x
    if isinstance(x, str):
        try:
            return int(x.strip())
        except ValueError:
            raise ParseError(f"not a decimal integer: {x!r}") from None
    if isinstance(x, Fraction) and x.denominator == 1:
        return x.numerator
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, float) and x.is_integer():
        return int(x)
    raise ParseError(f"not an integer entry: {x!r}")


class IntMatrix:
    """Square matrix with arbitrary-precision integer entries (immutable)."""

    __slots__ = ("rows", "dim")

    def __init__(self, rows: Iterable[Iterable]):
        rows = tuple(tuple(_as_int(v) for v in row) for row in rows)
        d = len(rows)
        if d == 0:
            raise ParseError("matrix must have at least one row")
        for i, row in enumerate(rows):
            if len(row) != d:
                raise ParseError(f"matrix is not square: row {i} has {len(row)} entries, expected {d}")
        self.rows = rows
        self.dim = d

    @classmethod
    def identity(cls, d: int) -> IntMatrix:
        return cls([[int(i == j) for j in range(d)] for i in range(d)])

    @classmethod
    def zero(cls, d: int) -> IntMatrix:
        return cls([[0] * d for _ in range(d)])

    @classmethod
    def from_flat(cls, flat: Sequence[int], d: int) -> IntMatrix:
        return cls([flat[i * d:(i + 1) * d] for i in range(d)])

    @classmethod
    def block_diag(cls, *blocks: IntMatrix) -> IntMatrix:
        d = sum(b.dim for b in blocks)
        out = [[0] * d for _ in range(d)]
        off = 0
        for b in blocks:
            for i in range(b.dim):
                out[off + i][off:off + b.dim] = b.rows[i]
            off += b.dim
        return cls(out)

    def __getitem__(self, ij):
        i, j = ij
        return self.rows[i][j]

    def __eq__(self, other):
        return isinstance(other, IntMatrix) and self.rows == other.rows

    def __hash__(self):
        return hash(self.rows)

    def __repr__(self):
        return f"IntMatrix({[list(r) for r in self.rows]})"

    def flat(self) -> list[int]:
        return [v for row in self.rows for v in row]

    def transpose(self) -> IntMatrix:
        return IntMatrix(zip(*self.rows))

    @property
    def T(self) -> IntMatrix:
        return self.transpose()

    def trace(self) -> int:
        return sum(self.rows[i][i] for i in range(self.dim))

    def _check(self, other):
        if not isinstance(other, IntMatrix):
            return NotImplemented
        if other.dim != self.dim:
            raise PreconditionError(f"dimension mismatch: {self.dim} vs {other.dim}")
        return None

    def __add__(self, other):
        if isinstance(other, int):
            other = IntMatrix.identity(self.dim) * other
        bad = self._check(other)
        if bad is NotImplemented:
            return bad
        return IntMatrix([[a + b for a, b in zip(r, s)] for r, s in zip(self.rows, other.rows)])

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, int):
            other = IntMatrix.identity(self.dim) * other
        bad = self._check(other)
        if bad is NotImplemented:
            return bad
        return IntMatrix([[a - b for a, b in zip(r, s)] for r, s in zip(self.rows, other.rows)])

    def __rsub__(self, other):
        return (-self) + other

    def __neg__(self):
        return IntMatrix([[-a for a in r] for r in self.rows])

    def __mul__(self, k):
        if not isinstance(k, int):
            return NotImplemented
        return IntMatrix([[k * a for a in r] for r in self.rows])

    __rmul__ = __mul__

    def __matmul__(self, other):
        if isinstance(other, IntMatrix):
            self._check(other)
            cols = list(zip(*other.rows))
            return IntMatrix([[sum(a * b for a, b in zip(r, c)) for c in cols] for r in self.rows])
        # integer vector
        vec = [_as_int(v) for v in other]
        if len(vec) != self.dim:
            raise PreconditionError("vector length does not match matrix dimension")
        return tuple(sum(a * b for a, b in zip(r, vec)) for r in self.rows)

    def __pow__(self, n: int) -> IntMatrix:
        if n < 0:
            return self.inverse() ** (-n)
        result = IntMatrix.identity(self.dim)
        base = self
        while n:
            if n & 1:
                result = result @ base
            base = base @ base
            n >>= 1
        return result

    def det(self) -> int:
        return det_exact(self)

    def inverse(self) -> IntMatrix:
        """Exact inverse; only defined in GL(d, Z)."""
        dt = self.det()
        if dt not in (1, -1):
            raise PreconditionError(f"matrix is not unimodular (det = {dt})")
        inv = RatMatrix(self.rows).inverse()
        return IntMatrix([[_as_int(v) for v in row] for row in inv.rows])

    def commutes_with(self, other: IntMatrix) -> bool:
        return self @ other == other @ self

    def to_numpy(self, dtype=float) -> np.ndarray:
        return np.array([[float(v) for v in r] for r in self.rows], dtype=dtype)

    def to_json(self, big_as_str: bool = True) -> list[list]:
        def enc(v):
            if big_as_str and abs(v) >= 2**53:
                return str(v)
            return v
        return [[enc(v) for v in r] for r in self.rows]

    def max_abs(self) -> int:
        return max(abs(v) for r in self.rows for v in r)


class RatMatrix:
    """Rectangular matrix of exact rationals (lowest terms by construction)."""

    __slots__ = ("rows", "shape")

    def __init__(self, rows: Iterable[Iterable]):
        self.rows = tuple(tuple(Fraction(v) for v in row) for row in rows)
        n = len(self.rows)
        m = len(self.rows[0]) if n else 0
        if any(len(r) != m for r in self.rows):
            raise ParseError("ragged rational matrix")
        self.shape = (n, m)

    def __matmul__(self, other):
        if isinstance(other, (RatMatrix, IntMatrix)):
            cols = list(zip(*other.rows))
            return RatMatrix([[sum(a * b for a, b in zip(r, c)) for c in cols] for r in self.rows])
        return tuple(sum(a * Fraction(b) for a, b in zip(r, other)) for r in self.rows)

    def inverse(self) -> RatMatrix:
        n, m = self.shape
        if n != m:
            raise PreconditionError("only square matrices are invertible")
        aug = [list(r) + [Fraction(int(i == j)) for j in range(n)] for i, r in enumerate(self.rows)]
        for c in range(n):
            p = next((i for i in range(c, n) if aug[i][c] != 0), None)
            if p is None:
                raise PreconditionError("singular matrix")
            aug[c], aug[p] = aug[p], aug[c]
            piv = aug[c][c]
            aug[c] = [v / piv for v in aug[c]]
            for i in range(n):
                if i != c and aug[i][c] != 0:
                    f = aug[i][c]
                    aug[i] = [a - f * b for a, b in zip(aug[i], aug[c])]
        return RatMatrix([r[n:] for r in aug])


class IntPoly:
    """Integer polynomial, ``coeffs[i]`` is the coefficient of t**i."""

    __slots__ = ("coeffs",)

    def __init__(self, coeffs: Iterable):
        c = [_as_int(v) for v in coeffs]
        while c and c[-1] == 0:
            c.pop()
        self.coeffs = tuple(c)

    @classmethod
    def monomial(cls, k: int, c: int = 1) -> IntPoly:
        return cls([0] * k + [c])

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    @property
    def lc(self) -> int:
        return self.coeffs[-1] if self.coeffs else 0

    def is_zero(self) -> bool:
        return not self.coeffs

    def is_monic(self) -> bool:
        return self.lc == 1

    def __eq__(self, other):
        if isinstance(other, IntPoly):
            return self.coeffs == other.coeffs
        return NotImplemented

    def __hash__(self):
        return hash(self.coeffs)

    def __repr__(self):
        return f"IntPoly({list(self.coeffs)})"

    def __str__(self):
        return format_poly(self.coeffs, "t")

    def __call__(self, x):
        acc = 0 * x
        for c in reversed(self.coeffs):
            acc = acc * x + c
        return acc

    def __add__(self, other):
        other = _to_poly(other)
        n = max(len(self.coeffs), len(other.coeffs))
        a = self.coeffs + (0,) * (n - len(self.coeffs))
        b = other.coeffs + (0,) * (n - len(other.coeffs))
        return IntPoly([x + y for x, y in zip(a, b)])

    __radd__ = __add__

    def __neg__(self):
        return IntPoly([-c for c in self.coeffs])

    def __sub__(self, other):
        return self + (-_to_poly(other))

    def __rsub__(self, other):
        return _to_poly(other) - self

    def __mul__(self, other):
        other = _to_poly(other)
        if self.is_zero() or other.is_zero():
            return IntPoly([])
        out = [0] * (len(self.coeffs) + len(other.coeffs) - 1)
        for i, a in enumerate(self.coeffs):
            if a:
                for j, b in enumerate(other.coeffs):
                    out[i + j] += a * b
        return IntPoly(out)

    __rmul__ = __mul__

    def __pow__(self, n: int) -> IntPoly:
        out = IntPoly([1])
        for _ in range(n):
            out = out * self
        return out

    def derivative(self) -> IntPoly:
        return IntPoly([i * c for i, c in enumerate(self.coeffs)][1:])

    def compose(self, inner: IntPoly) -> IntPoly:
        acc = IntPoly([])
        for c in reversed(self.coeffs):
            acc = acc * inner + c
        return acc

    def reciprocal(self) -> IntPoly:
        """t**deg * p(1/t), i.e. the coefficient list reversed."""
        return IntPoly(reversed(self.coeffs))

    def mirror(self) -> IntPoly:
        """p(-t)."""
        return IntPoly([c if i % 2 == 0 else -c for i, c in enumerate(self.coeffs)])

    def content(self) -> int:
        return reduce(gcd, self.coeffs, 0)

    def primitive(self) -> IntPoly:
        g = self.content()
        if g == 0:
            return self
        if self.lc < 0:
            g = -g
        return IntPoly([c // g for c in self.coeffs])

    def divmod_exact(self, other: IntPoly) -> tuple[list[Fraction], list[Fraction]]:
        """Quotient and remainder over Q (coefficient lists, low to high)."""
        q, r = qpoly_divmod(list(self.coeffs), list(other.coeffs))
        return q, r

    def exact_quotient(self, other: IntPoly) -> IntPoly:
        q, r = self.divmod_exact(other)
        if any(r) or any(v.denominator != 1 for v in q):
            raise PreconditionError(f"{other} does not divide {self} over Z")
        return IntPoly([int(v) for v in q])

    def divides(self, other: IntPoly) -> bool:
        _, r = qpoly_divmod(list(other.coeffs), list(self.coeffs))
        return not any(r)

    def to_json(self) -> list:
        return [c if abs(c) < 2**53 else str(c) for c in self.coeffs]


def _to_poly(x) -> IntPoly:
    if isinstance(x, IntPoly):
        return x
    return IntPoly([x])


def format_poly(coeffs: Sequence, var: str = "t") -> str:
    terms = []
    for i in range(len(coeffs) - 1, -1, -1):
        c = coeffs[i]
        if c == 0:
            continue
        sign = "-" if c < 0 else "+"
        a = abs(c)
        if i == 0:
            body = str(a)
        else:
            mono = var if i == 1 else f"{var}^{i}"
            body = mono if a == 1 else f"{a}*{mono}"
        terms.append((sign, body))
    if not terms:
        return "0"
    first_sign, first = terms[0]
    out = ("-" if first_sign == "-" else "") + first
    for sign, body in terms[1:]:
        out += f" {sign} {body}"
    return out


# ---------------------------------------------------------------------------
# rational polynomial helpers (lists of Fraction/int, low -> high)

def qpoly_strip(p: list) -> list:
    p = list(p)
    while p and p[-1] == 0:
        p.pop()
    return p


def qpoly_divmod(a: list, b: list) -> tuple[list, list]:
    a = [Fraction(v) for v in qpoly_strip(a)]
    b = [Fraction(v) for v in qpoly_strip(b)]
    if not b:
        raise ZeroDivisionError("polynomial division by zero")
    if len(a) < len(b):
        return [], a
    q = [Fraction(0)] * (len(a) - len(b) + 1)
    lb = b[-1]
    for k in range(len(a) - len(b), -1, -1):
        c = a[k + len(b) - 1] / lb
        q[k] = c
        if c:
            for j, bj in enumerate(b):
                a[k + j] -= c * bj
    return qpoly_strip(q), qpoly_strip(a[:len(b) - 1])


def qpoly_gcd(a: list, b: list) -> list:
    """Monic gcd over Q."""
    a, b = qpoly_strip(a), qpoly_strip(b)
    while b:
        _, r = qpoly_divmod(a, b)
        a, b = b, r
    if not a:
        return []
    lc = Fraction(a[-1])
    return [Fraction(v) / lc for v in a]


def qpoly_to_int(p: list) -> IntPoly:
    """Clear denominators and return the primitive integer multiple (positive lc)."""
    p = qpoly_strip(p)
    if not p:
        return IntPoly([])
    den = reduce(lcm, (Fraction(v).denominator for v in p), 1)
    return IntPoly([int(Fraction(v) * den) for v in p]).primitive()


# ---------------------------------------------------------------------------
# characteristic polynomial and determinant

def char_poly(m: IntMatrix) -> IntPoly:
    """det(tI - m) by Berkowitz's division-free algorithm."""
    a = [list(r) for r in m.rows]
    n = m.dim
    # Berkowitz: iteratively build the char poly of leading principal submatrices.
    # Vectors hold coefficients high -> low.
    vect = [1, -a[0][0]]
    for r in range(1, n):
        # A_r is r x r leading block, R = row r cols < r, C = col r rows < r, a_rr
        R = a[r][:r]
        C = [a[i][r] for i in range(r)]
        Ar = [row[:r] for row in a[:r]]
        # Toeplitz column: [1, -a_rr, -R C, -R A C, -R A^2 C, ...]
        col = [1, -a[r][r]]
        v = C
        for _ in range(r):
            col.append(-sum(x * y for x, y in zip(R, v)))
            v = [sum(Ar[i][j] * v[j] for j in range(r)) for i in range(r)]
        # multiply lower-triangular Toeplitz (r+2)x(r+1) by vect
        new = []
        for i in range(r + 2):
            s = 0
            for j in range(min(i, r) + 1):
                s += col[i - j] * vect[j]
            new.append(s)
        vect = new
    return IntPoly(reversed(vect))


def det_exact(m: IntMatrix) -> int:
    """Exact determinant by fraction-free Bareiss elimination."""
    a = [list(r) for r in m.rows]
    n = m.dim
    sign = 1
    prev = 1
    for k in range(n - 1):
        if a[k][k] == 0:
            p = next((i for i in range(k + 1, n) if a[i][k] != 0), None)
            if p is None:
                return 0
            a[k], a[p] = a[p], a[k]
            sign = -sign
        akk = a[k][k]
        for i in range(k + 1, n):
            aik = a[i][k]
            row_i, row_k = a[i], a[k]
            for j in range(k + 1, n):
                row_i[j] = (row_i[j] * akk - aik * row_k[j]) // prev
            row_i[k] = 0
        prev = akk
    return sign * a[n - 1][n - 1]


def companion(p: IntPoly) -> IntMatrix:
    """Companion matrix of a monic polynomial: subdiagonal ones, last column -coeffs.

    With this convention ``L e_i = e_{i+1}`` and char_poly(companion(p)) == p.
    """
    if not p.is_monic():
        raise PreconditionError("companion matrix requires a monic polynomial")
    d = p.degree
    if d < 1:
        raise PreconditionError("companion matrix requires degree >= 1")
    rows = [[0] * d for _ in range(d)]
    for i in range(1, d):
        rows[i][i - 1] = 1
    for i in range(d):
        rows[i][d - 1] = -p.coeffs[i]
    return IntMatrix(rows)


# ---------------------------------------------------------------------------
# lattices

def hnf_with_transform(rows: Sequence[Sequence[int]]) -> tuple[list[list[int]], list[list[int]]]:
    """Row Hermite normal form ``H = U A`` with ``U`` unimodular.

    ``H`` keeps all input rows (zero rows last); pivots are positive and the
    entries above each pivot are reduced into ``[0, pivot)``.
    """
    H = [[_as_int(v) for v in r] for r in rows]
    k = len(H)
    n = len(H[0]) if k else 0
    U = [[int(i == j) for j in range(k)] for i in range(k)]
    r = 0
    for col in range(n):
        if r >= k:
            break
        while True:
            nz = [i for i in range(r, k) if H[i][col] != 0]
            if not nz:
                break
            p = min(nz, key=lambda i: abs(H[i][col]))
            if p != r:
                H[r], H[p] = H[p], H[r]
                U[r], U[p] = U[p], U[r]
            done = True
            piv = H[r][col]
            for i in range(r + 1, k):
                if H[i][col]:
                    q = H[i][col] // piv
                    _row_sub(H[i], H[r], q)
                    _row_sub(U[i], U[r], q)
                    if H[i][col]:
                        done = False
            if done:
                break
        if not any(H[i][col] for i in range(r, k)):
            continue
        if H[r][col] < 0:
            H[r] = [-v for v in H[r]]
            U[r] = [-v for v in U[r]]
        piv = H[r][col]
        for i in range(r):
            q = H[i][col] // piv
            if q:
                _row_sub(H[i], H[r], q)
                _row_sub(U[i], U[r], q)
        r += 1
    return H, U


def _row_sub(target: list, src: list, q: int) -> None:
    for j, v in enumerate(src):
        if v:
            target[j] -= q * v


def hnf_basis(vectors: Sequence[Sequence[int]]) -> list[tuple[int, ...]]:
    """HNF basis (nonzero rows) of the integer lattice spanned by ``vectors``."""
    if not vectors:
        return []
    n = len(vectors[0])
    if any(len(v) != n for v in vectors):
        raise PreconditionError("vectors must all have the same length")
    H, _ = hnf_with_transform(vectors)
    return [tuple(r) for r in H if any(r)]


def lattice_coordinates(basis: Sequence[Sequence[int]], v: Sequence[int]) -> tuple[int, ...] | None:
    """Integer coordinates of ``v`` in an HNF basis, or None when v is not in the lattice."""
    v = [_as_int(x) for x in v]
    coords = []
    for row in basis:
        col = next(j for j, x in enumerate(row) if x)
        piv = row[col]
        if v[col] % piv:
            return None
        q = v[col] // piv
        coords.append(q)
        if q:
            _row_sub(v, row, q)
    if any(v):
        return None
    return tuple(coords)


def _fraction_free_rref(rows: Sequence[Sequence]) -> tuple[list[list[int]], list[int]]:
    """Integer row-reduced echelon form (each row primitive) and pivot columns."""
    A = []
    for r in rows:
        fr = [Fraction(v) for v in r]
        den = reduce(lcm, (x.denominator for x in fr), 1)
        A.append([int(x * den) for x in fr])
    k = len(A)
    n = len(A[0]) if k else 0
    pivots = []
    r = 0
    for col in range(n):
        p = next((i for i in range(r, k) if A[i][col] != 0), None)
        if p is None:
            continue
        A[r], A[p] = A[p], A[r]
        prow = A[r]
        pv = prow[col]
        nzp = [j for j, x in enumerate(prow) if x]
        for i in range(k):
            if i == r:
                continue
            a = A[i][col]
            if a == 0:
                continue
            row = A[i]
            g = gcd(pv, a)
            m1, m2 = pv // g, a // g
            if m1 != 1:
                for j in range(n):
                    if row[j]:
                        row[j] *= m1
            for j in nzp:
                row[j] -= m2 * prow[j]
            c = reduce(gcd, row, 0)
            if c > 1:
                A[i] = [x // c for x in row]
        pivots.append(col)
        r += 1
        if r == k:
            break
    return A[:r], pivots


def rational_kernel(a: Sequence[Sequence]) -> list[list[int]]:
    """Integer vectors spanning ker(a) over Q (not necessarily a Z-basis)."""
    if not a:
        raise PreconditionError("empty coefficient matrix")
    m = len(a[0])
    R, pivots = _fraction_free_rref(a)
    free = [j for j in range(m) if j not in set(pivots)]
    out = []
    for f in free:
        L = reduce(lcm, (R[i][p] for i, p in enumerate(pivots) if R[i][f]), 1)
        v = [0] * m
        v[f] = L
        for i, p in enumerate(pivots):
            if R[i][f]:
                v[p] = -R[i][f] * L // R[i][p]
        g = reduce(gcd, v, 0)
        out.append([x // g for x in v])
    return out


def saturate(vectors: Sequence[Sequence[int]]) -> list[tuple[int, ...]]:
    """Z-basis of span_Q(vectors) ∩ Z^m for linearly independent integer vectors.

    Column operations bring B to ``[H | 0]`` with ``B V = [H | 0]``; the first
    k rows of ``V^{-1}`` are then an integral basis of the rational span.
    """
    B = [[_as_int(x) for x in v] for v in vectors]
    k = len(B)
    if k == 0:
        return []
    m = len(B[0])
    W = [[int(i == j) for j in range(m)] for i in range(m)]  # tracks V^{-1}
    for r in range(k):
        row = B[r]
        for c in range(r + 1, m):
            if row[c] == 0:
                continue
            a, b = row[r], row[c]
            g, s, t = _xgcd(a, b)
            ag, bg = a // g, b // g
            # columns: (col_r, col_c) <- (s col_r + t col_c, -bg col_r + ag col_c)
            for i in range(r, k):
                x, y = B[i][r], B[i][c]
                B[i][r] = s * x + t * y
                B[i][c] = -bg * x + ag * y
            # rows of V^{-1}: (row_r, row_c) <- (ag row_r + bg row_c, -t row_r + s row_c)
            wr, wc = W[r], W[c]
            W[r] = [ag * x + bg * y for x, y in zip(wr, wc)]
            W[c] = [-t * x + s * y for x, y in zip(wr, wc)]
        if row[r] == 0:
            raise PreconditionError("saturate() needs linearly independent vectors")
    return [tuple(w) for w in W[:k]]


def _xgcd(a: int, b: int) -> tuple[int, int, int]:
    x0, x1, y0, y1 = 1, 0, 0, 1
    while b:
        q, a, b = a // b, b, a % b
        x0, x1 = x1, x0 - q * x1
        y0, y1 = y1, y0 - q * y1
    if a < 0:
        a, x0, y0 = -a, -x0, -y0
    return a, x0, y0


def integer_kernel(a) -> list[tuple[int, ...]]:
    """HNF basis of {v in Z^m : a v = 0} for a rational n x m matrix ``a``."""
    rows = a.rows if isinstance(a, (RatMatrix, IntMatrix)) else a
    rows = [list(r) for r in rows]
    if not rows:
        raise PreconditionError("empty coefficient matrix")
    gens = rational_kernel(rows)
    if not gens:
        return []
    return hnf_basis(saturate(gens))


# ---------------------------------------------------------------------------
# JSON literals

def parse_matrix(obj) -> IntMatrix:
    if not isinstance(obj, list) or not all(isinstance(r, list) for r in obj):
        raise ParseError("matrix literal must be a JSON array of rows")
    return IntMatrix(obj)


def parse_poly(obj) -> IntPoly:
    if not isinstance(obj, list):
        raise ParseError("polynomial literal must be a JSON array of coefficients")
    return IntPoly(obj)
