"""Certified spectral classification of integer automorphisms.

Eigenvalue counts are exact (Sturm sequences and the trace-polynomial
transform). Lyapunov exponents come as float intervals that enclose
log|lambda|: real roots are bisected with exact sign evaluation, complex
pairs off the unit circle get an a-posteriori inclusion disk, and circle
pairs have exponent exactly zero.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

import mpmath
import numpy as np

from . import polyalg
from .errors import NumericalFailure, PreconditionError
from .exact import IntMatrix, IntPoly, char_poly, companion, det_exact, qpoly_gcd, qpoly_to_int

DEFAULT_WIDTH = 1e-12


def _down(x: float, ulps: int = 2) -> float:
    for _ in range(ulps):
        x = math.nextafter(x, -math.inf)
    return x


def _up(x: float, ulps: int = 2) -> float:
    for _ in range(ulps):
        x = math.nextafter(x, math.inf)
    return x


def _log_abs_bounds(lo: Fraction, hi: Fraction) -> tuple[float, float]:
    """Outward float bounds of log|x| for x in [lo, hi] not containing 0."""
    a, b = abs(lo), abs(hi)
    if a > b:
        a, b = b, a
    if lo <= 0 <= hi:
        raise PreconditionError("interval contains zero")
    return _down(math.log(_down(float(a)))), _up(math.log(_up(float(b))))


@dataclass
class Eigen:
    """One real eigenvalue, or one conjugate pair of non-real eigenvalues."""

    kind: str  # "real", "circle" or "complex"
    factor: IntPoly
    multiplicity: int
    interval: Optional[tuple[Fraction, Fraction]] = None  # real roots only
    approx: complex = 0j
    log_lo: float = 0.0
    log_hi: float = 0.0

    @property
    def count(self) -> int:
        """Number of eigenvalues (with multiplicity) this entry stands for."""
        return self.multiplicity * (1 if self.kind == "real" else 2)

    @property
    def exact_zero(self) -> bool:
        return self.kind == "circle" or (self.kind == "real" and self.interval[0] == self.interval[1]
                                         and abs(self.interval[0]) == 1)

    def refine(self, width: float) -> None:
        """Shrink the isolating interval until the log-modulus bounds are ``width`` apart."""
        if self.kind != "real" or self.exact_zero:
            return
        lo, hi = self.interval
        target = Fraction(width) * max(abs(lo), abs(hi)) / 4
        while True:
            if hi - lo > target:
                lo, hi = polyalg.refine_root(self.factor, lo, hi, target)
            if lo > 0 or hi < 0:
                log_lo, log_hi = _log_abs_bounds(lo, hi)
                # binary64 log bounds stop shrinking near relative width 1e-16
                if log_hi - log_lo <= width or lo == hi or hi - lo <= max(abs(lo), abs(hi)) * Fraction(1, 10**30):
                    break
            target /= 16
        self.interval = (lo, hi)
        self.log_lo, self.log_hi = log_lo, log_hi
        self.approx = complex(float((lo + hi) / 2))


@dataclass
class ExponentClass:
    """A distinct Lyapunov exponent: eigenvalues of one common modulus."""

    lo: float
    hi: float
    multiplicity: int
    members: list[Eigen] = field(default_factory=list)
    exact_grouping: bool = True

    @property
    def value(self) -> float:
        return 0.5 * (self.lo + self.hi)

    @property
    def is_zero(self) -> bool:
        return self.lo == 0.0 and self.hi == 0.0

    def to_json(self) -> dict:
        return {
            "lo": repr_float(self.lo),
            "hi": repr_float(self.hi),
            "multiplicity": self.multiplicity,
            "kinds": sorted({m.kind for m in self.members}),
            "exact_grouping": self.exact_grouping,
        }


def repr_float(x: float) -> str:
    return format(x, ".17g")


@dataclass
class CertifiedSpectrum:
    dim: int
    det: int
    char_poly: IntPoly
    factors: list[tuple[IntPoly, int]]
    r1: int
    r2: int
    circle_pairs: int
    exponents: list[ExponentClass]
    eigens: list[Eigen]

    @property
    def center_dim(self) -> int:
        return sum(c.multiplicity for c in self.exponents if c.is_zero)

    @property
    def positive(self) -> list[ExponentClass]:
        return [c for c in self.exponents if c.lo > 0]

    @property
    def negative(self) -> list[ExponentClass]:
        return [c for c in self.exponents if c.hi < 0]

    def exponent_sum_bounds(self) -> tuple[float, float]:
        lo = math.fsum(c.multiplicity * c.lo for c in self.exponents)
        hi = math.fsum(c.multiplicity * c.hi for c in self.exponents)
        return lo, hi

    def values(self) -> list[float]:
        """All d exponents with multiplicity, descending."""
        out = []
        for c in self.exponents:
            out += [c.value] * c.multiplicity
        return out

    def to_json(self) -> dict:
        return {
            "dim": self.dim,
            "det": str(self.det),
            "char_poly": [str(c) for c in self.char_poly.coeffs],
            "r1": self.r1,
            "r2": self.r2,
            "circle_pairs": self.circle_pairs,
            "center_dim": self.center_dim,
            "exponents": [c.to_json() for c in self.exponents],
        }


# ---------------------------------------------------------------------------
# classification

def _complex_entries(f: IntPoly, mult: int, n_circle: int, n_complex: int) -> list[Eigen]:
    """Conjugate-pair entries of a squarefree factor, with certified moduli for off-circle pairs."""
    if n_circle + n_complex == 0:
        return []
    with mpmath.workdps(50):
        roots = mpmath.polyroots(list(reversed(f.coeffs)), maxsteps=500, extraprec=200)
        upper = [z for z in roots if mpmath.im(z) > 0]
        if len(upper) != n_circle + n_complex:
            raise NumericalFailure(f"root finder disagrees with the exact complex-pair count for {f}")
        upper.sort(key=lambda z: abs(abs(z) - 1))
        out = [Eigen("circle", f, mult, approx=complex(z)) for z in upper[:n_circle]]
        df = f.derivative()
        n = f.degree
        for z in upper[n_circle:]:
            # Disk |w - z| <= n |f(z)/f'(z)| contains a root; evaluate exactly.
            a, b = _mpf_fraction(mpmath.re(z)), _mpf_fraction(mpmath.im(z))
            fr, fi = _gauss_eval(f, a, b)
            dr, di = _gauss_eval(df, a, b)
            num, den = fr * fr + fi * fi, dr * dr + di * di
            if den == 0:
                raise NumericalFailure("derivative vanishes at an approximate root")
            radius = float(mpmath.sqrt(mpmath.mpf(n * n) * (mpmath.mpf(num.numerator) / num.denominator)
                                       / (mpmath.mpf(den.numerator) / den.denominator))) * (1 + 1e-9)
            modulus = float(abs(z))
            if radius >= 0.5 * abs(modulus - 1) or radius > 1e-14:
                raise NumericalFailure(f"could not certify complex root modulus for {f}")
            e = Eigen("complex", f, mult, approx=complex(z))
            e.log_lo = _down(math.log(_down(modulus - radius)))
            e.log_hi = _up(math.log(_up(modulus + radius)))
            out.append(e)
    return out


def _mpf_fraction(x) -> Fraction:
    sign, man, exp, _ = mpmath.mpf(x)._mpf_
    return (-1) ** sign * Fraction(man) * Fraction(2) ** exp


def _gauss_eval(p: IntPoly, a: Fraction, b: Fraction) -> tuple[Fraction, Fraction]:
    re, im = Fraction(0), Fraction(0)
    for c in reversed(p.coeffs):
        re, im = re * a - im * b + c, re * b + im * a
    return re, im


def classify(L: IntMatrix, width: float = DEFAULT_WIDTH) -> CertifiedSpectrum:
    det = det_exact(L)
    if abs(det) != 1:
        raise PreconditionError(f"not an automorphism: det = {det}", clause="det")
    p = char_poly(L)
    factors = polyalg.squarefree_decomposition(p)
    eigens: list[Eigen] = []
    r1 = r2 = circle = 0
    for f, mult in factors:
        iso = polyalg.sturm_isolate(f)
        n_real = len(iso.real_intervals)
        n_circle = iso.unit_circle_pair_count
        n_complex = iso.complex_pair_count - n_circle
        r1 += mult * n_real
        r2 += mult * iso.complex_pair_count
        circle += mult * n_circle
        for lo, hi in iso.real_intervals:
            e = Eigen("real", f, mult, interval=(lo, hi))
            unit_root = next((u for u in (1, -1) if lo <= u <= hi and f(u) == 0), None)
            if unit_root is not None:
                e.interval = (Fraction(unit_root), Fraction(unit_root))
                e.approx = complex(unit_root)
                eigens.append(e)
                continue
            if f.degree == 1:
                root = Fraction(-f.coeffs[0], f.coeffs[1])
                e.interval = (root, root)
            e.refine(width)
            eigens.append(e)
        eigens += _complex_entries(f, mult, n_circle, n_complex)
    classes = _group(eigens, width)
    return CertifiedSpectrum(
        dim=L.dim, det=det, char_poly=p, factors=factors, r1=r1, r2=r2,
        circle_pairs=circle, exponents=classes, eigens=eigens,
    )


def _same_modulus_real(a: Eigen, b: Eigen) -> Optional[bool]:
    """Exact decision whether two distinct real roots satisfy b = -a (None: undecided yet)."""
    h = qpoly_to_int(qpoly_gcd(list(a.factor.coeffs), list(b.factor.mirror().coeffs)))
    if h.degree <= 0:
        return False
    lo, hi = a.interval
    if lo == hi:
        is_root = h(lo) == 0
    else:
        is_root = polyalg.count_roots(polyalg.sturm_sequence(h), lo, hi) >= 1
    if not is_root:
        return False
    # -a is a root of b.factor; it equals b iff it lies in b's isolating interval
    blo, bhi = b.interval
    if blo <= -hi and -lo <= bhi:
        return True
    if -lo < blo or -hi > bhi:
        if hi < -bhi or lo > -blo or (-lo < blo and -hi < blo) or (-hi > bhi and -lo > bhi):
            return False
    return None


def _overlap(a, b) -> bool:
    return not (a.log_hi < b.log_lo or b.log_hi < a.log_lo)


def _group(eigens: list[Eigen], width: float) -> list[ExponentClass]:
    zero = [e for e in eigens if e.exact_zero]
    rest = [e for e in eigens if not e.exact_zero]
    # separate nonzero exponents from zero, and distinct moduli from each other
    for e in rest:
        w = width
        while e.log_lo <= 0.0 <= e.log_hi:
            w /= 1024
            if e.kind != "real" or w < 1e-300:
                raise NumericalFailure("could not separate an exponent from zero")
            e.refine(w)
    rest.sort(key=lambda e: -(e.log_lo + e.log_hi))
    groups: list[list[Eigen]] = []
    exact = []
    for e in rest:
        placed = False
        for gi, g in enumerate(groups):
            rep = g[0]
            if not _overlap(rep, e):
                continue
            verdict = _decide_equal(rep, e, width)
            if verdict is None:
                g.append(e)
                exact[gi] = False
                placed = True
                break
            if verdict:
                g.append(e)
                placed = True
                break
        if not placed:
            groups.append([e])
            exact.append(True)
    classes = []
    for g, ex in zip(groups, exact):
        if ex:
            lo, hi = max(m.log_lo for m in g), min(m.log_hi for m in g)
        else:
            lo, hi = min(m.log_lo for m in g), max(m.log_hi for m in g)
        classes.append(ExponentClass(lo, hi, sum(m.count for m in g), g, ex))
    if zero:
        classes.append(ExponentClass(0.0, 0.0, sum(m.count for m in zero), zero, True))
    classes.sort(key=lambda c: -c.value)
    return classes


def _decide_equal(a: Eigen, b: Eigen, width: float) -> Optional[bool]:
    """True/False when decided; None when grouped on numerical evidence only."""
    w = width
    for _ in range(40):
        if not _overlap(a, b):
            return False
        if a.kind == "real" and b.kind == "real":
            v = _same_modulus_real(a, b)
            if v is not None:
                return v
        elif w < width * 1e-20:
            return None
        w /= 1024
        a.refine(w)
        b.refine(w)
    return None  # pragma: no cover


# ---------------------------------------------------------------------------
# predicates

def is_ergodic(L: IntMatrix) -> bool:
    _require_automorphism(L)
    return not polyalg.has_root_of_unity_factor(char_poly(L))


def _require_automorphism(L: IntMatrix) -> None:
    det = det_exact(L)
    if abs(det) != 1:
        raise PreconditionError(f"not an automorphism: det = {det}", clause="det")


@dataclass
class PropertyPReport:
    holds: bool
    irreducible: bool
    circle_pairs: int
    r2: int
    dim_ok: bool
    failed: list[str]

    def __bool__(self):
        return self.holds

    def to_json(self) -> dict:
        return {
            "holds": self.holds,
            "irreducible": self.irreducible,
            "circle_pairs": self.circle_pairs,
            "r2": self.r2,
            "dim_at_least_4": self.dim_ok,
            "failed_clauses": self.failed,
        }


def has_property_p(L: IntMatrix, spectrum: Optional[CertifiedSpectrum] = None) -> PropertyPReport:
    """Irreducible, exactly one circle pair, every other eigenvalue real (d >= 4)."""
    sp = spectrum or classify(L)
    irreducible = polyalg.is_irreducible_q(sp.char_poly)
    failed = []
    if L.dim < 4:
        failed.append("d >= 4")
    if not irreducible:
        failed.append("irreducible")
    if sp.circle_pairs != 1:
        failed.append("exactly one circle pair")
    if sp.r2 != 1:
        failed.append("off-circle eigenvalues real")
    return PropertyPReport(not failed, irreducible, sp.circle_pairs, sp.r2, L.dim >= 4, failed)


def spread_spectrum(L: IntMatrix, r: int, spectrum: Optional[CertifiedSpectrum] = None) -> bool:
    """chi_j > r * chi_{j+1} for the positive exponents (requires property (P))."""
    if r < 1:
        raise PreconditionError("r must be a positive integer")
    sp = spectrum or classify(L)
    report = has_property_p(L, sp)
    if not report:
        raise PreconditionError(
            f"spread spectrum needs property (P); failed: {', '.join(report.failed)}", clause="property (P)")
    pos = sp.positive
    for a, b in zip(pos, pos[1:]):
        if not _spread_pair(a, b, r):
            return False
    return True


def _spread_pair(a: ExponentClass, b: ExponentClass, r: int) -> bool:
    ea, eb = a.members[0], b.members[0]
    w = max(a.hi - a.lo, b.hi - b.lo, 1e-300)
    for _ in range(20):
        if ea.log_lo > r * eb.log_hi:
            return True
        if ea.log_hi < r * eb.log_lo:
            return False
        if w < 1e-15:
            break
        w /= 1024
        ea.refine(w)
        eb.refine(w)
    # chi_a == r chi_b exactly iff a = +-b**r; decide on the minimal polynomial of b**r
    power_poly = char_poly(companion(eb.factor) ** r)
    if _power_hits(ea, eb, power_poly, r):
        return False
    raise NumericalFailure("spread comparison undecided at binary64 resolution")  # pragma: no cover


def _power_hits(ea: Eigen, eb: Eigen, power_poly: IntPoly, r: int) -> bool:
    for sign in (1, -1):
        target = power_poly if sign == 1 else power_poly.mirror()
        h = qpoly_to_int(qpoly_gcd(list(ea.factor.coeffs), list(target.coeffs)))
        if h.degree > 0:
            lo, hi = ea.interval
            if polyalg.count_roots(polyalg.sturm_sequence(h), lo, hi) >= 1:
                blo, bhi = eb.interval
                vals = sorted([sign * blo ** r, sign * bhi ** r])
                if vals[0] <= hi and lo <= vals[1]:
                    return True
    return False


def no_three_same_modulus(L: IntMatrix, spectrum: Optional[CertifiedSpectrum] = None) -> bool:
    sp = spectrum or classify(L)
    return all(c.multiplicity <= 2 for c in sp.exponents)


# ---------------------------------------------------------------------------
# eigenframes and projectors

@dataclass
class EigenFrame:
    """High-precision eigendecomposition L = V diag(values) V^{-1} (mpmath)."""

    values: list
    V: mpmath.matrix
    W: mpmath.matrix
    class_of: list[int]  # index into spectrum.exponents for each eigenvalue
    dps: int


def eigen_frame(L: IntMatrix, spectrum: Optional[CertifiedSpectrum] = None, dps: int = 40) -> EigenFrame:
    sp = spectrum or classify(L)
    with mpmath.workdps(dps):
        A = mpmath.matrix([[mpmath.mpf(v) for v in row] for row in L.rows])
        E, ER = mpmath.eig(A)
        try:
            W = mpmath.inverse(ER)
        except ZeroDivisionError:
            raise NumericalFailure("eigenvector matrix is singular (non-diagonalizable L)") from None
        cond = mpmath.mnorm(ER, 1) * mpmath.mnorm(W, 1)
        if cond > mpmath.mpf(10) ** (dps // 2):
            raise NumericalFailure("ill-conditioned eigenbasis (non-diagonalizable L)")
        class_of = []
        for lam in E:
            lm = float(mpmath.log(abs(lam)))
            k = min(range(len(sp.exponents)), key=lambda i: abs(sp.exponents[i].value - lm))
            class_of.append(k)
    for k, c in enumerate(sp.exponents):
        if class_of.count(k) != c.multiplicity:
            raise NumericalFailure("eigenvalues could not be matched to exponent classes")
    return EigenFrame(list(E), ER, W, class_of, dps)


@dataclass
class SpectralProjectors:
    exponents: list[float]
    per_class: list[np.ndarray]
    aggregates: dict[str, np.ndarray]
    idempotency: list[float]
    commutation: list[float]
    sum_residual: float

    @property
    def max_residual(self) -> float:
        return max(self.idempotency + self.commutation + [self.sum_residual])

    def to_json(self) -> dict:
        return {
            "exponents": [repr_float(x) for x in self.exponents],
            "idempotency_residuals": [repr_float(x) for x in self.idempotency],
            "commutation_residuals": [repr_float(x) for x in self.commutation],
            "sum_residual": repr_float(self.sum_residual),
        }


def projectors(L: IntMatrix, spectrum: Optional[CertifiedSpectrum] = None) -> SpectralProjectors:
    sp = spectrum or classify(L)
    frame = eigen_frame(L, sp)
    d = L.dim
    per_class = []
    with mpmath.workdps(frame.dps):
        for k in range(len(sp.exponents)):
            idx = [i for i, c in enumerate(frame.class_of) if c == k]
            P = mpmath.zeros(d, d)
            for i in idx:
                P += frame.V[:, i] * frame.W[i, :]
            per_class.append(np.array([[float(mpmath.re(P[a, b])) for b in range(d)] for a in range(d)]))
    Lf = L.to_numpy()
    I = np.eye(d)
    zero = np.zeros((d, d))
    s = sum((P for c, P in zip(sp.exponents, per_class) if c.hi < 0), zero)
    u = sum((P for c, P in zip(sp.exponents, per_class) if c.lo > 0), zero)
    cc = sum((P for c, P in zip(sp.exponents, per_class) if c.is_zero), zero)
    aggregates = {"s": s, "u": u, "c": cc, "cs": s + cc, "cu": u + cc}
    scale = max(1.0, np.linalg.norm(Lf, 2))
    idem = [float(np.linalg.norm(P @ P - P, 2)) for P in per_class]
    comm = [float(np.linalg.norm(Lf @ P - P @ Lf, 2)) / scale for P in per_class]
    total = float(np.linalg.norm(sum(per_class, zero) - I, 2))
    return SpectralProjectors([c.value for c in sp.exponents], per_class, aggregates, idem, comm, total)
