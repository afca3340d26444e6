"""Property-(P) automorphisms from totally real seed polynomials.

A monic seed p of degree n with real roots, one of them in (-2, 2), gives
q(t) = t^n p(t + 1/t): the root in (-2, 2) becomes a conjugate pair on the
unit circle and every other root u becomes a real pair lambda, 1/lambda with
|lambda| + 1/|lambda| = |u|.  The companion matrix of q is the output.
"""

from __future__ import annotations

import itertools
import math
import time
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

import numpy as np

from . import polyalg, spectrum
from .errors import PreconditionError
from .exact import IntMatrix, IntPoly, char_poly, companion, det_exact, integer_kernel

LOG2 = math.log(2.0)


@dataclass
class Budget:
    max_coeff: int = 60
    max_candidates: int = 5_000_000
    seconds: float = 60.0
    max_power: int = 12

    def to_json(self) -> dict:
        return {"max_coeff": self.max_coeff, "max_candidates": self.max_candidates,
                "seconds": self.seconds, "max_power": self.max_power}


@dataclass
class BuildResult:
    matrix: IntMatrix
    seed: IntPoly
    char_poly: IntPoly
    spectrum: spectrum.CertifiedSpectrum
    property_p: spectrum.PropertyPReport
    seed_log_bounds: list[tuple[float, float]]
    exponent_bound_ok: bool
    power: int = 1
    spread: Optional[bool] = None
    r: Optional[int] = None
    candidates_examined: int = 0

    def to_json(self) -> dict:
        return {
            "matrix": self.matrix.to_json(),
            "seed": [str(c) for c in self.seed.coeffs],
            "seed_text": str(self.seed).replace("t", "z"),
            "char_poly": [str(c) for c in self.char_poly.coeffs],
            "char_poly_text": str(self.char_poly),
            "det": str(self.spectrum.det),
            "q_irreducible": self.property_p.irreducible,
            "property_p": self.property_p.to_json(),
            "poly_in_tn": polyalg.poly_in_tn(self.char_poly).n,
            "exponents": [c.to_json() for c in self.spectrum.exponents],
            "seed_log_roots": [[spectrum.repr_float(a), spectrum.repr_float(b)] for a, b in self.seed_log_bounds],
            "exponent_bound_ok": self.exponent_bound_ok,
            "power": self.power,
            "spread_r": self.r,
            "spread": self.spread,
            "candidates_examined": self.candidates_examined,
        }


def check_seed(p: IntPoly) -> None:
    """Raise a clause-specific PreconditionError unless p is a valid seed."""
    if p.degree < 1 or not p.is_monic:
        raise PreconditionError(f"seed {p} is not monic", clause="monic")
    if p.degree < 2:
        raise PreconditionError(f"seed degree {p.degree} gives d = {2 * p.degree} < 4", clause="d >= 4")
    if not polyalg.is_irreducible_q(p):
        raise PreconditionError(f"seed {p} is reducible over Q", clause="irreducible")
    iso = polyalg.sturm_isolate(p)
    if iso.complex_pair_count:
        raise PreconditionError(f"seed {p} is not totally real", clause="totally real")
    if abs(p.coeffs[0]) != 1:
        raise PreconditionError(f"seed constant term {p.coeffs[0]} is not +-1", clause="constant term +-1")
    if p(2) == 0 or p(-2) == 0:
        raise PreconditionError("seed has a root at +-2", clause="root at +-2")
    inside = polyalg.count_roots_open(p, -2, 2)
    if inside != 1:
        raise PreconditionError(f"{'two' if inside == 2 else inside} roots in (-2,2)" if inside else
                                "no root in (-2,2)", clause="one root in (-2,2)")


def _seed_log_bounds(p: IntPoly) -> list[tuple[float, float]]:
    """Certified bounds of log|u| for the seed roots outside [-2, 2], descending."""
    out = []
    for lo, hi in polyalg.real_roots(p, Fraction(1, 10**18)):
        if lo >= 2 or hi <= -2:
            out.append(spectrum._log_abs_bounds(lo, hi))
    out.sort(key=lambda b: -b[0])
    return out


def build_from_seed(p: IntPoly) -> BuildResult:
    check_seed(p)
    q = polyalg.trace_poly_expand(p)
    L = companion(q)
    sp = spectrum.classify(L)
    report = spectrum.has_property_p(L, sp)
    if not report or abs(det_exact(L)) != 1:  # pragma: no cover - excluded by the seed checks
        raise PreconditionError(f"constructed matrix fails property (P): {report.failed}", clause="property (P)")
    x = _seed_log_bounds(p)
    ok = all(c.lo <= xh + 1e-12 and c.hi >= xl - LOG2 - 1e-12 for c, (xl, xh) in zip(sp.positive, x))
    return BuildResult(L, p, q, sp, report, x, ok and len(x) == len(sp.positive))


# ---------------------------------------------------------------------------
# spread search

def _predicted_exponents(roots: np.ndarray) -> np.ndarray:
    """acosh(|u|/2) for the roots outside [-2, 2], descending."""
    big = np.sort(np.abs(roots[np.abs(roots) > 2]))[::-1]
    return np.arccosh(big / 2)


def _spread_ok(chi: np.ndarray, r: int, margin: float = 1e-6) -> bool:
    return bool(np.all(chi[:-1] > r * chi[1:] * (1 + margin)))


def _seed_shell(n: int, m: int):
    """Seeds z^n + c_{n-1} z^{n-1} + ... + c_1 z + c_0 with max|c_i| == m (i >= 1), c_0 = +-1."""
    for mid in itertools.product(range(-m, m + 1), repeat=n - 1):
        if max(map(abs, mid)) != m:
            continue
        for c0 in (1, -1):
            yield (c0,) + tuple(reversed(mid)) + (1,)


def _prefilter(coeffs: list[tuple[int, ...]], n: int):
    """Numerical screen: real roots, exactly one in (-2, 2). Returns (index, roots) pairs."""
    C = np.zeros((len(coeffs), n, n))
    arr = np.array(coeffs, dtype=float)
    C[:, 1:, :-1] = np.eye(n - 1)
    C[:, :, -1] = -arr[:, :n]
    roots = np.linalg.eigvals(C)
    real = np.all(np.abs(roots.imag) < 1e-6, axis=1)
    re = roots.real
    inside = np.sum(np.abs(re) < 2 - 1e-9, axis=1)
    border = np.any(np.abs(np.abs(re) - 2) <= 1e-9, axis=1)
    ok = real & (inside == 1) & ~border
    return [(i, re[i]) for i in np.nonzero(ok)[0]]


@dataclass
class _Best:
    seed: Optional[IntPoly] = None
    clause: str = "no valid seed found"
    score: float = -math.inf


def construct_spread(d: int, r: int, budget: Optional[Budget] = None) -> BuildResult:
    """First seed in deterministic order whose matrix has property (P) and r-spread spectrum."""
    if d % 2:
        raise PreconditionError("d must be even", clause="even d")
    if d < 4:
        raise PreconditionError("d must be at least 4", clause="d >= 4")
    if r < 1:
        raise PreconditionError("r must be a positive integer", clause="r >= 1")
    budget = budget or Budget()
    n = d // 2
    start = time.monotonic()
    examined = 0
    best = _Best()
    for m in range(1, budget.max_coeff + 1):
        shell = list(_seed_shell(n, m))
        for lo in range(0, len(shell), 20000):
            chunk = shell[lo:lo + 20000]
            for i, roots in _prefilter(chunk, n):
                result = _try_seed(IntPoly(chunk[i]), roots, r, budget, best)
                if result is not None:
                    result.candidates_examined = examined + i + 1
                    return result
            examined += len(chunk)
            if examined >= budget.max_candidates or time.monotonic() - start > budget.seconds:
                return _exhausted(d, r, best)
    return _exhausted(d, r, best)


def _exhausted(d, r, best: _Best):
    if best.seed is not None:
        where = f"; best candidate {str(best.seed).replace('t', 'z')} fails: {best.clause}"
    else:
        where = "; best candidate: none (no seed passed the numerical root screen)"
    raise PreconditionError(f"budget exhausted for d={d}, r={r}{where}", clause="budget")


def _try_seed(p: IntPoly, roots: np.ndarray, r: int, budget: Budget, best: _Best) -> Optional[BuildResult]:
    chi = _predicted_exponents(roots)
    logs = np.sort(np.log(np.abs(roots[np.abs(roots) > 2])))[::-1]
    power = 1
    if not _spread_ok(chi, r):
        score = float(np.min(chi[:-1] / chi[1:])) if len(chi) > 1 else math.inf
        if score > best.score:
            best.seed, best.clause, best.score = p, f"spread ratio {score:.4g} <= {r}", score
        # powering the seed unit scales log|u| by N; chi_j / chi_{j+1} tends to the log-root ratio
        if len(logs) < 2 or not np.all(logs[:-1] > r * logs[1:] * (1 + 1e-6)):
            return None
        for N in range(2, budget.max_power + 1):
            big = np.abs(roots) ** N
            if np.count_nonzero(big < 2) != 1:
                return None
            if _spread_ok(np.sort(np.arccosh(big[big > 2] / 2))[::-1], r):
                power = N
                break
        else:
            return None
        p = char_poly(companion(p) ** power)
    try:
        result = build_from_seed(p)
    except PreconditionError as exc:
        if best.seed is None:
            best.seed, best.clause = p, str(exc)
        return None
    result.power = power
    result.r = r
    result.spread = spectrum.spread_spectrum(result.matrix, r, result.spectrum)
    if not result.spread:
        return None
    return result


# ---------------------------------------------------------------------------
# symplectic structure

@dataclass
class SymplecticForm:
    J: IntMatrix
    solution_dim: int
    combination: tuple[int, ...]
    det: int
    pfaffian: int

    def to_json(self) -> dict:
        return {
            "J": self.J.to_json(),
            "solution_space_dim": self.solution_dim,
            "combination": list(self.combination),
            "det": str(self.det),
            "pfaffian": str(self.pfaffian),
        }


def pfaffian(J: IntMatrix) -> int:
    """Exact Pfaffian by expansion along the first row."""
    def pf(idx: tuple[int, ...]) -> int:
        if not idx:
            return 1
        i, rest = idx[0], idx[1:]
        total = 0
        for k, j in enumerate(rest):
            a = J[i, j]
            if a:
                total += (-1) ** k * a * pf(rest[:k] + rest[k + 1:])
        return total
    if J.dim % 2:
        return 0
    return pf(tuple(range(J.dim)))


def symplectic_form(L: IntMatrix, max_coeff: int = 3) -> SymplecticForm:
    """Primitive integer antisymmetric J with L^T J L = J and det J != 0."""
    d = L.dim
    if d % 2:
        raise PreconditionError("symplectic forms need even d", clause="even d")
    pairs = [(i, j) for i in range(d) for j in range(i + 1, d)]
    Lt = L.T
    cols = []
    for i, j in pairs:
        E = [[0] * d for _ in range(d)]
        E[i][j], E[j][i] = 1, -1
        E = IntMatrix(E)
        cols.append((Lt @ E @ L - E).flat())
    system = [[c[k] for c in cols] for k in range(d * d)]
    kernel = integer_kernel(system)
    if not kernel:
        raise PreconditionError("no nonzero invariant antisymmetric form", clause="nondegenerate solution")
    forms = [_antisym(v, pairs, d) for v in kernel]
    for total in range(1, max_coeff * len(forms) + 1):
        for coeffs in itertools.product(range(-max_coeff, max_coeff + 1), repeat=len(forms)):
            if sum(map(abs, coeffs)) != total or next(c for c in coeffs if c) < 0:
                continue
            J = IntMatrix.zero(d)
            for c, F in zip(coeffs, forms):
                if c:
                    J = J + F * c
            det = J.det()
            if det != 0:
                g = math.gcd(*J.flat())
                J = IntMatrix([[v // g for v in row] for row in J.rows])
                det = J.det()
                assert J.T == -J and Lt @ J @ L == J
                return SymplecticForm(J, len(forms), coeffs, det, pfaffian(J))
    raise PreconditionError("no nondegenerate solution in the search box", clause="nondegenerate solution")


def _antisym(v, pairs, d) -> IntMatrix:
    rows = [[0] * d for _ in range(d)]
    for x, (i, j) in zip(v, pairs):
        rows[i][j], rows[j][i] = x, -x
    return IntMatrix(rows)
