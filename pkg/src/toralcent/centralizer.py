"""Integer commutant, unit search and the logarithmic embedding.

Floats propose and exact algebra disposes: Lyapunov functionals of
commuting matrices are evaluated in a 40-digit eigenframe of ``L``, while
membership, determinants, commutation and word identities are checked
exactly over the integers.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

import mpmath
import numpy as np

from . import polyalg, spectrum
from .errors import PreconditionError
from .exact import IntMatrix, RatMatrix, char_poly, format_poly, integer_kernel, lattice_coordinates

# word-length caps
SAMPLE_WORD_LENGTH = 6
IDENTITY_WORD_LENGTH = 8
CERTIFICATE_WORD_LENGTH = 4

DEPENDENCE_TOL = 1e-6
TORSION_ORDER_CAP = 60


@dataclass
class Unit:
    matrix: IntMatrix
    name: str
    det: int
    functionals: list[float]  # one value per exponent class of L, center included
    hyperbolic: bool
    coords: Optional[tuple[int, ...]] = None
    status: str = "generator"  # generator | dependent | torsion | unconfirmed
    relation: Optional[str] = None

    def to_json(self, cl: "CommutantLattice") -> dict:
        return {
            "name": self.name,
            "matrix": self.matrix.to_json(),
            "det": str(self.det),
            "functionals": [spectrum.repr_float(x) for x in self.functionals],
            "log_image": [spectrum.repr_float(x) for x in cl.log_image(self.functionals)],
            "hyperbolic": self.hyperbolic,
            "status": self.status,
            "relation": self.relation,
        }


@dataclass
class CommutantLattice:
    ambient: IntMatrix
    basis: list[IntMatrix]
    powers_in_span: bool
    spec: spectrum.CertifiedSpectrum
    units: list[Unit] = field(default_factory=list)
    torsion: list[Unit] = field(default_factory=list)
    radius: Optional[int] = None
    _frame: Optional[spectrum.EigenFrame] = None

    @property
    def rank(self) -> int:
        return len(self.basis)

    @property
    def frame(self) -> spectrum.EigenFrame:
        if self._frame is None:
            self._frame = spectrum.eigen_frame(self.ambient, self.spec)
        return self._frame

    @property
    def weights(self) -> list[int]:
        return [c.multiplicity for c in self.spec.exponents]

    @property
    def center_index(self) -> Optional[int]:
        return next((i for i, c in enumerate(self.spec.exponents) if c.is_zero), None)

    @property
    def excluded_index(self) -> int:
        """The functional dropped from the log embedding: the center, else the last one."""
        c = self.center_index
        return c if c is not None else len(self.spec.exponents) - 1

    @property
    def rank_bound(self) -> int:
        return self.spec.r1 + self.spec.r2 - 1

    @property
    def generators(self) -> list[Unit]:
        return [u for u in self.units if u.status == "generator"]

    @property
    def achieved_rank(self) -> int:
        gens = self.generators
        if not gens:
            return 0
        A = np.array([self.log_image(u.functionals) for u in gens])
        return int(np.linalg.matrix_rank(A, tol=DEPENDENCE_TOL))

    def log_image(self, functionals: Sequence[float]) -> list[float]:
        k = self.excluded_index
        return [x for i, x in enumerate(functionals) if i != k]

    def functionals(self, M: IntMatrix) -> list[float]:
        return _functionals(self.frame, self.spec, M)[0]

    def to_json(self) -> dict:
        return {
            "dim": self.ambient.dim,
            "basis": [b.to_json() for b in self.basis],
            "basis_rank": self.rank,
            "powers_in_span": self.powers_in_span,
            "radius": self.radius,
            "weights": self.weights,
            "excluded_functional": self.excluded_index,
            "rank_bound": self.rank_bound,
            "achieved_rank": self.achieved_rank,
            "units": [u.to_json(self) for u in self.units],
            "torsion": [u.to_json(self) for u in self.torsion],
        }


# ---------------------------------------------------------------------------
# commutant

def commutant_basis(L: IntMatrix) -> CommutantLattice:
    """HNF basis of {X integer : XL = LX}, solved as a d^2 x d^2 integer kernel."""
    d = L.dim
    rows = []
    for i in range(d):
        for j in range(d):
            row = [0] * (d * d)
            for k in range(d):
                row[i * d + k] += L[k, j]
                row[k * d + j] -= L[i, k]
            rows.append(row)
    kernel = integer_kernel(rows)
    basis = [IntMatrix.from_flat(v, d) for v in kernel]
    P = IntMatrix.identity(d)
    in_span = True
    for _ in range(d):
        if lattice_coordinates(kernel, P.flat()) is None:
            in_span = False
        P = P @ L
    spec = spectrum.classify(L)
    return CommutantLattice(L, basis, in_span, spec)


def _require_commuting(L: IntMatrix, M: IntMatrix, what: str = "matrix") -> None:
    if M.dim != L.dim:
        raise PreconditionError(f"{what} has dimension {M.dim}, expected {L.dim}")
    if not L.commutes_with(M):
        raise PreconditionError(f"{what} does not commute with L", clause="commutes")


def _functionals(frame: spectrum.EigenFrame, spec: spectrum.CertifiedSpectrum,
                 M: IntMatrix) -> tuple[list[float], float]:
    """Per-class mean log-modulus of M's eigenvalues in L's eigenframe, with an error estimate."""
    d = M.dim
    with mpmath.workdps(frame.dps):
        A = mpmath.matrix([[mpmath.mpf(v) for v in row] for row in M.rows])
        D = frame.W * A * frame.V
        logs = [mpmath.log(abs(D[i, i])) for i in range(d)]
        scale = max(abs(D[i, i]) for i in range(d))
        off = max((abs(D[i, j]) for i in range(d) for j in range(d) if i != j), default=mpmath.mpf(0))
        err = float(off / scale)
        out = []
        for k in range(len(spec.exponents)):
            vals = [logs[i] for i, c in enumerate(frame.class_of) if c == k]
            out.append(float(mpmath.fsum(vals) / len(vals)))
            err = max(err, float(max(vals) - min(vals)))
    return out, err


@dataclass
class FunctionalValues:
    values: list[float]
    exponents: list[float]
    error: float

    def to_json(self) -> dict:
        return {
            "values": [spectrum.repr_float(x) for x in self.values],
            "classes": [spectrum.repr_float(x) for x in self.exponents],
            "error_bound": spectrum.repr_float(self.error),
        }


def functional_of_element(L: IntMatrix, M: IntMatrix, cl: Optional[CommutantLattice] = None) -> FunctionalValues:
    """chi(M) for every exponent class of L (requires the centralizer-rigidity hypotheses)."""
    _require_commuting(L, M)
    spec = cl.spec if cl else spectrum.classify(L)
    if not polyalg.is_irreducible_q(spec.char_poly):
        raise PreconditionError("L is not irreducible", clause="irreducible")
    if spec.circle_pairs != 1 or spec.center_dim != 2:
        raise PreconditionError("L does not have a 2-dimensional isometric center", clause="2-dim center")
    if not spectrum.no_three_same_modulus(L, spec):
        raise PreconditionError("L has three eigenvalues of the same modulus", clause="no three same modulus")
    frame = cl.frame if cl else spectrum.eigen_frame(L, spec)
    vals, err = _functionals(frame, spec, M)
    return FunctionalValues(vals, [c.value for c in spec.exponents], err)


# ---------------------------------------------------------------------------
# naming

def _poly_in_L(L: IntMatrix, M: IntMatrix) -> Optional[list[Fraction]]:
    """Rational coefficients a with M = sum a_k L^k, using the cyclic vector e_1."""
    d = L.dim
    v = [1] + [0] * (d - 1)
    cols = []
    w = v
    for _ in range(d):
        cols.append(w)
        w = list(L @ w)
    K = RatMatrix([[cols[k][i] for k in range(d)] for i in range(d)])
    try:
        a = K.inverse() @ list(M @ v)
    except PreconditionError:
        return None
    P = IntMatrix.identity(d)
    rows = [[Fraction(0)] * d for _ in range(d)]
    for k in range(d):
        for i in range(d):
            for j in range(d):
                rows[i][j] += a[k] * P[i, j]
        P = P @ L
    if any(rows[i][j] != M[i, j] for i in range(d) for j in range(d)):
        return None
    return list(a)


def poly_name(coeffs: Sequence[Fraction]) -> str:
    """Human-readable polynomial in L, e.g. ``L^2 - 3*L + I``."""
    text = format_poly(coeffs, "L")
    if text == "0":
        return "0"
    # the constant term denotes a multiple of the identity
    terms = text.replace(" - ", " + -").split(" + ")
    out = []
    for t in terms:
        neg = t.startswith("-")
        body = t[1:] if neg else t
        if "L" not in body:
            body = "I" if body == "1" else f"{body}*I"
        out.append(("-" if neg else "") + body)
    s = out[0]
    for t in out[1:]:
        s += f" - {t[1:]}" if t.startswith("-") else f" + {t}"
    return s


def _leading_sign(coeffs: Sequence[Fraction]) -> int:
    for c in reversed(coeffs):
        if c:
            return 1 if c > 0 else -1
    return 1


def word_name(names: Sequence[str], exps: Sequence[int]) -> str:
    parts = []
    for n, e in zip(names, exps):
        if e == 0:
            continue
        base = f"({n})" if " " in n else n
        parts.append(base if e == 1 else f"{base}^{e}")
    if len(parts) == 1 and parts[0].startswith("(") and parts[0].endswith(")"):
        return parts[0][1:-1]
    return " * ".join(parts) if parts else "I"


def word_matrix(mats: Sequence[IntMatrix], exps: Sequence[int], d: int) -> IntMatrix:
    out = IntMatrix.identity(d)
    for m, e in zip(mats, exps):
        if e:
            out = out @ (m ** e)
    return out


def _exponent_vectors(k: int, max_len: int):
    """Nonzero integer vectors ordered by total length, then lexicographically."""
    for total in range(1, max_len + 1):
        found = [e for e in itertools.product(range(-total, total + 1), repeat=k) if sum(map(abs, e)) == total]
        # positive powers before inverses
        found.sort(key=lambda e: (sum(x < 0 for x in e), tuple(-x for x in e)))
        yield from found


# ---------------------------------------------------------------------------
# unit search

def _is_hyperbolic_exact(M: IntMatrix) -> bool:
    for f, _ in polyalg.squarefree_decomposition(char_poly(M)):
        if f(1) == 0 or f(-1) == 0 or polyalg.unit_circle_pairs(f) > 0:
            return False
    return True


def _hyperbolic_from(values: Sequence[float], err: float, M: IntMatrix) -> bool:
    tol = max(1e-12, 10 * err)
    if min(abs(v) for v in values) > tol:
        return True
    return _is_hyperbolic_exact(M)


def _make_unit(cl: CommutantLattice, M: IntMatrix, det: int, coords=None) -> Unit:
    a = _poly_in_L(cl.ambient, M)
    name = poly_name(a) if a is not None else "X" + "".join(map(str, coords or ()))
    vals, err = _functionals(cl.frame, cl.spec, M)
    return Unit(M, name, det, vals, _hyperbolic_from(vals, err, M), coords)


def unit_search(cl: CommutantLattice, radius: int) -> CommutantLattice:
    """Enumerate commutant elements with coordinates in [-radius, radius] and keep the units."""
    if not isinstance(radius, int) or radius < 0:
        raise PreconditionError("radius must be a non-negative integer")
    if not polyalg.is_irreducible_q(cl.spec.char_poly):
        raise PreconditionError("unit search needs an irreducible L", clause="irreducible")
    L = cl.ambient
    d = L.dim
    k = cl.rank
    candidates: dict[IntMatrix, tuple] = {}
    I = IntMatrix.identity(d)
    candidates[I] = (None, 1)
    if radius > 0:
        B = np.array([b.flat() for b in cl.basis], dtype=float)
        grid = range(-radius, radius + 1)
        batch = []
        for coords in itertools.product(grid, repeat=k):
            batch.append(coords)
            if len(batch) == 50000:
                _screen(cl, batch, B, candidates)
                batch = []
        if batch:
            _screen(cl, batch, B, candidates)
    entries = []
    for M, (coords, det) in candidates.items():
        a = _poly_in_L(L, M)
        sign = _leading_sign(a) if a is not None else 1
        if sign < 0:
            continue  # the positive representative of {M, -M} is kept
        entries.append((M, coords, det, a))

    def height(e):
        a = e[3]
        return (sum(abs(c) for c in a), len([c for c in a if c]), max(i for i, c in enumerate(a) if c) if any(a) else 0,
                tuple(a))

    entries.sort(key=height)
    cl.units, cl.torsion = [], []
    for M, coords, det, _ in entries:
        u = _make_unit(cl, M, det, coords)
        image = cl.log_image(u.functionals)
        if max(abs(x) for x in image) < 1e-9:
            if _finite_order(M):
                u.status = "torsion"
                cl.torsion.append(u)
                continue
        _classify_against(cl, u)
        cl.units.append(u)
    minus = -I
    cl.torsion.append(Unit(minus, "-I", minus.det(), [0.0] * len(cl.spec.exponents), False, status="torsion"))
    cl.radius = radius
    return cl


def _screen(cl, batch, B, candidates):
    C = np.array(batch, dtype=float)
    d = cl.ambient.dim
    mats = (C @ B).reshape(-1, d, d)
    dets = np.linalg.det(mats)
    for idx in np.nonzero(np.abs(np.abs(dets) - 1) < 1e-6 * np.maximum(1, np.abs(mats).max(axis=(1, 2))) ** d)[0]:
        coords = batch[idx]
        M = IntMatrix.from_flat([int(round(x)) for x in mats[idx].ravel()], d)
        if M in candidates:
            continue
        det = M.det()
        if abs(det) == 1:
            candidates[M] = (tuple(coords), det)


def _finite_order(M: IntMatrix) -> bool:
    I = IntMatrix.identity(M.dim)
    P = M
    for _ in range(TORSION_ORDER_CAP):
        if P == I or P == -I:
            return True
        P = P @ M
    return False


def _classify_against(cl: CommutantLattice, u: Unit) -> None:
    """Mark ``u`` dependent only when a short exact word identity confirms the float relation."""
    gens = cl.generators
    image = np.array(cl.log_image(u.functionals))
    if not gens:
        u.status = "generator"
        return
    A = np.array([cl.log_image(g.functionals) for g in gens]).T
    c, *_ = np.linalg.lstsq(A, image, rcond=None)
    resid = float(np.linalg.norm(A @ c - image))
    if resid >= DEPENDENCE_TOL:
        u.status = "generator"
        return
    d = cl.ambient.dim
    for m in range(1, IDENTITY_WORD_LENGTH + 1):
        e = np.rint(m * c).astype(int)
        if np.max(np.abs(m * c - e)) > DEPENDENCE_TOL * m:
            continue
        if m + int(np.abs(e).sum()) > IDENTITY_WORD_LENGTH:
            break
        lhs = u.matrix ** m
        rhs = word_matrix([g.matrix for g in gens], e.tolist(), d)
        if lhs == rhs or lhs == -rhs:
            sign = "" if lhs == rhs else "-"
            u.status = "dependent"
            u.relation = f"{_power_name(u.name, m)} = {sign}{word_name([g.name for g in gens], e.tolist())}"
            return
    u.status = "unconfirmed"


def _power_name(name: str, m: int) -> str:
    base = f"({name})" if " " in name else name
    return base if m == 1 else f"{base}^{m}"


# ---------------------------------------------------------------------------
# hyperbolicity, cone search

def is_hyperbolic_element(L: IntMatrix, gamma: IntMatrix, cl: Optional[CommutantLattice] = None) -> bool:
    """No eigenvalue of gamma on the unit circle."""
    _require_commuting(L, gamma, "gamma")
    spec = cl.spec if cl else spectrum.classify(L)
    try:
        frame = cl.frame if cl else spectrum.eigen_frame(L, spec)
    except Exception:
        return _is_hyperbolic_exact(gamma)
    vals, err = _functionals(frame, spec, gamma)
    if err > 1e-6:  # gamma is not diagonal in L's frame (L with repeated eigenvalues)
        return _is_hyperbolic_exact(gamma)
    return _hyperbolic_from(vals, err, gamma)


def _require_center(spec: spectrum.CertifiedSpectrum) -> None:
    if spec.circle_pairs != 1 or spec.center_dim != 2:
        raise PreconditionError("L does not have a 2-dimensional isometric center", clause="2-dim center")


@dataclass
class ConeElement:
    matrix: IntMatrix
    word: str
    exponents: tuple[int, ...]
    functionals: list[float]
    center_logdet: float
    unstable_logdet: float
    ratio: float

    def holds_for(self, Q: float) -> bool:
        """|det(gamma|E^c)| >= |det(gamma|E^u_gamma) / det(gamma|E^c)|^Q."""
        return self.center_logdet >= Q * (self.unstable_logdet - self.center_logdet) - 1e-9

    def to_json(self) -> dict:
        return {
            "word": self.word,
            "exponents": list(self.exponents),
            "matrix": self.matrix.to_json(),
            "functionals": [spectrum.repr_float(x) for x in self.functionals],
            "center_logdet": spectrum.repr_float(self.center_logdet),
            "unstable_logdet": spectrum.repr_float(self.unstable_logdet),
            "domination_ratio": spectrum.repr_float(self.ratio),
        }


def _full_functional_of_word(gens: Sequence[Unit], e: Sequence[int]) -> np.ndarray:
    return sum((x * np.array(g.functionals) for g, x in zip(gens, e)), np.zeros(len(gens[0].functionals)))


def cone_search_center_dominating(cl: CommutantLattice, units: Optional[Sequence[Unit]] = None,
                                  max_box: int = 8) -> Optional[ConeElement]:
    """Find gamma with every non-center functional negative; None when the box is exhausted."""
    _require_center(cl.spec)
    gens = list(units) if units is not None else cl.generators
    gens = [g for g in gens if max(abs(x) for x in cl.log_image(g.functionals)) > 1e-9]
    if not gens:
        return None
    c = cl.center_index
    d = cl.ambient.dim
    weights = cl.weights
    for box in range(1, max_box + 1):
        for e in _box_shell(len(gens), box):
            vals = _full_functional_of_word(gens, e)
            if all(v < -1e-9 for i, v in enumerate(vals) if i != c):
                M = word_matrix([g.matrix for g in gens], e, d)
                exact_vals = cl.functionals(M)
                if not all(v < 0 for i, v in enumerate(exact_vals) if i != c):
                    continue
                center = weights[c] * exact_vals[c]
                unstable = sum(w * v for w, v in zip(weights, exact_vals) if v > 0)
                return ConeElement(M, word_name([g.name for g in gens], e), tuple(e), exact_vals,
                                   center, unstable, math.exp(unstable - center))
    return None


def _box_shell(k: int, box: int):
    """Vectors with max|e| == box, ordered by total length then lexicographically."""
    shell = [e for e in itertools.product(range(-box, box + 1), repeat=k) if max(map(abs, e)) == box]
    shell.sort(key=lambda e: (sum(map(abs, e)), e))
    return shell


# ---------------------------------------------------------------------------
# subgroup analyses

def _sample_words(k: int, max_len: int):
    yield from _exponent_vectors(k, max_len)


def _multiplicative_rank(images: Sequence[Sequence[float]]) -> int:
    if not images:
        return 0
    return int(np.linalg.matrix_rank(np.array(images), tol=DEPENDENCE_TOL))


@dataclass
class NoHyperbolicReport:
    witness: Optional[str]
    witness_matrix: Optional[IntMatrix]
    sampled: int
    pairing_max_error: float
    pairing_holds: bool
    rank: int
    rank_bound: int

    @property
    def compliant(self) -> bool:
        return self.witness is None and self.pairing_holds and self.rank <= self.rank_bound

    def to_json(self) -> dict:
        return {
            "hyperbolic_witness": self.witness,
            "witness_matrix": self.witness_matrix.to_json() if self.witness_matrix else None,
            "sampled_words": self.sampled,
            "pairing_max_error": spectrum.repr_float(self.pairing_max_error),
            "pairing_holds": self.pairing_holds,
            "rank": self.rank,
            "rank_bound": self.rank_bound,
            "compliant": self.compliant,
        }


def _named_generators(cl: CommutantLattice, generators: Sequence[IntMatrix]) -> list[Unit]:
    out = []
    for i, g in enumerate(generators):
        _require_commuting(cl.ambient, g, f"generator {i}")
        det = g.det()
        if abs(det) != 1:
            raise PreconditionError(f"generator {i} is not invertible over Z (det = {det})")
        out.append(_make_unit(cl, g, det))
    for a, b in itertools.combinations(generators, 2):
        if not a.commutes_with(b):
            raise PreconditionError("generators do not commute pairwise", clause="commutes")
    return out


def no_hyperbolic_analysis(L: IntMatrix, generators: Sequence[IntMatrix],
                           cl: Optional[CommutantLattice] = None,
                           max_len: int = SAMPLE_WORD_LENGTH) -> NoHyperbolicReport:
    cl = cl or commutant_basis(L)
    gens = _named_generators(cl, generators)
    d = L.dim
    n_cls = len(cl.spec.exponents)
    rank = _multiplicative_rank([cl.log_image(g.functionals) for g in gens])
    bound = (d - 2) // 2
    sampled = 0
    worst = 0.0
    names = [g.name for g in gens]
    for e in _sample_words(len(gens), max_len):
        sampled += 1
        vals = _full_functional_of_word(gens, e)
        if min(abs(v) for v in vals) > 1e-9:
            M = word_matrix([g.matrix for g in gens], e, d)
            return NoHyperbolicReport(word_name(names, e), M, sampled, worst, False, rank, bound)
        M = None
        if min(abs(v) for v in (vals[i] for i in range(n_cls) if i != cl.center_index)) <= 1e-9:
            M = word_matrix([g.matrix for g in gens], e, d)
            if _is_hyperbolic_exact(M):
                return NoHyperbolicReport(word_name(names, e), M, sampled, worst, False, rank, bound)
        # class j pairs with class n-1-j (lambda_j with lambda_j^{-1})
        for j in range(n_cls // 2):
            worst = max(worst, abs(vals[j] + vals[n_cls - 1 - j]))
    return NoHyperbolicReport(None, None, sampled, worst, worst <= 1e-8, rank, bound)


@dataclass
class BoundedSubgroup:
    generators: list[IntMatrix]
    words: list[str]
    exponent_vectors: list[tuple[int, ...]]
    omega_norm: float
    bound: float
    certificate_words: int
    certificate_max_violation: float
    passed: bool

    def to_json(self) -> dict:
        return {
            "generators": [g.to_json() for g in self.generators],
            "words": self.words,
            "exponent_vectors": [list(e) for e in self.exponent_vectors],
            "omega_norm_bound": spectrum.repr_float(self.omega_norm),
            "q_bound": spectrum.repr_float(self.bound),
            "certificate_words": self.certificate_words,
            "certificate_max_violation": spectrum.repr_float(self.certificate_max_violation),
            "certificate_passed": self.passed,
        }


def bounded_centralizer_subgroup(cl: CommutantLattice, r: int, Q: float,
                                 units: Optional[Sequence[Unit]] = None) -> BoundedSubgroup:
    """Rank-r subgroup with chi_0(g) <= Q/(4(Q+1)) * sum_j d_j |chi_j(g)| for all its elements."""
    _require_center(cl.spec)
    if Q <= 0:
        raise PreconditionError("Q must be positive")
    gens = list(units) if units is not None else cl.generators
    n = cl.rank_bound
    if _multiplicative_rank([cl.log_image(g.functionals) for g in gens]) < n or len(gens) != n:
        raise PreconditionError(f"unit rank {len(gens)} is deficient (need {n})", clause="full unit rank")
    if not 1 <= r < n:
        raise PreconditionError(f"need 1 <= r < {n}, got r = {r}", clause="rank")
    c = cl.center_index
    w = np.array(cl.weights, dtype=float)
    F = np.array([g.functionals for g in gens]).T  # classes x generators
    A = w[:, None] * F
    inv_norm = 1.0 / np.linalg.svd(A, compute_uv=False)[-1]
    target = Q / (4 * (Q + 1))
    chi0 = F[c]
    den = 1
    while True:
        approx = [Fraction(float(x)).limit_denominator(den) for x in chi0]
        delta = np.array([float(a) - x for a, x in zip(approx, chi0)])
        omega_norm = float(np.linalg.norm(delta)) * inv_norm
        if omega_norm <= target:
            break
        den *= 2
    kernel = integer_kernel([approx])
    chosen = [tuple(v) for v in kernel[:r]]
    d = cl.ambient.dim
    mats = [word_matrix([g.matrix for g in gens], e, d) for e in chosen]
    words = [word_name([g.name for g in gens], e) for e in chosen]
    for M in mats:
        _require_commuting(cl.ambient, M, "subgroup generator")
    # certificate on the finite word ball in the new generators
    sub = [np.array(list(e), dtype=float) @ F.T for e in chosen]
    count = 0
    worst = -math.inf
    for e in _exponent_vectors(r, CERTIFICATE_WORD_LENGTH):
        vals = sum((x * s for x, s in zip(e, sub)), np.zeros(F.shape[0]))
        lhs = vals[c]
        rhs = target * float(np.sum(w * np.abs(vals)))
        worst = max(worst, lhs - rhs)
        count += 1
    return BoundedSubgroup(mats, words, chosen, omega_norm, target, count, float(worst), bool(worst <= 1e-8))


def higher_rank_check(L: IntMatrix, generators: Sequence[IntMatrix],
                      cl: Optional[CommutantLattice] = None) -> bool:
    """L lies in the span of the generators' log images and their multiplicative rank is >= 2."""
    cl = cl or commutant_basis(L)
    if not polyalg.is_irreducible_q(cl.spec.char_poly):
        raise PreconditionError("L is not irreducible", clause="irreducible")
    gens = _named_generators(cl, generators)
    images = [cl.log_image(g.functionals) for g in gens]
    if _multiplicative_rank(images) < 2:
        return False
    A = np.array(images).T
    target = np.array(cl.log_image(cl.functionals(L)))
    c, *_ = np.linalg.lstsq(A, target, rcond=None)
    return float(np.linalg.norm(A @ c - target)) < DEPENDENCE_TOL
