"""Perturbed toral automorphisms and the numerical solvers built on them.

A map is given by its lift F(x) = L x + eps * v(x) with a finite Fourier
displacement v.  Points on the torus are stored in [-1/2, 1/2)^d
(round-to-nearest reduction).  Twisted cohomological equations are solved
by truncated geometric series whose tails are bounded a priori.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from . import spectrum
from .errors import NumericalFailure, ParseError, PreconditionError
from .exact import IntMatrix, det_exact, hnf_basis, parse_matrix

DEFAULT_SEED = 20240601
NEWTON_STEP_TOL = 1e-13
NEWTON_MAX_ITER = 50
UNSTABLE_TAIL_SHARE = 1e-2  # unstable tails are pushed this far below the stable ones


def wrap(x: np.ndarray) -> np.ndarray:
    """Representative of x mod Z^d in [-1/2, 1/2)."""
    return x - np.floor(x + 0.5)


def torus_distance(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    return np.linalg.norm(wrap(x - y), axis=-1)


class _Neumaier:
    """Compensated running sum of numpy arrays."""

    def __init__(self, shape):
        self.s = np.zeros(shape)
        self.c = np.zeros(shape)

    def add(self, x: np.ndarray) -> None:
        t = self.s + x
        big = np.abs(self.s) >= np.abs(x)
        self.c += np.where(big, (self.s - t) + x, (x - t) + self.s)
        self.s = t

    @property
    def value(self) -> np.ndarray:
        return self.s + self.c


# ---------------------------------------------------------------------------
# maps

@dataclass
class Mode:
    k: np.ndarray
    a: np.ndarray
    b: np.ndarray

    def to_json(self) -> dict:
        return {"k": [int(v) for v in self.k], "a": [float(v) for v in self.a], "b": [float(v) for v in self.b]}


class _MapBase:
    """Shared behaviour of torus maps given by a lift and its derivative."""

    linear: IntMatrix
    Lf: np.ndarray

    def displacement(self, x):  # pragma: no cover - interface
        raise NotImplementedError

    def jacobian(self, x):  # pragma: no cover - interface
        raise NotImplementedError

    def lift(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return x @ self.Lf.T + self.displacement(x)

    def __call__(self, x: np.ndarray) -> np.ndarray:
        """The map on the torus (reduced coordinates)."""
        return wrap(self.lift(x))

    def power(self, n: int) -> "_MapBase":
        return Iterate(self, n)

    def inverse_lift(self, y: np.ndarray) -> np.ndarray:
        """Newton solve of F(x) = y, seeded at L^{-1} y."""
        y = np.asarray(y, dtype=float)
        Linv = self.linear.inverse().to_numpy()
        x = y @ Linv.T
        for _ in range(NEWTON_MAX_ITER):
            r = self.lift(x) - y
            J = self.jacobian(x)
            step = np.linalg.solve(J, r[..., None])[..., 0]
            x = x - step
            if np.max(np.abs(step), initial=0.0) < NEWTON_STEP_TOL:
                return x
        raise NumericalFailure("Newton inversion of the lift did not converge")


class TorusMap(_MapBase):
    """F(x) = L x + eps * v(x), v a finite trigonometric sum normalized to v(0) = 0."""

    def __init__(self, linear: IntMatrix, modes: Sequence[Mode] = (), epsilon: float = 0.0,
                 normalize: bool = True, check_margin: bool = True):
        self.linear = linear
        d = linear.dim
        if abs(det_exact(linear)) != 1:
            raise PreconditionError("linear part is not in GL(d, Z)", clause="det")
        self.Lf = linear.to_numpy()
        self.modes = list(modes)
        for m in self.modes:
            if len(m.k) != d or len(m.a) != d or len(m.b) != d:
                raise ParseError("mode vectors must have length d")
        self.K = np.array([m.k for m in self.modes], dtype=float).reshape(-1, d)
        self.A = np.array([m.a for m in self.modes], dtype=float).reshape(-1, d)
        self.B = np.array([m.b for m in self.modes], dtype=float).reshape(-1, d)
        self.epsilon = float(epsilon)
        self.normalize = normalize
        self.v0 = self.A.sum(axis=0) if normalize else np.zeros(d)
        if check_margin:
            self.check_margin()

    @classmethod
    def from_json(cls, obj: dict, **kw) -> "TorusMap":
        if not isinstance(obj, dict) or "linear" not in obj:
            raise ParseError('map config needs a "linear" matrix')
        L = parse_matrix(obj["linear"])
        d = L.dim
        modes = []
        for i, m in enumerate(obj.get("modes", [])):
            try:
                k = [int(v) for v in m["k"]]
                a = [float(v) for v in m.get("a", [0.0] * d)]
                b = [float(v) for v in m.get("b", [0.0] * d)]
            except (KeyError, TypeError, ValueError) as exc:
                raise ParseError(f"mode {i}: {exc}") from None
            modes.append(Mode(np.array(k), np.array(a), np.array(b)))
        eps = obj.get("epsilon", 0.0)
        if not isinstance(eps, (int, float)) or isinstance(eps, bool):
            raise ParseError("epsilon must be a number")
        return cls(L, modes, float(eps), normalize=obj.get("normalize", True), **kw)

    def to_json(self) -> dict:
        return {"linear": self.linear.to_json(), "epsilon": self.epsilon,
                "modes": [m.to_json() for m in self.modes], "normalize": self.normalize}

    # displacement and derivatives

    def v(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if not self.modes:
            return np.zeros_like(x)
        phase = 2 * np.pi * (x @ self.K.T)
        return np.cos(phase) @ self.A + np.sin(phase) @ self.B - self.v0

    def dv(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        d = self.linear.dim
        if not self.modes:
            return np.zeros(x.shape[:-1] + (d, d))
        phase = 2 * np.pi * (x @ self.K.T)
        coef = 2 * np.pi * (-np.sin(phase)[..., :, None] * self.A + np.cos(phase)[..., :, None] * self.B)
        return np.einsum("...mi,mj->...ij", coef, self.K)

    def displacement(self, x: np.ndarray) -> np.ndarray:
        if self.epsilon == 0.0:
            return np.zeros_like(np.asarray(x, dtype=float))
        return self.epsilon * self.v(x)

    def jacobian(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        J = np.broadcast_to(self.Lf, x.shape[:-1] + self.Lf.shape).copy()
        if self.epsilon:
            J += self.epsilon * self.dv(x)
        return J

    @property
    def sup_v(self) -> float:
        """Upper bound of sup |v| (Euclidean)."""
        s = sum(np.linalg.norm(a) + np.linalg.norm(b) for a, b in zip(self.A, self.B))
        return float(s + np.linalg.norm(self.v0))

    @property
    def sup_dv(self) -> float:
        """Upper bound of sup ||Dv|| (operator 2-norm)."""
        return float(sum(2 * np.pi * (np.linalg.norm(a) + np.linalg.norm(b)) * np.linalg.norm(k)
                         for k, a, b in zip(self.K, self.A, self.B)))

    def check_margin(self) -> None:
        eta = self.epsilon * self.sup_dv
        if eta == 0.0:
            return
        sp = spectrum.classify(self.linear)
        gaps = [(abs(math.exp(c.value) - 1), c.value) for c in sp.exponents if not c.is_zero]
        inv_norm = np.linalg.norm(self.linear.inverse().to_numpy(), 2)
        if gaps:
            gap, chi = min(gaps)
            if eta >= 0.5 * gap:
                # the margin implies every series contraction rate is < 1, so this is where it fails
                raise PreconditionError(
                    f"perturbation too large for class chi = {chi:.6g}: eps*sup|Dv| = {eta:.4g} "
                    f">= 0.5*|e^chi - 1| = {0.5 * gap:.4g}", clause="margin")
        if eta >= 1 / inv_norm:
            raise PreconditionError(f"eps*sup|Dv| = {eta:.4g} may make DF singular", clause="margin")


class Iterate(_MapBase):
    """f^n for a base map f (n may be negative)."""

    def __init__(self, base: _MapBase, n: int):
        if isinstance(base, Iterate):
            base, n = base.base, base.n * n
        self.base = base
        self.n = int(n)
        self.linear = base.linear ** self.n
        self.Lf = self.linear.to_numpy()

    @property
    def epsilon(self) -> float:
        return self.base.epsilon

    def displacement(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        D = np.zeros_like(x)
        if self.n >= 0:
            for _ in range(self.n):
                D = D @ self.base.Lf.T + self.base.displacement(x)
                x = self.base.lift(x)
        else:
            Linv = self.base.linear.inverse().to_numpy()
            for _ in range(-self.n):
                y = self.base.inverse_lift(x)
                D = (D - self.base.displacement(y)) @ Linv.T
                x = y
        return D

    def lift(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.n >= 0:
            for _ in range(self.n):
                x = self.base.lift(x)
        else:
            for _ in range(-self.n):
                x = self.base.inverse_lift(x)
        return x

    def jacobian(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        d = self.linear.dim
        J = np.broadcast_to(np.eye(d), x.shape[:-1] + (d, d)).copy()
        if self.n >= 0:
            for _ in range(self.n):
                J = self.base.jacobian(x) @ J
                x = self.base.lift(x)
        else:
            for _ in range(-self.n):
                y = self.base.inverse_lift(x)
                J = np.linalg.inv(self.base.jacobian(y)) @ J
                x = y
        return J

    def inverse_lift(self, y: np.ndarray) -> np.ndarray:
        return Iterate(self.base, -self.n).lift(y)


def lift_eval(f: _MapBase, x) -> np.ndarray:
    return f.lift(np.asarray(x, dtype=float))


def stratified_sample(d: int, per_axis: int = 64, seed: int = DEFAULT_SEED) -> np.ndarray:
    """per_axis^min(d,3) points: one jittered point per cell in the first three axes."""
    rng = np.random.default_rng(seed)
    m = min(d, 3)
    grid = np.stack(np.meshgrid(*[np.arange(per_axis)] * m, indexing="ij"), axis=-1).reshape(-1, m)
    pts = (grid + rng.random(grid.shape)) / per_axis
    if d > m:
        pts = np.hstack([pts, rng.random((len(pts), d - m))])
    return wrap(pts)


def _commutation_defect(f: _MapBase, g: _MapBase, x: np.ndarray) -> float:
    return float(np.max(torus_distance(f.lift(g.lift(x)), g.lift(f.lift(x)))))


# ---------------------------------------------------------------------------
# twisted series

@dataclass
class TwistedSeries:
    """phi(x) = sum_{n=0}^{N_f} A_n w(f^n x) - sum_{n=1}^{N_b} B_n w(f^{-n} x), w = f's displacement."""

    f: _MapBase
    forward: list[np.ndarray]
    backward: list[np.ndarray]

    def evaluate(self, x: np.ndarray) -> np.ndarray:
        x = wrap(np.asarray(x, dtype=float))
        acc = _Neumaier(x.shape)
        y = x
        for A in self.forward:
            acc.add(self.f.displacement(y) @ A.T)
            y = wrap(self.f.lift(y))
        y = x
        for B in self.backward:
            y = wrap(self.f.inverse_lift(y))
            acc.add(-(self.f.displacement(y) @ B.T))
        return acc.value

    def to_json(self) -> dict:
        return {"forward_terms": len(self.forward), "backward_terms": len(self.backward)}


def _series_ops(L: IntMatrix, P: np.ndarray, expanding: bool, count: int) -> list[np.ndarray]:
    """A_n = P L^{-(n+1)} (expanding) or B_n = P L^{n-1} (contracting), re-projected each step."""
    step = L.inverse().to_numpy() if expanding else L.to_numpy()
    ops = []
    A = P @ step if expanding else P.copy()
    for _ in range(count):
        ops.append(A)
        A = P @ (step @ A)
    return ops


def _truncation(L: IntMatrix, P: np.ndarray, expanding: bool, rate: float, w_sup: float,
                tol: float) -> tuple[int, float, float]:
    """Smallest N with C * w_sup * rho^{N+1} / (1 - rho) <= tol; returns (N, bound, C)."""
    if rate >= 1:
        raise PreconditionError("contraction rate >= 1", clause="perturbation")
    probe = _series_ops(L, P, expanding, 64)
    # C = sup_n ||op_n|| / rho_0^{n+1} with rho_0 the unperturbed rate of the class
    norms = [np.linalg.norm(A, 2) for A in probe]
    rho0 = max(norms[-1] / norms[-2], 1e-300) if norms[-2] > 0 else 0.0
    rho0 = min(max(rho0, 1e-300), rate)
    C = 1.01 * max(n / rho0 ** (i + 1) for i, n in enumerate(norms)) if rho0 > 0 else 1.0
    if w_sup == 0.0:
        return 0, 0.0, C
    N = 0
    while True:
        bound = C * w_sup * rate ** (N + 1) / (1 - rate)
        if bound <= tol or N > 100000:
            return N, bound, C
        N += 1


@dataclass
class CocycleSolution:
    exponent_class: int
    chi: float
    direction: str
    truncation_N: int
    series: TwistedSeries
    projector: np.ndarray
    rho: float
    tail_bound: float
    rounding_bound: float
    residual_sup: float
    samples: int
    tol: float
    seed: int

    @property
    def bound(self) -> float:
        return self.tail_bound + self.rounding_bound

    def phi(self, x: np.ndarray) -> np.ndarray:
        return self.series.evaluate(x)

    def Phi(self, x: np.ndarray) -> np.ndarray:
        """x^chi + phi(x) on lifts; the translation law holds because phi is periodic."""
        x = np.asarray(x, dtype=float)
        return x @ self.projector.T + self.phi(x)

    def residual(self, x: np.ndarray) -> np.ndarray:
        """v_chi(x) - L phi(x) + phi(f x), evaluated independently at x and f x."""
        f = self.series.f
        x = np.asarray(x, dtype=float)
        w = f.displacement(x) @ self.projector.T
        return w - self.phi(x) @ f.Lf.T + self.phi(f(x))

    def to_json(self) -> dict:
        return {
            "exponent_class": self.exponent_class,
            "chi": spectrum.repr_float(self.chi),
            "direction": self.direction,
            "truncation_N": self.truncation_N,
            "rho": spectrum.repr_float(self.rho),
            "tail_bound": spectrum.repr_float(self.tail_bound),
            "rounding_bound": spectrum.repr_float(self.rounding_bound),
            "bound": spectrum.repr_float(self.bound),
            "residual_sup": spectrum.repr_float(self.residual_sup),
            "samples": self.samples,
            "tol": spectrum.repr_float(self.tol),
            "seed": self.seed,
        }


def solve_twisted_cocycle(f: TorusMap, exponent_class: int, tol: float = 1e-10, per_axis: int = 64,
                          seed: int = DEFAULT_SEED) -> CocycleSolution:
    """Solve v_chi(x) = L phi(x) - phi(f x) on E^chi of the linear part."""
    L = f.linear
    sp = spectrum.classify(L)
    if not 0 <= exponent_class < len(sp.exponents):
        raise PreconditionError(f"no exponent class {exponent_class}", clause="class")
    cls = sp.exponents[exponent_class]
    if cls.is_zero:
        raise PreconditionError("the twisted equation needs a nonzero exponent", clause="chi != 0")
    P = spectrum.projectors(L, sp).per_class[exponent_class]
    chi = cls.value
    expanding = chi > 0
    rho = math.exp(-abs(chi)) + f.epsilon * f.sup_dv
    if rho >= 1:
        raise PreconditionError(f"perturbation too large for class chi = {chi:.6g}", clause="perturbation")
    w_sup = f.epsilon * f.sup_v
    N, tail, _ = _truncation(L, P, expanding, rho, w_sup, tol / 2)
    if expanding:
        series = TwistedSeries(f, _series_ops(L, P, True, N + 1) if w_sup else [], [])
    else:
        series = TwistedSeries(f, [], _series_ops(L, P, False, N) if w_sup else [])
    x = stratified_sample(L.dim, per_axis, seed)
    sol = CocycleSolution(exponent_class, chi, "expanding" if expanding else "contracting", N, series, P,
                          rho, tail, 0.0, 0.0, len(x), tol, seed)
    res = sol.residual(x)
    sol.residual_sup = float(np.max(np.linalg.norm(res, axis=-1), initial=0.0))
    scale = np.linalg.norm(f.Lf, 2) + 1
    sol.rounding_bound = 64 * np.finfo(float).eps * scale * (w_sup / (1 - rho) * np.linalg.norm(P, 2) + w_sup)
    return sol


def _fit_constant(dev: np.ndarray) -> tuple[np.ndarray, float]:
    """Midrange constant per coordinate and the sup deviation from it."""
    if dev.size == 0:
        return np.zeros(dev.shape[-1]), 0.0
    c = 0.5 * (dev.max(axis=0) + dev.min(axis=0))
    return c, float(np.max(np.linalg.norm(dev - c, axis=-1)))


def verify_equivariance(sol: CocycleSolution, g: _MapBase, M: Optional[IntMatrix] = None,
                        n_points: int = 4096, seed: int = DEFAULT_SEED + 1,
                        commute_tol: float = 1e-10) -> float:
    """sup |Phi(G x) - M Phi(x) - c| after fitting the constant vector c."""
    M = M or g.linear
    f = sol.series.f
    rng = np.random.default_rng(seed)
    x = wrap(rng.random((n_points, f.linear.dim)))
    if _commutation_defect(f, g, x[:256]) > commute_tol:
        raise PreconditionError("g does not commute with f", clause="commutes")
    Mf = M.to_numpy()
    gx = g.lift(x)
    # Phi(Gx) - M Phi(x) = P (Gx - Mx) + phi(gx) - M phi(x), formed without cancellation
    dev = (g.displacement(x) + x @ (g.Lf - Mf).T) @ sol.projector.T + sol.phi(wrap(gx)) - sol.phi(x) @ Mf.T
    return _fit_constant(dev)[1]


# ---------------------------------------------------------------------------
# Lyapunov exponents

@dataclass
class LyapunovEstimate:
    exponents: list[float]
    stderr: list[float]
    raw: list[float]
    class_sizes: list[int]
    n_steps: int
    n_orbits: int
    burn_in: int
    seed: int

    def to_json(self) -> dict:
        return {
            "exponents": [spectrum.repr_float(x) for x in self.exponents],
            "stderr": [spectrum.repr_float(x) for x in self.stderr],
            "raw_exponents": [spectrum.repr_float(x) for x in self.raw],
            "class_sizes": self.class_sizes,
            "n_steps": self.n_steps,
            "n_orbits": self.n_orbits,
            "burn_in": self.burn_in,
            "seed": self.seed,
        }


def lyapunov_spectrum(f: _MapBase, n_steps: int = 100_000, n_orbits: int = 16, burn_in: int = 1000,
                      seed: int = DEFAULT_SEED) -> LyapunovEstimate:
    """QR estimate of the d exponents, averaged within each exponent class of the linear part."""
    d = f.linear.dim
    rng = np.random.default_rng(seed)
    x = wrap(rng.random((n_orbits, d)))
    Q = np.broadcast_to(np.eye(d), (n_orbits, d, d)).copy()
    sums = np.zeros((n_orbits, d))
    for step in range(burn_in + n_steps):
        Q, R = np.linalg.qr(f.jacobian(x) @ Q)
        diag = np.diagonal(R, axis1=1, axis2=2)
        signs = np.sign(diag)
        Q = Q * signs[:, None, :]
        if step >= burn_in:
            sums += np.log(np.abs(diag))
        x = f(x)
    per_orbit = sums / n_steps
    sizes = [c.multiplicity for c in spectrum.classify(f.linear).exponents]
    grouped = np.empty_like(per_orbit)
    start = 0
    for s in sizes:
        grouped[:, start:start + s] = per_orbit[:, start:start + s].mean(axis=1, keepdims=True)
        start += s
    mean = grouped.mean(axis=0)
    err = grouped.std(axis=0, ddof=1) / math.sqrt(n_orbits) if n_orbits > 1 else np.zeros(d)
    return LyapunovEstimate(mean.tolist(), err.tolist(), per_orbit.mean(axis=0).tolist(), sizes,
                            n_steps, n_orbits, burn_in, seed)


# ---------------------------------------------------------------------------
# fixed points

@dataclass
class FixedPoints:
    algebraic: int
    points: np.ndarray
    max_residual: float

    @property
    def numeric(self) -> int:
        return len(self.points)

    def to_json(self) -> dict:
        return {
            "algebraic_count": self.algebraic,
            "numeric_count": self.numeric,
            "points": [[spectrum.repr_float(v) for v in p] for p in self.points],
            "max_residual": spectrum.repr_float(self.max_residual),
        }


def _coset_representatives(M: IntMatrix) -> list[tuple[int, ...]]:
    """Representatives of Z^d / M Z^d from the HNF of M's columns."""
    H = hnf_basis([list(col) for col in zip(*M.rows)])
    d = M.dim
    if len(H) != d:
        raise PreconditionError("L - I is singular", clause="det(L - I) != 0")
    diag = []
    for row in H:
        diag.append(next(v for v in row if v))
    import itertools
    return list(itertools.product(*[range(h) for h in diag]))


def fixed_point_count(f: _MapBase, dedupe_tol: float = 1e-8) -> FixedPoints:
    L = f.linear
    d = L.dim
    LI = L - IntMatrix.identity(d)
    algebraic = abs(det_exact(LI))
    if algebraic == 0:
        raise PreconditionError("det(L - I) = 0: fixed points are not isolated", clause="det(L - I) != 0")
    reps = np.array(_coset_representatives(LI), dtype=float)
    LIinv = np.linalg.inv(LI.to_numpy())
    x = reps @ LIinv.T
    eye = np.eye(d)
    for _ in range(NEWTON_MAX_ITER):
        r = f.lift(x) - x - reps
        step = np.linalg.solve(f.jacobian(x) - eye, r[..., None])[..., 0]
        x = x - step
        if np.max(np.abs(step)) < NEWTON_STEP_TOL:
            break
    else:
        bad = int(np.argmax(np.max(np.abs(step), axis=1)))
        raise NumericalFailure(f"Newton did not converge from seed m = {reps[bad].astype(int).tolist()}")
    residual = float(np.max(np.linalg.norm(f.lift(x) - x - reps, axis=-1)))
    pts = wrap(x)
    kept: list[np.ndarray] = []
    for p in pts:
        if all(torus_distance(p, q) > dedupe_tol for q in kept):
            kept.append(p)
    order = sorted(range(len(kept)), key=lambda i: tuple(np.round(kept[i], 12)))
    return FixedPoints(algebraic, np.array([kept[i] for i in order]).reshape(-1, d), residual)


@dataclass
class FixedPointPermutation:
    permutation: list[int]
    square_permutation: list[int]
    homomorphism_ok: bool

    def to_json(self) -> dict:
        return {"permutation": self.permutation, "square_permutation": self.square_permutation,
                "homomorphism_ok": self.homomorphism_ok}


def _permutation(points: np.ndarray, g: _MapBase, tol: float) -> list[int]:
    images = g(points)
    out = []
    for j, y in enumerate(images):
        dist = torus_distance(points, y)
        k = int(np.argmin(dist))
        if dist[k] > tol:
            raise PreconditionError(f"g moves fixed point {j} off Fix(f) (distance {dist[k]:.3g})",
                                    clause="g preserves Fix(f)")
        out.append(k)
    return out


def fixed_point_permutation(f: _MapBase, g: _MapBase, tol: float = 1e-8) -> FixedPointPermutation:
    pts = fixed_point_count(f).points
    sigma = _permutation(pts, g, tol)
    sigma2 = _permutation(pts, g.power(2), tol)
    return FixedPointPermutation(sigma, sigma2, sigma2 == [sigma[s] for s in sigma])


# ---------------------------------------------------------------------------
# Franks-Manning semiconjugacy

@dataclass
class SemiConjugacy:
    g: _MapBase
    series: TwistedSeries
    tail_bound_u: float
    tail_bound_s: float
    residual_sup: float
    samples: np.ndarray
    tol: float

    def h(self, x: np.ndarray) -> np.ndarray:
        return self.series.evaluate(x)

    def H(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return x + self.h(x)

    def defect(self, f: _MapBase, x: np.ndarray) -> np.ndarray:
        """H(F x) - L_f H(x), formed as w_f(x) + x(L_f - L_f) + h(f x) - L_f h(x)."""
        return f.displacement(x) + self.h(f(x)) - self.h(x) @ f.Lf.T

    def to_json(self) -> dict:
        return {
            "forward_terms": len(self.series.forward),
            "backward_terms": len(self.series.backward),
            "tail_bound_unstable": spectrum.repr_float(self.tail_bound_u),
            "tail_bound_stable": spectrum.repr_float(self.tail_bound_s),
            "residual_sup": spectrum.repr_float(self.residual_sup),
            "samples": int(len(self.samples)),
            "tol": spectrum.repr_float(self.tol),
        }


def franks_manning(g: TorusMap, tol: float = 1e-9, per_axis: int = 64,
                   seed: int = DEFAULT_SEED) -> SemiConjugacy:
    """H = id + h with H(g x) = M H(x), M the (hyperbolic) linear part of g."""
    M = g.linear
    sp = spectrum.classify(M)
    if sp.circle_pairs or any(c.is_zero for c in sp.exponents):
        raise PreconditionError("no semiconjugacy solver for non-hyperbolic linear part", clause="hyperbolic")
    proj = spectrum.projectors(M, sp).aggregates
    w_sup = g.epsilon * g.sup_v
    eta = g.epsilon * g.sup_dv
    chi_u = min(c.value for c in sp.exponents if c.value > 0)
    chi_s = max(c.value for c in sp.exponents if c.value < 0)
    rho_u = math.exp(-chi_u) + eta
    rho_s = math.exp(chi_s) + eta
    if max(rho_u, rho_s) >= 1:
        raise PreconditionError("perturbation too large for the hyperbolic splitting", clause="perturbation")
    Nu, bu, _ = _truncation(M, proj["u"], True, rho_u, w_sup, UNSTABLE_TAIL_SHARE * tol / 2)
    Ns, bs, _ = _truncation(M, proj["s"], False, rho_s, w_sup, tol / 2)
    if w_sup == 0.0:
        series = TwistedSeries(g, [], [])
    else:
        series = TwistedSeries(g, _series_ops(M, proj["u"], True, Nu + 1), _series_ops(M, proj["s"], False, Ns))
    x = stratified_sample(M.dim, per_axis, seed)
    sc = SemiConjugacy(g, series, bu, bs, 0.0, x, tol)
    sc.residual_sup = float(np.max(np.linalg.norm(sc.defect(g, x), axis=-1), initial=0.0))
    return sc


def commuting_pair_check(f: _MapBase, g: _MapBase, H: SemiConjugacy, x: Optional[np.ndarray] = None) -> float:
    """sup over samples of |H(f x) - L_f H(x)| mod Z^d (diagnostic, never raises)."""
    x = H.samples if x is None else x
    dev = H.defect(f, x)
    return float(np.max(np.linalg.norm(wrap(dev), axis=-1), initial=0.0))


# ---------------------------------------------------------------------------
# center volume growth

@dataclass
class VolumeGrowth:
    rate: float
    per_orbit: list[float]
    stderr: float
    linear_logdet: float
    unstable_logdet: float
    lower_bound: Optional[float]
    lower_bound_holds: Optional[bool]
    n: int
    seed: int

    def to_json(self) -> dict:
        return {
            "rate": spectrum.repr_float(self.rate),
            "per_orbit": [spectrum.repr_float(r) for r in self.per_orbit],
            "stderr": spectrum.repr_float(self.stderr),
            "linear_center_logdet": spectrum.repr_float(self.linear_logdet),
            "linear_unstable_logdet": spectrum.repr_float(self.unstable_logdet),
            "lower_bound_rate": None if self.lower_bound is None else spectrum.repr_float(self.lower_bound),
            "lower_bound_holds": self.lower_bound_holds,
            "n": self.n,
            "seed": self.seed,
        }


def _orth(A: np.ndarray) -> np.ndarray:
    return np.linalg.qr(A)[0]


def _center_plane(f: _MapBase, x: np.ndarray, Pc: np.ndarray, Pcu: np.ndarray, Pcs: np.ndarray,
                  k_u: int, k_s: int, depth: int) -> np.ndarray:
    """Orthonormal basis of E^c_f(x) as E^cu(x) cap E^cs(x), transported over ``depth`` steps."""
    if f.epsilon == 0.0:
        return _orth(_column_basis(Pc, 2))
    # cu: push a cu frame forward from f^{-depth} x
    back = [x]
    for _ in range(depth):
        back.append(wrap(f.inverse_lift(back[-1])))
    Q = _orth(_column_basis(Pcu, 2 + k_u))
    for y in reversed(back[1:]):
        Q = _orth(f.jacobian(y) @ Q)
    Qcu = Q
    # cs: pull a cs frame back from f^{depth} x
    fwd = [x]
    for _ in range(depth):
        fwd.append(wrap(f.lift(fwd[-1])))
    Q = _orth(_column_basis(Pcs, 2 + k_s))
    for y in reversed(fwd[:-1]):
        Q = _orth(np.linalg.solve(f.jacobian(y), Q))
    Qcs = Q
    U, s, _ = np.linalg.svd(Qcu.T @ Qcs)
    if s[1] < 1 - 1e-6:
        raise NumericalFailure("center-plane tracking failed: cu and cs frames do not meet in a plane")
    return _orth(Qcu @ U[:, :2])


def _column_basis(P: np.ndarray, k: int) -> np.ndarray:
    U, _, _ = np.linalg.svd(P)
    return U[:, :k]


def center_volume_growth(f: _MapBase, g: _MapBase, n: int = 50, n_orbits: int = 4, depth: int = 40,
                         c: Optional[float] = None, bound_eps: Optional[float] = None,
                         seed: int = DEFAULT_SEED) -> VolumeGrowth:
    """Average of log|det(Dg|E^c_f)| per step along g-orbits."""
    L = f.linear
    sp = spectrum.classify(L)
    if sp.center_dim != 2 or sp.circle_pairs != 1:
        raise PreconditionError("center volume growth needs a 2-dimensional center", clause="2-dim center")
    pr = spectrum.projectors(L, sp)
    agg = pr.aggregates
    k_u = sum(cl.multiplicity for cl in sp.exponents if cl.lo > 0)
    k_s = sum(cl.multiplicity for cl in sp.exponents if cl.hi < 0)
    rng = np.random.default_rng(seed)
    rates = []
    for _ in range(n_orbits):
        x = wrap(rng.random(L.dim))
        Q = _center_plane(f, x, agg["c"], agg["cu"], agg["cs"], k_u, k_s, depth)
        total = 0.0
        for _ in range(n):
            Y = g.jacobian(x) @ Q
            x = g(x)
            Qn = _center_plane(f, x, agg["c"], agg["cu"], agg["cs"], k_u, k_s, depth)
            if np.linalg.norm(Y - Qn @ (Qn.T @ Y)) > 1e-6 * np.linalg.norm(Y):
                raise NumericalFailure("center-plane tracking failed: Dg does not map E^c into E^c")
            total += 0.5 * math.log(abs(np.linalg.det(Y.T @ Y)))
            Q = Qn
        rates.append(total / n)
    rate = float(np.mean(rates))
    err = float(np.std(rates, ddof=1) / math.sqrt(n_orbits)) if n_orbits > 1 else 0.0
    # the same quantities for the linear part M of g, from exact spectral data
    from .centralizer import _functionals  # local import keeps module layering one-way
    frame = spectrum.eigen_frame(L, sp)
    vals, _ = _functionals(frame, sp, g.linear)
    weights = [cl.multiplicity for cl in sp.exponents]
    ci = next(i for i, cl in enumerate(sp.exponents) if cl.is_zero)
    lin_c = weights[ci] * vals[ci]
    lin_u = sum(w * v for i, (w, v) in enumerate(zip(weights, vals)) if i != ci and v > 0)
    rhs = holds = None
    if c is not None and bound_eps is not None:
        rhs = math.log(c) / n + (1 - bound_eps) * lin_c - 2 * bound_eps * lin_u
        holds = rate >= rhs
    return VolumeGrowth(rate, rates, err, lin_c, lin_u, rhs, holds, n, seed)


def holder_estimate(sol: CocycleSolution, n_pairs: int = 2000, seed: int = DEFAULT_SEED + 2) -> float:
    """Empirical Holder exponent of phi from a log-log fit over close pairs (diagnostic only)."""
    d = sol.series.f.linear.dim
    rng = np.random.default_rng(seed)
    x = wrap(rng.random((n_pairs, d)))
    r = 10 ** rng.uniform(-6, -2, n_pairs)
    u = rng.normal(size=(n_pairs, d))
    y = wrap(x + (r / np.linalg.norm(u, axis=1))[:, None] * u)
    diff = np.linalg.norm(sol.phi(x) - sol.phi(y), axis=-1)
    ok = diff > 0
    if ok.sum() < 10:
        return float("nan")
    return float(np.polyfit(np.log(r[ok]), np.log(diff[ok]), 1)[0])
