"""Hazard matrix, Hazard radius and the Hazard-function root solvers."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Iterable

import numpy as np
import scipy.sparse as sp

from .errors import ConvergenceError, DomainError, NumericalError
from .graph_model import GraphSpec

# Bisection stops once the bracket is narrower than XTOL relative to its upper end
# and the residual is below FTOL.
FTOL = 1e-12
XTOL = 1e-14
GAMMA1_SCAN_POINTS = 10_000


@dataclass(frozen=True, eq=False)
class HazardMatrix:
    """Nonnegative n x n matrix held as a background value plus sparse overrides.

    ``background`` fills every off-diagonal slot that has no explicit entry.
    ``rows/cols/values`` are directed (already mirrored for undirected
    models).  ``column_mask`` zeroes whole columns, i.e. the incoming edges of
    masked nodes.  The same container is used for the expected adjacency
    matrix ``P``; :meth:`expected` converts between the two.
    """

    n: int
    rows: np.ndarray
    cols: np.ndarray
    values: np.ndarray
    background: float = 0.0
    column_mask: np.ndarray | None = None
    background_loops: bool = False

    @cached_property
    def _correction(self) -> sp.csr_matrix:
        base = np.where((self.rows == self.cols) & (not self.background_loops), 0.0, self.background)
        return sp.csr_matrix(
            (self.values - base, (self.rows, self.cols)), shape=(self.n, self.n)
        )

    def _masked(self, v: np.ndarray) -> np.ndarray:
        return v if self.column_mask is None else v * self.column_mask

    def _background_term(self, v):
        total = v.sum()
        if self.background_loops:
            return np.full_like(v, self.background * total)
        return self.background * (total - v)

    def _raw_matvec(self, v):
        out = self._correction @ v
        if self.background:
            out = out + self._background_term(v)
        return out

    def _raw_rmatvec(self, v):
        out = self._correction.T @ v
        if self.background:
            out = out + self._background_term(v)
        return out

    def matvec(self, v: np.ndarray) -> np.ndarray:
        return self._raw_matvec(self._masked(v))

    def rmatvec(self, v: np.ndarray) -> np.ndarray:
        return self._masked(self._raw_rmatvec(v))

    def sym_matvec(self, v: np.ndarray) -> np.ndarray:
        """``((M + M^T) / 2) v``."""
        return 0.5 * (self.matvec(v) + self.rmatvec(v))

    def entry(self, i: int, j: int) -> float:
        if self.column_mask is not None and not self.column_mask[j]:
            return 0.0
        hit = np.flatnonzero((self.rows == i) & (self.cols == j))
        if len(hit):
            return float(self.values[hit[0]])
        return 0.0 if i == j and not self.background_loops else self.background

    def to_dense(self) -> np.ndarray:
        if self.n > 5000:
            raise MemoryError("dense conversion limited to n <= 5000")
        m = np.full((self.n, self.n), self.background)
        if not self.background_loops:
            np.fill_diagonal(m, 0.0)
        m[self.rows, self.cols] = self.values
        if self.column_mask is not None:
            m = m * self.column_mask[None, :]
        return m

    @property
    def is_zero(self) -> bool:
        if self.column_mask is not None and not self.column_mask.any():
            return True
        explicit_zero = not np.any(self.values[self._kept(self.cols)])
        bg_zero = self.background == 0.0 or (self.n < 2 and not self.background_loops)
        return explicit_zero and bg_zero

    def _kept(self, cols):
        return np.ones(len(cols), bool) if self.column_mask is None else self.column_mask[cols] > 0

    def sup_norm(self) -> float:
        if self.is_zero:
            return 0.0
        kept = self._kept(self.cols)
        m = float(self.values[kept].max()) if kept.any() else 0.0
        if self.background > 0 and (self.n > 1 or self.background_loops):
            m = max(m, self.background)
        return m

    def map_values(self, fn: Callable[[np.ndarray], np.ndarray]) -> "HazardMatrix":
        """Apply an entrywise map with ``fn(0) == 0``."""
        bg = float(fn(np.array([self.background]))[0])
        return HazardMatrix(
            self.n, self.rows, self.cols, fn(self.values), bg, self.column_mask, self.background_loops
        )

    def expected(self) -> "HazardMatrix":
        """The expected adjacency matrix ``P = 1 - exp(-H)``."""
        return self.map_values(lambda h: -np.expm1(-h))


def hazard_matrix(spec: GraphSpec) -> HazardMatrix:
    """Entrywise ``h_ij = -ln(1 - p_ij)``."""
    r, c, p = spec.directed_entries()
    return HazardMatrix(
        n=spec.n,
        rows=r,
        cols=c,
        values=-np.log1p(-p),
        background=-math.log1p(-spec.background),
        background_loops=spec.background_loops,
    )


def expected_adjacency(spec: GraphSpec) -> HazardMatrix:
    r, c, p = spec.directed_entries()
    return HazardMatrix(spec.n, r, c, np.array(p, dtype=float), spec.background, None, spec.background_loops)


def masked_hazard_matrix(spec: GraphSpec, influencers: Iterable[int]) -> HazardMatrix:
    """Hazard matrix with the incoming edges of ``influencers`` removed."""
    idx = np.fromiter(influencers, dtype=np.int64)
    if len(idx) and (idx.min() < 0 or idx.max() >= spec.n):
        raise IndexError(f"influencer outside [0, {spec.n})")
    mask = np.ones(spec.n)
    mask[idx] = 0.0
    h = hazard_matrix(spec)
    return HazardMatrix(h.n, h.rows, h.cols, h.values, h.background, mask, h.background_loops)


def edges_matrix(n: int, edges, weight: float = 1.0) -> HazardMatrix:
    """Symmetric matrix with ``weight`` on each listed undirected edge."""
    e = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
    off = e[:, 0] != e[:, 1]
    r = np.concatenate([e[:, 0], e[off, 1]])
    c = np.concatenate([e[:, 1], e[off, 0]])
    return HazardMatrix(n, r, c, np.full(len(r), float(weight)))


# -- spectral radius -----------------------------------------------------

def spectral_radius(
    matrix: HazardMatrix, tol: float = 1e-10, max_iter: int = 100_000
) -> tuple[float, int, float]:
    """Largest eigenvalue of ``(M + M^T)/2`` for a nonnegative ``M``.

    Power iteration from the normalised all-ones vector.  Each step applies
    ``S + s I`` with ``s = max(mean row sum, rayleigh / 2)``, both lower
    bounds on the spectral radius, so bipartite spectra (which carry
    ``-rho`` as an eigenvalue) still converge.  Stops on relative change of
    the Rayleigh quotient.

    Returns ``(rho, iterations, residual)`` where residual is
    ``||S v - rho v|| / rho`` at the final iterate.
    """
    if tol <= 0:
        raise DomainError("tol must be positive")
    n = matrix.n
    v = np.full(n, 1.0 / math.sqrt(n))
    w = matrix.sym_matvec(v)
    lam = float(v @ w)
    if lam <= 0.0 and not np.any(w):
        return 0.0, 0, 0.0
    base_shift = lam
    for it in range(1, max_iter + 1):
        y = w + max(base_shift, 0.5 * lam) * v
        v = y / np.linalg.norm(y)
        w = matrix.sym_matvec(v)
        new = float(v @ w)
        if abs(new - lam) <= tol * abs(new):
            lam = new
            residual = float(np.linalg.norm(w - lam * v) / lam) if lam > 0 else 0.0
            return lam, it, residual
        lam = new
    raise ConvergenceError(
        f"power iteration did not converge within {max_iter} iterations", lam, max_iter
    )


@dataclass(frozen=True)
class HazardSummary:
    rho_H: float
    rho_P: float
    max_p: float
    iterations: int
    residual: float

    def sandwich_upper(self) -> float:
        """``-ln(1 - ||P||) / ||P|| * rho_P``; equals ``rho_P`` when P is zero."""
        if self.max_p == 0.0:
            return self.rho_P
        return -math.log1p(-self.max_p) / self.max_p * self.rho_P

    def to_dict(self) -> dict:
        return {
            "rho_H": self.rho_H,
            "rho_P": self.rho_P,
            "max_p": self.max_p,
            "iterations": self.iterations,
            "residual": self.residual,
        }


def hazard_radius(H: HazardMatrix, tol: float = 1e-10, max_iter: int = 100_000) -> HazardSummary:
    rho_h, it_h, res_h = spectral_radius(H, tol, max_iter)
    P = H.expected()
    rho_p, it_p, _ = spectral_radius(P, tol, max_iter)
    return HazardSummary(
        rho_H=rho_h,
        rho_P=rho_p,
        max_p=P.sup_norm(),
        iterations=it_h + it_p,
        residual=res_h,
    )


def spec_hazard_radius(spec: GraphSpec, tol: float = 1e-10) -> HazardSummary:
    return hazard_radius(hazard_matrix(spec), tol)


# -- Hazard function -----------------------------------------------------

@dataclass(frozen=True)
class GammaSolution:
    value: float
    residual: float
    branch: str  # "unique" | "limit-at-zero" | "smallest"

    def __float__(self):
        return self.value


def _bisect(f, lo: float, hi: float, ftol: float = FTOL, xtol: float = XTOL, max_iter: int = 2000) -> float:
    """Root of ``f`` bracketed by ``f(lo) < 0 < f(hi)``."""
    mid = 0.5 * (lo + hi)
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        fm = f(mid)
        if fm == 0.0:
            return mid
        if fm < 0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= xtol * hi and abs(fm) <= ftol:
            break
    # pick the bracket end with the smaller residual
    cands = [lo, 0.5 * (lo + hi), hi]
    return min(cands, key=lambda x: abs(f(x)) if x > 0 else math.inf)


def gamma_residual(value: float, rho: float, a: float) -> float:
    """``|g - 1 + exp(-rho g - a)|`` evaluated without cancellation."""
    return abs(value + math.expm1(-rho * value - a))


def gamma1_residual(value: float, rho: float, a: float) -> float:
    if value <= 0.0:
        return 1.0
    return abs(value + math.expm1(-rho * value - rho * a / value))


def gamma(rho: float, a: float, tol: float = FTOL) -> GammaSolution:
    """Unique root in [0, 1] of ``g - 1 + exp(-rho g - a) = 0``.

    ``a = 0`` is accepted and defined as the limit :func:`gamma0`.
    """
    if rho < 0 or a < 0 or math.isnan(rho) or math.isnan(a):
        raise DomainError(f"need rho >= 0 and a >= 0, got rho={rho}, a={a}")
    if a == 0.0:
        return gamma0(rho, tol)
    if rho == 0.0:
        v = -math.expm1(-a)
        return GammaSolution(v, gamma_residual(v, 0.0, a), "unique")
    f = lambda g: g + math.expm1(-rho * g - a)  # noqa: E731
    v = _bisect(f, 0.0, 1.0, ftol=tol)
    return GammaSolution(v, gamma_residual(v, rho, a), "unique")


def gamma0(rho: float, tol: float = FTOL) -> GammaSolution:
    """Limit of :func:`gamma` as ``a -> 0+``: zero for ``rho <= 1``."""
    if rho < 0 or math.isnan(rho):
        raise DomainError(f"need rho >= 0, got {rho}")
    if rho <= 1.0:
        return GammaSolution(0.0, 0.0, "limit-at-zero")
    f = lambda g: g + math.expm1(-rho * g)  # noqa: E731
    # 1 - 1/rho is a strict lower bound on the positive root
    lo = 1.0 - 1.0 / rho
    while f(lo) >= 0.0 and lo > 1e-300:
        lo *= 0.5
    if f(lo) >= 0.0:
        raise NumericalError(f"cannot bracket gamma0({rho})")
    v = _bisect(f, lo, 1.0, ftol=tol)
    return GammaSolution(v, gamma_residual(v, rho, 0.0), "limit-at-zero")


def gamma1(rho: float, a: float, tol: float = FTOL, scan_points: int = GAMMA1_SCAN_POINTS) -> GammaSolution:
    """Smallest root in (0, 1] of ``g - 1 + exp(-rho g - rho a / g) = 0``.

    The first sign change is located on a uniform grid of ``scan_points``
    points and then refined by bisection, so roots closer together than
    the grid spacing may be skipped.
    """
    if rho < 0 or a <= 0 or math.isnan(rho) or math.isnan(a):
        raise DomainError(f"need rho >= 0 and a > 0, got rho={rho}, a={a}")
    if rho == 0.0:
        return GammaSolution(0.0, 0.0, "smallest")
    x = np.arange(1, scan_points + 1) / scan_points
    with np.errstate(over="ignore", under="ignore"):
        fx = x + np.expm1(-rho * x - rho * a / x)
    nonneg = np.flatnonzero(fx >= 0)
    if len(nonneg) == 0:
        raise NumericalError(f"no sign change found for gamma1({rho}, {a})")
    k = int(nonneg[0])
    hi = float(x[k])
    lo = float(x[k - 1]) if k > 0 else 0.0
    if fx[k] == 0.0:
        return GammaSolution(hi, 0.0, "smallest")
    f = lambda g: g + math.expm1(-rho * g - rho * a / g) if g > 0 else -1.0  # noqa: E731
    v = _bisect(f, lo, hi, ftol=tol)
    return GammaSolution(v, gamma1_residual(v, rho, a), "smallest")


def gamma_upper_estimates(rho: float, a: float) -> tuple[float, float]:
    """Closed-form upper estimates of ``gamma(rho, a)``.

    Returns ``(sqrt_bound, linear_bound)``::

        sqrt_bound   = g0 + sqrt(2a) * min(1, 1/sqrt(rho))
        linear_bound = g0 + a (1 - g0) / (1 - rho (1 - g0))     (inf at rho == 1)
    """
    if rho < 0 or a < 0:
        raise DomainError("need rho >= 0 and a >= 0")
    g0 = gamma0(rho).value
    scale = 1.0 if rho <= 1.0 else 1.0 / math.sqrt(rho)
    sqrt_bound = g0 + math.sqrt(2.0 * a) * scale
    if rho == 1.0:
        linear = math.inf
    else:
        linear = g0 + a * (1.0 - g0) / (1.0 - rho * (1.0 - g0))
    return sqrt_bound, linear
