"""Bounds for bond and site percolation: largest component and component counts."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .bounds import CRITICAL, SUBCRITICAL, SUPERCRITICAL, regime_of
from .errors import DomainError, InvalidProbabilityError
from .hazard import HazardMatrix, _bisect, gamma, gamma0

KAPPA = (2.0 * math.e / 27.0) ** (2.0 / 3.0)


def _solve_eta() -> float:
    # positive root of e^x = 2x + 1; f < 0 on (0, eta) and > 0 beyond
    return _bisect(lambda x: math.expm1(x) - 2.0 * x, 0.5, 2.0)


ETA = _solve_eta()
# width of the critical window for N(m), in units of m^{-1/2}
KAPPA1 = math.sqrt(ETA / 8.0) * (math.sqrt(1.0 + 8.0 / (2.0 * ETA + 1.0)) - 1.0)

A_MIN, A_MAX = 1e-9, 10.0
GOLDEN_ITERS = 200


def _check(n, rho_H):
    if n < 1:
        raise DomainError(f"n must be >= 1, got {n}")
    if not rho_H >= 0 or math.isinf(rho_H):
        raise DomainError(f"rho_H must be finite and >= 0, got {rho_H!r}")


# -- largest component ---------------------------------------------------

@dataclass
class GiantBound:
    bound: float
    regime: str
    threshold: float
    constants: dict = field(default_factory=dict)
    raw_bound: float = math.nan
    clamped: bool = False

    def to_dict(self):
        return {
            "bound": self.bound,
            "raw_bound": self.raw_bound,
            "clamped": self.clamped,
            "regime": self.regime,
            "threshold": self.threshold,
            "constants": dict(self.constants),
        }


def giant_component_bound(n: int, rho_H: float) -> GiantBound:
    """Closed-form upper bound on the expected size of the largest component."""
    _check(n, rho_H)
    t = KAPPA * n ** (-1.0 / 3.0)
    regime = regime_of(rho_H, t)
    consts = {"kappa": KAPPA}
    if regime == SUBCRITICAL:
        raw = 0.5 + math.sqrt(0.25 + n * rho_H / (1.0 - rho_H))
    else:
        g0 = gamma0(rho_H).value
        consts["gamma0"] = g0
        if regime == CRITICAL:
            raw = g0 * n + n ** (2.0 / 3.0) / math.sqrt(KAPPA)
        else:
            cn = 2.0 / math.sqrt(math.e) * math.sqrt((1.0 - g0) ** 2 * rho_H / (1.0 - rho_H + g0 * rho_H))
            consts["c_n"] = cn
            raw = g0 * n + cn * math.sqrt(n) + 2.0
    return GiantBound(min(raw, float(n)), regime, t, consts, raw, raw > n)


def implicit_giant_lhs_stats(c1_samples, a: float) -> tuple[float, float]:
    """Mean and standard error of ``C1 (1 - exp(-a (C1 - 1)))`` over samples."""
    if not a > 0:
        raise DomainError(f"a must be > 0, got {a!r}")
    c1 = np.asarray(c1_samples, dtype=float)
    if c1.size == 0:
        raise DomainError("need at least one sample of C1")
    vals = -c1 * np.expm1(-a * (c1 - 1.0))
    se = float(vals.std(ddof=1) / math.sqrt(len(vals))) if len(vals) > 1 else 0.0
    return float(vals.mean()), se


def implicit_giant_lhs(c1_samples, a: float) -> float:
    return implicit_giant_lhs_stats(c1_samples, a)[0]


def implicit_giant_rhs(n: int, rho_H: float, a: float) -> float:
    """``n (1 - exp(-rho_H gamma(rho_H, a)))``."""
    _check(n, rho_H)
    if not a > 0:
        raise DomainError(f"a must be > 0, got {a!r}")
    return -n * math.expm1(-rho_H * gamma(rho_H, a).value)


# -- number of components of size >= m -----------------------------------

def n_components_objective(n: int, m: int, rho_H: float, a: float) -> float:
    """``(n/m) (1 - exp(-rho gamma(rho, a))) / (1 - exp(-a (m - 1)))``."""
    num = -math.expm1(-rho_H * gamma(rho_H, a).value)
    den = -math.expm1(-a * (m - 1))
    return n / m * num / den


def default_a(m: int, rho_H: float) -> float:
    """Value of ``a`` from which the closed form is derived."""
    if rho_H <= 1.0:
        return ETA / m
    g0 = gamma0(rho_H).value
    B = (1.0 - g0) ** 2 * rho_H / (1.0 - rho_H + g0 * rho_H)
    return math.sqrt(2.0 * g0 / (B * (m - 1)))


def _golden_min(f, lo, hi, iters):
    inv = (math.sqrt(5.0) - 1.0) / 2.0
    x1 = hi - inv * (hi - lo)
    x2 = lo + inv * (hi - lo)
    f1, f2 = f(x1), f(x2)
    for _ in range(iters):
        if f1 <= f2:
            hi, x2, f2 = x2, x1, f1
            x1 = hi - inv * (hi - lo)
            f1 = f(x1)
        else:
            lo, x1, f1 = x1, x2, f2
            x2 = lo + inv * (hi - lo)
            f2 = f(x2)
    return (x1, f1) if f1 <= f2 else (x2, f2)


@dataclass
class ComponentCountBound:
    bound: float
    a_used: float  # nan when the a -> 0 limit or the trivial n/m wins
    source: str  # "search" | "default" | "limit" | "trivial"
    a_default: float
    value_at_default: float

    def to_dict(self):
        return dict(self.__dict__)


def n_components_search(n: int, m: int, rho_H: float) -> ComponentCountBound:
    """Minimise the component-count objective over ``a`` in ``[1e-9, 10]``.

    Golden-section search runs on ``log a``.  The objective is not known to
    be unimodal, so the closed-form ``a``, the ``a -> 0`` limit (finite
    only when ``rho_H < 1``) and the trivial ``n/m`` are also candidates.
    """
    _check(n, rho_H)
    if m < 1:
        raise DomainError(f"m must be >= 1, got {m}")
    if m == 1:
        return ComponentCountBound(float(n), math.nan, "trivial", math.nan, math.nan)
    if rho_H == 0.0:
        return ComponentCountBound(0.0, math.nan, "limit", math.nan, 0.0)
    a0 = default_a(m, rho_H)
    v0 = n_components_objective(n, m, rho_H, a0)
    x, v = _golden_min(
        lambda la: n_components_objective(n, m, rho_H, math.exp(la)),
        math.log(A_MIN),
        math.log(A_MAX),
        GOLDEN_ITERS,
    )
    cands = [(v, math.exp(x), "search"), (v0, a0, "default"), (n / m, math.nan, "trivial")]
    if rho_H < 1.0:
        cands.append((n * rho_H / (m * (m - 1) * (1.0 - rho_H)), math.nan, "limit"))
    best = min(cands, key=lambda c: c[0])
    return ComponentCountBound(float(best[0]), best[1], best[2], a0, v0)


def n_components_bound(n: int, m: int, rho_H: float) -> float:
    """Upper bound on the expected number of components with at least ``m`` nodes."""
    return n_components_search(n, m, rho_H).bound


def n_components_closed_form(n: int, m: int, rho_H: float) -> tuple[float, str]:
    """Three-branch closed form; returns ``(bound, regime)``, clamped to ``n/m``."""
    _check(n, rho_H)
    if m < 1:
        raise DomainError(f"m must be >= 1, got {m}")
    if m == 1:
        return float(n), SUBCRITICAL if rho_H < 1 else SUPERCRITICAL
    regime = regime_of(rho_H, KAPPA1 / math.sqrt(m))
    if regime == SUBCRITICAL:
        raw = n / (m * (m - 1)) * rho_H / (1.0 - rho_H)
    elif regime == CRITICAL:
        raw = n / (m**1.5 * KAPPA1)
    else:
        g0 = gamma0(rho_H).value
        cn = (1.0 - g0) ** 2 * rho_H / (1.0 - rho_H + g0 * rho_H)
        cn_p = math.sqrt(g0 * cn)
        raw = n / m * (g0 + cn_p / math.sqrt(m - 1) + cn / (m - 1))
    return min(raw, n / m), regime


@dataclass
class PercolationBoundReport:
    n: int
    rho_H: float
    c1: GiantBound
    nm_bounds: dict
    nm_closed_forms: dict
    a_used: dict
    constants: dict

    def to_dict(self):
        return {
            "n": self.n,
            "rho_H": self.rho_H,
            "c1": self.c1.to_dict(),
            "nm_bounds": {str(k): v for k, v in self.nm_bounds.items()},
            "nm_closed_forms": {str(k): v for k, v in self.nm_closed_forms.items()},
            "a_used": {str(k): v for k, v in self.a_used.items()},
            "constants": dict(self.constants),
        }


def percolation_report(n: int, rho_H: float, ms=()) -> PercolationBoundReport:
    nm, cf, au = {}, {}, {}
    for m in ms:
        r = n_components_search(n, m, rho_H)
        nm[m] = r.bound
        au[m] = r.a_used
        cf[m] = n_components_closed_form(n, m, rho_H)[0]
    return PercolationBoundReport(
        n, rho_H, giant_component_bound(n, rho_H), nm, cf, au,
        {"kappa": KAPPA, "kappa1": KAPPA1, "eta": ETA},
    )


# -- site percolation ----------------------------------------------------

def site_percolation_hazard(edges, node_probs) -> HazardMatrix:
    """Symmetric Hazard matrix ``-(ln(1-p_i) + ln(1-p_j))/2`` on the base edges.

    ``node_probs[i]`` is the probability that node ``i`` survives.
    """
    p = np.asarray(node_probs, dtype=float)
    if np.any(~((p >= 0) & (p < 1))):
        raise InvalidProbabilityError("node survival probabilities must lie in [0, 1)")
    n = len(p)
    e = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
    if len(e) and (e.min() < 0 or e.max() >= n):
        raise IndexError("edge endpoint outside [0, n)")
    e = e[e[:, 0] != e[:, 1]]
    e = np.unique(np.sort(e, axis=1), axis=0)
    lg = -np.log1p(-p)
    h = 0.5 * (lg[e[:, 0]] + lg[e[:, 1]])
    rows = np.concatenate([e[:, 0], e[:, 1]])
    cols = np.concatenate([e[:, 1], e[:, 0]])
    vals = np.concatenate([h, h])
    keep = vals > 0
    return HazardMatrix(n, rows[keep], cols[keep], vals[keep])
