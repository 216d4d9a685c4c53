"""Upper bounds on expected influence, plus SIR-specific radii and thresholds.

Three influencer scenarios are supported:

* ``fixed``: a deterministic set of ``n0`` nodes (worst case over placement),
* ``uniform``: ``n0`` nodes drawn uniformly without replacement,
* ``bernoulli``: each node is an influencer independently with probability ``q``.

Each scenario has a theorem form, evaluated through the Hazard function
solvers, and a three-branch closed form that trades tightness for an explicit
expression.  Theorem forms are the defaults.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate

from .errors import DomainError, NumericalError
from .hazard import edges_matrix, gamma, gamma0, gamma1, spectral_radius

SUBCRITICAL = "subcritical"
CRITICAL = "critical"
SUPERCRITICAL = "supercritical"


@dataclass
class BoundReport:
    """A bound on expected influence (in nodes) with its intermediates."""

    bound: float
    regime: str
    scenario: str
    form: str
    n: int
    constants: dict = field(default_factory=dict)
    raw_bound: float = math.nan
    clamped: bool = False

    def to_dict(self) -> dict:
        return {
            "bound": self.bound,
            "raw_bound": self.raw_bound,
            "clamped": self.clamped,
            "regime": self.regime,
            "scenario": self.scenario,
            "form": self.form,
            "n": self.n,
            "constants": dict(self.constants),
        }


def _report(raw, regime, scenario, form, n, constants) -> BoundReport:
    clamped = raw > n
    return BoundReport(
        bound=float(min(raw, n)),
        regime=regime,
        scenario=scenario,
        form=form,
        n=n,
        constants=constants,
        raw_bound=float(raw),
        clamped=bool(clamped),
    )


def _check_rho(rho_H):
    if not rho_H >= 0 or math.isinf(rho_H):
        raise DomainError(f"rho_H must be finite and >= 0, got {rho_H!r}")


def _check_n0(n, n0, lo=1):
    if n < 1:
        raise DomainError(f"n must be >= 1, got {n}")
    if not (lo <= n0 <= n):
        raise DomainError(f"n0 must lie in [{lo}, {n}], got {n0}")


def _check_q(q):
    if not (0.0 <= q <= 1.0):
        raise DomainError(f"q must lie in [0, 1], got {q!r}")


# -- regimes -------------------------------------------------------------

def regime_threshold(scenario: str, n: int, param: float) -> float:
    """Half-width of the critical window around ``rho_H = 1``.

    ``param`` is ``n0`` for the fixed and uniform scenarios and ``q`` for
    the Bernoulli scenario.  An infinite width means every radius is
    treated as critical (all nodes are influencers).
    """
    if scenario == "fixed":
        return math.inf if param >= n else (param / (4.0 * (n - param))) ** (1.0 / 3.0)
    if scenario == "uniform":
        return math.inf if param >= n else math.sqrt(param / (2.0 * (n - param)))
    if scenario == "bernoulli":
        return math.inf if param >= 1.0 else math.sqrt(-math.log1p(-param) / 2.0)
    raise DomainError(f"unknown scenario {scenario!r}")


def regime_of(rho_H: float, threshold: float) -> str:
    # closed window: |rho - 1| == threshold is critical
    if abs(rho_H - 1.0) <= threshold:
        return CRITICAL
    return SUBCRITICAL if rho_H < 1.0 else SUPERCRITICAL


def classify_regime(scenario: str, n: int, param: float, rho_H: float) -> tuple[str, float]:
    """Return ``(regime, threshold)`` for the closed-form branch selection."""
    t = regime_threshold(scenario, n, param)
    return regime_of(rho_H, t), t


# -- fixed influencers ---------------------------------------------------

def worst_case_bound(n: int, n0: int, rho_H: float) -> BoundReport:
    """``n0 + gamma1(rho_H, n0/(n-n0)) (n-n0)``: any fixed set of ``n0`` nodes."""
    _check_n0(n, n0)
    _check_rho(rho_H)
    regime, t = classify_regime("fixed", n, n0, rho_H)
    if n0 == n:
        return _report(float(n), regime, "fixed", "theorem", n, {"delta_n": t})
    a = n0 / (n - n0)
    g1 = gamma1(rho_H, a)
    raw = n0 + g1.value * (n - n0)
    return _report(raw, regime, "fixed", "theorem", n, {"gamma1": g1.value, "a": a, "delta_n": t})


def worst_case_subcritical(n: int, n0: int, rho_H: float) -> float:
    """Subcritical closed form ``n0 + sqrt(rho/(1-rho)) sqrt(n0 (n-n0))`` for ``rho < 1``."""
    if rho_H >= 1.0:
        return math.inf
    return n0 + math.sqrt(rho_H / (1.0 - rho_H)) * math.sqrt(n0 * (n - n0))


def worst_case_closed_form(n: int, n0: int, rho_H: float) -> BoundReport:
    _check_n0(n, n0)
    _check_rho(rho_H)
    if n0 == n:
        raise DomainError("closed form needs n0 < n")
    regime, t = classify_regime("fixed", n, n0, rho_H)
    consts = {"delta_n": t}
    if regime == SUBCRITICAL:
        raw = worst_case_subcritical(n, n0, rho_H)
    elif regime == CRITICAL:
        raw = n0 + 2.0 ** (4.0 / 3.0) * n0 ** (1.0 / 3.0) * (n - n0) ** (2.0 / 3.0)
    else:
        g0 = gamma0(rho_H).value
        s = (1.0 - g0) * rho_H
        cn = math.sqrt(s / (1.0 - s))
        raw = n0 + (n - n0) * g0 + cn * math.sqrt(n0 * (n - n0))
        consts.update(gamma0=g0, c_n=cn)
    return _report(raw, regime, "fixed", "closed_form", n, consts)


# -- uniformly drawn influencers -----------------------------------------

def uniform_bound(n: int, n0: int, rho_H: float) -> BoundReport:
    """``n0 + gamma(rho_H, n0 rho_H/(n-n0)) (n-n0)`` for a uniform random set."""
    _check_n0(n, n0, lo=0)
    _check_rho(rho_H)
    regime, t = classify_regime("uniform", n, n0, rho_H)
    if n0 == n:
        return _report(float(n), regime, "uniform", "theorem", n, {"delta_prime_n": t})
    a = n0 * rho_H / (n - n0)
    g = gamma(rho_H, a)
    raw = n0 + g.value * (n - n0)
    return _report(raw, regime, "uniform", "theorem", n, {"gamma": g.value, "a": a, "delta_prime_n": t})


def uniform_closed_form(n: int, n0: int, rho_H: float) -> BoundReport:
    _check_n0(n, n0, lo=0)
    _check_rho(rho_H)
    if n0 == n:
        raise DomainError("closed form needs n0 < n")
    regime, t = classify_regime("uniform", n, n0, rho_H)
    consts = {"delta_prime_n": t}
    if regime == SUBCRITICAL:
        raw = n0 / (1.0 - rho_H)
    elif regime == CRITICAL:
        raw = n0 + math.sqrt(8.0 * n0 * (n - n0))
    else:
        g0 = gamma0(rho_H).value
        raw = (n - n0) * g0 + n0 / (1.0 - rho_H * (1.0 - g0))
        consts["gamma0"] = g0
    return _report(raw, regime, "uniform", "closed_form", n, consts)


# -- Bernoulli influencers -----------------------------------------------

def bernoulli_bound(n: int, q: float, rho_H: float) -> BoundReport:
    """``gamma(rho_H, -ln(1-q)) n`` when each node starts active with probability ``q``."""
    _check_n0(n, 0, lo=0)
    _check_q(q)
    _check_rho(rho_H)
    regime, t = classify_regime("bernoulli", n, q, rho_H)
    if q == 1.0:
        return _report(float(n), regime, "bernoulli", "theorem", n, {"d_q": t, "degenerate": True})
    a = -math.log1p(-q)
    g = gamma(rho_H, a)
    return _report(g.value * n, regime, "bernoulli", "theorem", n, {"gamma": g.value, "a": a, "d_q": t})


def bernoulli_closed_form(n: int, q: float, rho_H: float) -> BoundReport:
    _check_n0(n, 0, lo=0)
    _check_q(q)
    _check_rho(rho_H)
    regime, t = classify_regime("bernoulli", n, q, rho_H)
    if q == 1.0:
        return _report(float(n), regime, "bernoulli", "closed_form", n, {"d_q": t, "degenerate": True})
    a = -math.log1p(-q)
    consts = {"d_q": t, "a": a}
    if regime == SUBCRITICAL:
        raw = a * n / (1.0 - rho_H)
    elif regime == CRITICAL:
        raw = n * math.sqrt(8.0 * a)
    else:
        g0 = gamma0(rho_H).value
        raw = n * g0 + a * (1.0 - g0) * n / (1.0 - rho_H * (1.0 - g0))
        consts["gamma0"] = g0
    return _report(raw, regime, "bernoulli", "closed_form", n, consts)


# -- SIR -----------------------------------------------------------------

@dataclass(frozen=True)
class Exponential:
    """Exponential incubation with recovery rate ``rate``."""

    rate: float

    def __post_init__(self):
        if not self.rate > 0:
            raise DomainError(f"recovery rate must be > 0, got {self.rate!r}")

    def laplace(self, s: float) -> float:
        return self.rate / (self.rate + s)

    def transmit_prob(self, beta: float) -> float:
        """``P(T < D)`` for ``T ~ Exp(beta)``, i.e. ``1 - E[exp(-beta D)]``."""
        return beta / (self.rate + beta)

    def mean(self) -> float:
        return 1.0 / self.rate

    def sample(self, rng, size):
        return rng.exponential(1.0 / self.rate, size)


@dataclass(frozen=True)
class LogNormal:
    """``D = exp(mu + sigma Z)`` with standard normal ``Z``."""

    mu: float
    sigma: float

    def __post_init__(self):
        if not self.sigma >= 0:
            raise DomainError(f"sigma must be >= 0, got {self.sigma!r}")

    def _one_minus_laplace(self, s: float) -> float:
        if s == 0.0:
            return 0.0
        if self.sigma == 0.0:
            return -math.expm1(-s * math.exp(self.mu))
        mu, sig = self.mu, self.sigma

        def f(z):
            return -math.expm1(-s * math.exp(mu + sig * z)) * math.exp(-0.5 * z * z)

        # the integrand switches from ~s e^{mu+sig z} to ~1 around here
        z_star = min(max((-math.log(s) - mu) / sig, -39.0), 39.0)
        total, err = 0.0, 0.0
        for lo, hi in ((-40.0, z_star), (z_star, 40.0)):
            val, e = integrate.quad(f, lo, hi, epsabs=0.0, epsrel=1e-12, limit=500)
            total += val
            err += e
        total /= math.sqrt(2.0 * math.pi)
        err /= math.sqrt(2.0 * math.pi)
        if total > 0 and err > 1e-10 * total:
            raise NumericalError(f"log-normal Laplace quadrature error {err:.3g} too large")
        return min(total, 1.0)

    def laplace(self, s: float) -> float:
        return 1.0 - self._one_minus_laplace(s)

    def transmit_prob(self, beta: float) -> float:
        return self._one_minus_laplace(beta)

    def mean(self) -> float:
        return math.exp(self.mu + 0.5 * self.sigma**2)

    def sample(self, rng, size):
        return np.exp(self.mu + self.sigma * rng.standard_normal(size))


@dataclass(frozen=True)
class Deterministic:
    """Every node stays infectious for exactly ``d`` time units."""

    d: float

    def __post_init__(self):
        if not self.d > 0:
            raise DomainError(f"incubation time must be > 0, got {self.d!r}")

    def laplace(self, s: float) -> float:
        return math.exp(-s * self.d)

    def transmit_prob(self, beta: float) -> float:
        return -math.expm1(-beta * self.d)

    def mean(self) -> float:
        return self.d

    def sample(self, rng, size):
        return np.full(size, self.d)


IncubationDist = Exponential | LogNormal | Deterministic


@dataclass(frozen=True)
class SirParams:
    beta: float
    incubation: IncubationDist
    rho_A: float

    def __post_init__(self):
        if not self.beta > 0:
            raise DomainError(f"beta must be > 0, got {self.beta!r}")
        if not self.rho_A >= 0:
            raise DomainError(f"rho_A must be >= 0, got {self.rho_A!r}")

    @classmethod
    def from_edges(cls, n, edges, beta, incubation) -> "SirParams":
        rho_A, _, _ = spectral_radius(edges_matrix(n, edges))
        return cls(beta, incubation, rho_A)


def sir_hazard_radius(rho_A: float, beta: float, incubation: IncubationDist) -> float:
    """``-rho(A) ln E[exp(-beta D)]``, closed form where one exists."""
    if not beta > 0:
        raise DomainError(f"beta must be > 0, got {beta!r}")
    if not rho_A >= 0:
        raise DomainError(f"rho_A must be >= 0, got {rho_A!r}")
    if isinstance(incubation, Exponential):
        return math.log1p(beta / incubation.rate) * rho_A
    if isinstance(incubation, Deterministic):
        return beta * incubation.d * rho_A
    return -rho_A * math.log1p(-incubation.transmit_prob(beta))


def draief_bound(n: int, n0: int, beta: float, delta: float, rho_A: float) -> float:
    """Comparison bound ``sqrt(n n0) / (1 - (beta/delta) rho(A))``."""
    _check_n0(n, n0)
    x = beta / delta * rho_A
    if x >= 1.0:
        raise DomainError(f"(beta/delta) rho(A) = {x} must be < 1")
    return math.sqrt(n * n0) / (1.0 - x)


@dataclass
class ThresholdReport:
    rho_H: float
    conditions: dict  # name -> {"applicable": bool, "holds": bool, "lhs": float, "rhs": float}

    def to_dict(self) -> dict:
        return {"rho_H": self.rho_H, "conditions": {k: dict(v) for k, v in self.conditions.items()}}

    def holds(self, name: str) -> bool:
        c = self.conditions[name]
        return c["applicable"] and c["holds"]


def sir_threshold_report(params: SirParams) -> ThresholdReport:
    """Evaluate each sufficient condition for a subcritical SIR epidemic.

    All conditions are strict inequalities; equality is reported as not held.
    """
    beta, inc, rho_A = params.beta, params.incubation, params.rho_A
    rho_H = sir_hazard_radius(rho_A, beta, inc)
    expo = isinstance(inc, Exponential)
    conds = {}

    def put(name, applicable, lhs, rhs):
        conds[name] = {"applicable": applicable, "holds": bool(applicable and lhs < rhs), "lhs": lhs, "rhs": rhs}

    put("hazard_radius", True, rho_H, 1.0)
    if expo:
        put("classical", True, beta * rho_A, inc.rate)
        rhs = math.inf if rho_A == 0 else math.expm1(1.0 / rho_A)
        put("exp_form", True, beta / inc.rate, rhs)
    else:
        put("classical", False, math.nan, math.nan)
        put("exp_form", False, math.nan, math.nan)
    put("mean_incubation", True, beta * rho_A * inc.mean(), 1.0)
    if isinstance(inc, LogNormal):
        rhs = math.inf if rho_A == 0 else -math.log(beta * rho_A)
        put("lognormal", True, inc.mu + 0.5 * inc.sigma**2, rhs)
    else:
        put("lognormal", False, math.nan, math.nan)
    return ThresholdReport(rho_H, conds)
