"""Monte Carlo experiments that compare empirical estimates with the bounds.

An experiment is described by a JSON-compatible dict (see :func:`load_config`)::

    {
      "model": {"generator": "erdos", "params": {"n": 1000, "c": 2.0}},
      "process": "bond",                  # bond | site | sir | cascade
      "process_params": {},
      "scenario": "fixed:0",              # fixed:<ids> | uniform:<n0> | bernoulli:<q>
      "trials": 1000,
      "master_seed": 1,
      "outputs": ["influence", "c1", "n_at_least:10", "linkperco_lhs:0.1", "giant_lhs:0.1"],
      "bounds": true,
      "workers": 1
    }

Trial ``k`` always uses the stream ``TrialSeed(master_seed, k)`` and results
are aggregated in trial order, so the worker count never changes the output.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .bounds import (
    Deterministic,
    Exponential,
    LogNormal,
    bernoulli_bound,
    bernoulli_closed_form,
    classify_regime,
    draief_bound,
    sir_hazard_radius,
    sir_threshold_report,
    SirParams,
    uniform_bound,
    uniform_closed_form,
    worst_case_bound,
    worst_case_closed_form,
)
from .errors import ConfigError, HazardBoundsError
from .graph_model import (
    GraphSpec,
    cycle_edges,
    erdos_spec,
    from_edge_list,
    grid_spec,
    make_spec,
    norros_reittu_spec,
    random_star_spec,
    star_spec,
    uniform_spec_on_edges,
)
from .hazard import edges_matrix, gamma, gamma0, hazard_radius, spec_hazard_radius, spectral_radius
from .percolation import (
    giant_component_bound,
    implicit_giant_rhs,
    n_components_bound,
    site_percolation_hazard,
)
from .simulators import (
    TrialSeed,
    components,
    exact_influence,
    exact_scenario_influence,
    reachable_mask,
    sample_graph,
    sample_site_percolation,
    sample_sir_graph,
)

Z_SLACK = 3.0
# absolute room for rounding when mean and bound coincide analytically
FLOAT_SLACK = 1e-9
CSV_COMMENT = "#"


# -- configuration -------------------------------------------------------

GENERATORS = {
    "erdos": (erdos_spec, ("n", "c")),
    "star": (star_spec, ("n", "p")),
    "grid": (grid_spec, ("d", "side", "p")),
    "random_star": (random_star_spec, ("n", "a", "b")),
    "norros_reittu": (norros_reittu_spec, ("w",)),
    "cycle": (lambda n, p: uniform_spec_on_edges(n, cycle_edges(n), p, label=f"cycle(n={n},p={p!r})"), ("n", "p")),
}
PROCESSES = ("bond", "site", "sir", "cascade")


@dataclass(frozen=True)
class Scenario:
    kind: str  # fixed | uniform | bernoulli
    nodes: tuple = ()
    n0: int = 0
    q: float = 0.0

    @classmethod
    def parse(cls, text: str, n: int, path: str = "scenario") -> "Scenario":
        kind, _, arg = str(text).partition(":")
        try:
            if kind == "fixed":
                nodes = tuple(sorted({int(x) for x in arg.split(",") if x.strip()}))
                if any(v < 0 or v >= n for v in nodes):
                    raise ConfigError(path, f"influencer outside [0, {n})")
                return cls("fixed", nodes=nodes, n0=len(nodes))
            if kind == "uniform":
                n0 = int(arg)
                if not 0 <= n0 <= n:
                    raise ConfigError(path, f"n0 must lie in [0, {n}]")
                return cls("uniform", n0=n0)
            if kind == "bernoulli":
                q = float(arg)
                if not 0.0 <= q <= 1.0:
                    raise ConfigError(path, "q must lie in [0, 1]")
                return cls("bernoulli", q=q)
        except ValueError as exc:
            raise ConfigError(path, f"cannot parse {text!r}: {exc}") from None
        raise ConfigError(path, f"expected fixed:<ids>, uniform:<n0> or bernoulli:<q>, got {text!r}")

    def __str__(self):
        if self.kind == "fixed":
            return "fixed:" + ",".join(map(str, self.nodes))
        if self.kind == "uniform":
            return f"uniform:{self.n0}"
        return f"bernoulli:{self.q!r}"

    def draw(self, n: int, rng) -> np.ndarray:
        if self.kind == "fixed":
            return np.array(self.nodes, dtype=np.int64)
        if self.kind == "uniform":
            return partial_fisher_yates(n, self.n0, rng)
        return np.flatnonzero(rng.random(n) < self.q)


def partial_fisher_yates(n: int, k: int, rng) -> np.ndarray:
    """Uniform k-subset of ``range(n)``: the first k steps of a Fisher-Yates shuffle."""
    swapped = {}
    out = np.empty(k, dtype=np.int64)
    for i in range(k):
        j = int(rng.integers(i, n))
        out[i] = swapped.get(j, j)
        swapped[j] = swapped.get(i, i)
    return np.sort(out)


def _parse_output(name: str, path: str):
    kind, _, arg = name.partition(":")
    if kind in ("influence", "c1") and not arg:
        return kind, None
    try:
        if kind == "n_at_least":
            m = int(arg)
            if m < 1:
                raise ConfigError(path, "m must be >= 1")
            return kind, m
        if kind in ("linkperco_lhs", "giant_lhs"):
            a = float(arg)
            if not a > 0:
                raise ConfigError(path, "a must be > 0")
            return kind, a
    except ValueError:
        raise ConfigError(path, f"bad argument in {name!r}") from None
    raise ConfigError(path, f"unknown estimand {name!r}")


def _incubation(d: dict, path: str):
    kind = d.get("kind", "exponential")
    try:
        if kind == "exponential":
            return Exponential(float(d["rate"]))
        if kind == "lognormal":
            return LogNormal(float(d["mu"]), float(d["sigma"]))
        if kind == "deterministic":
            return Deterministic(float(d["d"]))
    except KeyError as exc:
        raise ConfigError(f"{path}.{exc.args[0]}", "missing field") from None
    except HazardBoundsError as exc:
        raise ConfigError(path, str(exc)) from None
    raise ConfigError(f"{path}.kind", f"unknown incubation {kind!r}")


def build_spec(model: dict, path: str = "model") -> GraphSpec:
    if not isinstance(model, dict):
        raise ConfigError(path, "expected an object")
    if "edge_list" in model:
        try:
            return from_edge_list(model["edge_list"])
        except (OSError, HazardBoundsError) as exc:
            raise ConfigError(f"{path}.edge_list", str(exc)) from None
    name = model.get("generator")
    if name not in GENERATORS:
        raise ConfigError(f"{path}.generator", f"unknown generator {name!r}; choose from {sorted(GENERATORS)}")
    fn, names = GENERATORS[name]
    params = model.get("params", {})
    missing = [k for k in names if k not in params]
    if missing:
        raise ConfigError(f"{path}.params.{missing[0]}", "missing parameter")
    extra = sorted(set(params) - set(names))
    if extra:
        raise ConfigError(f"{path}.params.{extra[0]}", "unexpected parameter")
    try:
        return fn(*(params[k] for k in names))
    except (HazardBoundsError, TypeError, ValueError) as exc:
        raise ConfigError(f"{path}.params", str(exc)) from None


@dataclass
class ExperimentConfig:
    raw: dict
    spec: GraphSpec
    process: str
    process_params: dict
    scenario: Scenario
    trials: int
    master_seed: int
    outputs: list
    bounds: bool = True
    workers: int = 1
    edges: np.ndarray = field(default=None, repr=False)

    @property
    def n(self) -> int:
        return self.spec.n

    def sha256(self) -> str:
        return config_hash(self.raw)


EXECUTION_KEYS = ("workers",)


def _strip_execution(obj):
    if isinstance(obj, dict):
        return {k: _strip_execution(v) for k, v in obj.items() if k not in EXECUTION_KEYS}
    if isinstance(obj, list):
        return [_strip_execution(v) for v in obj]
    return obj


def config_hash(raw: dict) -> str:
    """SHA-256 of the canonical JSON config; the worker count is left out."""
    blob = json.dumps(_strip_execution(raw), sort_keys=True, separators=(",", ":")).encode("utf-8")
    return hashlib.sha256(blob).hexdigest()


def parse_config(raw: dict) -> ExperimentConfig:
    """Validate a config dict; errors name the offending field."""
    if not isinstance(raw, dict):
        raise ConfigError("$", "config must be a JSON object")
    if "model" not in raw:
        raise ConfigError("model", "missing field")
    spec = build_spec(raw["model"])
    process = raw.get("process", "bond")
    if process not in PROCESSES:
        raise ConfigError("process", f"expected one of {PROCESSES}, got {process!r}")
    pp = dict(raw.get("process_params", {}))
    trials = raw.get("trials", default_trials(spec.n))
    if not isinstance(trials, int) or trials < 1:
        raise ConfigError("trials", "must be an integer >= 1")
    seed = raw.get("master_seed", 0)
    if not isinstance(seed, int) or not 0 <= seed < 2**64:
        raise ConfigError("master_seed", "must be an integer in [0, 2^64)")
    scenario = Scenario.parse(raw.get("scenario", "fixed:0"), spec.n)
    outs = raw.get("outputs", ["influence"])
    if not isinstance(outs, list) or not outs:
        raise ConfigError("outputs", "must be a nonempty list")
    outputs = [_parse_output(o, f"outputs[{i}]") for i, o in enumerate(outs)]
    workers = raw.get("workers", 1)
    if not isinstance(workers, int) or workers < 1:
        raise ConfigError("workers", "must be an integer >= 1")

    edges = None
    if process in ("site", "sir"):
        if not spec.undirected:
            raise ConfigError("model", f"{process} needs an undirected base graph")
        r, c, _ = spec.entries()
        off = r != c
        edges = np.column_stack([r[off], c[off]])
    if process == "site":
        if "node_probs" in pp:
            probs = np.asarray(pp["node_probs"], dtype=float)
            if len(probs) != spec.n:
                raise ConfigError("process_params.node_probs", "need one probability per node")
        elif "node_prob" in pp:
            probs = np.full(spec.n, float(pp["node_prob"]))
        else:
            raise ConfigError("process_params.node_prob", "missing field")
        if np.any(~((probs >= 0) & (probs < 1))):
            raise ConfigError("process_params.node_prob", "probabilities must lie in [0, 1)")
        pp["node_probs"] = probs
    if process == "sir":
        if "beta" not in pp:
            raise ConfigError("process_params.beta", "missing field")
        if not float(pp["beta"]) > 0:
            raise ConfigError("process_params.beta", "must be > 0")
        pp["incubation"] = _incubation(pp.get("incubation", {"kind": "exponential", "rate": 1.0}),
                                       "process_params.incubation")
    for kind, _ in outputs:
        if kind != "influence" and process not in ("bond", "site"):
            raise ConfigError("outputs", f"component estimands need an undirected bond/site process, not {process}")
        if kind != "influence" and not spec.undirected:
            raise ConfigError("outputs", "component estimands need an undirected model")
        if kind == "influence" and process == "site":
            raise ConfigError("outputs", "influence is not defined for site percolation here")
    return ExperimentConfig(
        raw=raw,
        spec=spec,
        process=process,
        process_params=pp,
        scenario=scenario,
        trials=trials,
        master_seed=seed,
        outputs=outputs,
        bounds=bool(raw.get("bounds", True)),
        workers=workers,
        edges=edges,
    )


def read_config_json(path) -> dict:
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigError("$", f"cannot read {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError("$", f"invalid JSON: {exc}") from None


def load_config(path) -> ExperimentConfig:
    return parse_config(read_config_json(path))


def default_trials(n: int) -> int:
    return 10_000 if n <= 1000 else 200


# -- trials --------------------------------------------------------------

def _trial_values(cfg: ExperimentConfig, index: int) -> list[float]:
    rng = TrialSeed(cfg.master_seed, index).rng()
    n = cfg.n
    I = cfg.scenario.draw(n, rng)
    need_components = any(k != "influence" for k, _ in cfg.outputs)
    stats = None
    if cfg.process == "site":
        stats = sample_site_percolation(n, cfg.edges, cfg.process_params["node_probs"], rng)
        g = None
    elif cfg.process == "sir":
        pp = cfg.process_params
        g = sample_sir_graph(n, cfg.edges, float(pp["beta"]), pp["incubation"], rng)
    else:
        g = sample_graph(cfg.spec, rng)
    if need_components and stats is None:
        stats = components(g)
    out = []
    for kind, arg in cfg.outputs:
        if kind == "influence":
            out.append(float(reachable_mask(g, I).sum()))
        elif kind == "c1":
            out.append(float(stats.c1))
        elif kind == "n_at_least":
            out.append(float(stats.n_at_least(arg)))
        elif kind == "linkperco_lhs":
            s = stats.sizes.astype(float)
            out.append(float(-(s * np.expm1(-arg * s)).sum()))
        else:  # giant_lhs
            c1 = float(stats.c1)
            out.append(-c1 * math.expm1(-arg * (c1 - 1.0)) if c1 > 0 else 0.0)
    return out


def _run_chunk(raw: dict, start: int, stop: int) -> np.ndarray:
    cfg = parse_config(raw)
    return np.array([_trial_values(cfg, k) for k in range(start, stop)], dtype=float).reshape(stop - start, -1)


def run_trials(cfg: ExperimentConfig) -> np.ndarray:
    """``trials x estimands`` array, rows in trial order."""
    if cfg.workers == 1 or cfg.trials < 2:
        return np.array([_trial_values(cfg, k) for k in range(cfg.trials)], dtype=float).reshape(cfg.trials, -1)
    step = math.ceil(cfg.trials / (4 * cfg.workers))
    bounds = [(s, min(s + step, cfg.trials)) for s in range(0, cfg.trials, step)]
    with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
        parts = list(pool.map(_run_chunk, [cfg.raw] * len(bounds), *zip(*bounds)))
    return np.vstack(parts)


@dataclass
class SimEstimate:
    estimand: str
    mean: float
    stderr: float
    trials: int
    master_seed: int

    def to_dict(self):
        return dict(self.__dict__)


def estimate(name: str, samples, master_seed: int) -> SimEstimate:
    x = np.asarray(samples, dtype=float)
    se = float(x.std(ddof=1) / math.sqrt(len(x))) if len(x) > 1 else 0.0
    return SimEstimate(name, float(x.mean()), se, len(x), master_seed)


# -- bounds attached to a config ------------------------------------------

def config_rho_H(cfg: ExperimentConfig) -> dict:
    """Hazard radius of the process described by ``cfg`` plus diagnostics."""
    if cfg.process == "site":
        s = hazard_radius(site_percolation_hazard(cfg.edges, cfg.process_params["node_probs"]))
        return {"rho_H": s.rho_H, "iterations": s.iterations, "residual": s.residual}
    if cfg.process == "sir":
        rho_A, it, res = spectral_radius(edges_matrix(cfg.n, cfg.edges))
        pp = cfg.process_params
        rho_H = sir_hazard_radius(rho_A, float(pp["beta"]), pp["incubation"])
        return {"rho_H": rho_H, "rho_A": rho_A, "iterations": it, "residual": res}
    return spec_hazard_radius(cfg.spec).to_dict()


@dataclass
class BoundCheck:
    estimand: str
    bound_name: str
    bound: float
    mean: float
    stderr: float
    regime: str = ""

    @property
    def margin(self) -> float:
        """``bound + 3 stderr - mean``; negative means the check failed."""
        return self.bound + Z_SLACK * self.stderr - self.mean

    @property
    def passed(self) -> bool:
        return self.margin >= -FLOAT_SLACK * max(1.0, abs(self.bound))

    def to_dict(self):
        d = dict(self.__dict__)
        d.update(margin=self.margin, passed=self.passed)
        return d


def influence_bounds(cfg: ExperimentConfig, rho_H: float) -> list[tuple[str, float, str]]:
    n, sc = cfg.n, cfg.scenario
    out = []
    if sc.kind == "fixed":
        if sc.n0 == 0:
            return [("empty_set", 0.0, "")]
        t = worst_case_bound(n, sc.n0, rho_H)
        out.append(("worst_case", t.bound, t.regime))
        if sc.n0 < n:
            c = worst_case_closed_form(n, sc.n0, rho_H)
            out.append(("worst_case_closed_form", c.bound, c.regime))
        inc = cfg.process_params.get("incubation")
        if cfg.process == "sir" and isinstance(inc, Exponential):
            rho_A = spectral_radius(edges_matrix(n, cfg.edges))[0]
            beta = float(cfg.process_params["beta"])
            if beta * rho_A < inc.rate:
                out.append(("draief", draief_bound(n, sc.n0, beta, inc.rate, rho_A), ""))
    elif sc.kind == "uniform":
        t = uniform_bound(n, sc.n0, rho_H)
        out.append(("uniform", t.bound, t.regime))
        if sc.n0 < n:
            c = uniform_closed_form(n, sc.n0, rho_H)
            out.append(("uniform_closed_form", c.bound, c.regime))
    else:
        t = bernoulli_bound(n, sc.q, rho_H)
        out.append(("bernoulli", t.bound, t.regime))
        c = bernoulli_closed_form(n, sc.q, rho_H)
        out.append(("bernoulli_closed_form", c.bound, c.regime))
    return out


def estimand_bounds(cfg: ExperimentConfig, kind: str, arg, rho_H: float) -> list[tuple[str, float, str]]:
    n = cfg.n
    if kind == "influence":
        return influence_bounds(cfg, rho_H)
    if kind == "c1":
        g = giant_component_bound(n, rho_H)
        return [("giant_component", g.bound, g.regime)]
    if kind == "n_at_least":
        return [("n_components", n_components_bound(n, arg, rho_H), "")]
    if kind == "linkperco_lhs":
        return [("gamma_n", gamma(rho_H, arg).value * n, "")]
    return [("implicit_giant_rhs", implicit_giant_rhs(n, rho_H, arg), "")]


def _name(kind, arg):
    return kind if arg is None else f"{kind}:{arg}"


@dataclass
class MonteCarloResult:
    config_sha256: str
    master_seed: int
    hazard: dict
    estimates: list
    checks: list

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def to_dict(self):
        return {
            "tool": "hazardbounds",
            "version": __version__,
            "master_seed": self.master_seed,
            "config_sha256": self.config_sha256,
            "hazard": self.hazard,
            "estimates": [e.to_dict() for e in self.estimates],
            "checks": [c.to_dict() for c in self.checks],
            "passed": self.passed,
        }


def run_monte_carlo(cfg: ExperimentConfig | dict) -> MonteCarloResult:
    if isinstance(cfg, dict):
        cfg = parse_config(cfg)
    data = run_trials(cfg)
    hz = config_rho_H(cfg) if cfg.bounds else {}
    ests, checks = [], []
    for col, (kind, arg) in enumerate(cfg.outputs):
        e = estimate(_name(kind, arg), data[:, col], cfg.master_seed)
        ests.append(e)
        if cfg.bounds:
            for bname, value, regime in estimand_bounds(cfg, kind, arg, hz["rho_H"]):
                checks.append(BoundCheck(e.estimand, bname, value, e.mean, e.stderr, regime))
    return MonteCarloResult(cfg.sha256(), cfg.master_seed, hz, ests, checks)


def validate_bounds(cfg: ExperimentConfig | dict) -> MonteCarloResult:
    """Run the experiment and check ``mean <= bound + 3 stderr`` for every pair."""
    return run_monte_carlo(cfg)


# -- exact battery -------------------------------------------------------

def random_small_spec(rng, n_max: int = 12, max_edges: int = 14) -> GraphSpec:
    """Random undirected spec on at most ``n_max`` nodes with heterogeneous probabilities."""
    n = int(rng.integers(2, n_max + 1))
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
    k = int(rng.integers(1, min(max_edges, len(pairs)) + 1))
    pick = rng.choice(len(pairs), size=k, replace=False)
    r = [pairs[t][0] for t in pick]
    c = [pairs[t][1] for t in pick]
    # mix of small and large probabilities so every regime shows up
    p = rng.uniform(0.0, 0.95, k) ** rng.choice([0.5, 1.0, 2.0])
    return make_spec(n, r, c, p)


def exact_battery(count: int = 100, seed: int = 0, n_max: int = 12, max_edges: int = 14) -> list[dict]:
    """Exact influence vs theorem bounds on random small specs, all three scenarios."""
    rng = np.random.default_rng(seed)
    rows = []
    for k in range(count):
        spec = random_small_spec(rng, n_max, max_edges)
        n = spec.n
        rho = spec_hazard_radius(spec).rho_H
        n0 = int(rng.integers(1, n + 1))
        I = np.sort(rng.choice(n, size=n0, replace=False))
        q = float(rng.uniform(0.0, 0.5))
        cases = [
            ("fixed", exact_influence(spec, I), worst_case_bound(n, n0, rho).bound),
            ("uniform", exact_scenario_influence(spec, "uniform", n0), uniform_bound(n, n0, rho).bound),
            ("bernoulli", exact_scenario_influence(spec, "bernoulli", q), bernoulli_bound(n, q, rho).bound),
        ]
        for scenario, exact, bound in cases:
            rows.append({
                "spec": k, "n": n, "edges": len(spec.probs), "rho_H": rho, "scenario": scenario,
                "n0": n0, "q": q, "exact": exact, "bound": bound, "margin": bound - exact,
            })
    return rows


# -- CSV output ----------------------------------------------------------

def _fmt(v) -> str:
    if v is None or (isinstance(v, float) and math.isnan(v)):
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def csv_text(columns, rows, master_seed: int, config_sha256: str) -> str:
    """CSV with a comment header carrying tool version, seed and config hash."""
    buf = io.StringIO()
    buf.write(f"{CSV_COMMENT} tool=hazardbounds version={__version__}\n")
    buf.write(f"{CSV_COMMENT} master_seed={master_seed}\n")
    buf.write(f"{CSV_COMMENT} config_sha256={config_sha256}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([_fmt(row.get(c)) for c in columns])
    return buf.getvalue()


def jsonable(obj):
    """Replace non-finite floats by ``None`` and numpy scalars by Python ones."""
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return float(obj) if math.isfinite(obj) else None
    return obj


def read_csv_rows(text: str) -> list[dict]:
    lines = [ln for ln in text.splitlines() if not ln.startswith(CSV_COMMENT)]
    return list(csv.DictReader(lines))


CHECK_COLUMNS = ["estimand", "bound_name", "regime", "mean", "stderr", "bound", "margin", "passed"]


def result_csv(res: MonteCarloResult) -> str:
    rows = [c.to_dict() for c in res.checks]
    if not rows:
        rows = [{"estimand": e.estimand, "mean": e.mean, "stderr": e.stderr} for e in res.estimates]
    return csv_text(CHECK_COLUMNS, rows, res.master_seed, res.config_sha256)


# -- sweeps --------------------------------------------------------------

SWEEP_COLUMNS = [
    "param", "value", "n", "rho_H", "regime",
    "influence_mean", "influence_stderr", "influence_bound", "influence_closed_form",
    "c1_mean", "c1_stderr", "c1_bound", "c1_regime",
    "classical_condition", "hazard_condition", "trials",
]


def _apply_param(raw: dict, param: str, value) -> dict:
    cfg = json.loads(json.dumps(raw))
    if param == "beta_over_delta":
        inc = cfg.setdefault("process_params", {}).setdefault("incubation", {"kind": "exponential", "rate": 1.0})
        if inc.get("kind", "exponential") != "exponential":
            raise ConfigError("process_params.incubation", "beta_over_delta needs exponential incubation")
        cfg["process_params"]["beta"] = float(value) * float(inc["rate"])
    else:
        params = cfg.get("model", {}).get("params")
        if params is None or param not in params:
            raise ConfigError(f"model.params.{param}", "not a parameter of the model")
        params[param] = value
    return cfg


def run_sweep(base: dict, param: str, values) -> tuple[list[str], list[dict]]:
    """One row per grid value: Hazard radius, regime, bounds and estimates."""
    values = list(values)
    if not values:
        raise ConfigError("values", "sweep grid is empty")
    rows = []
    for v in values:
        cfg = parse_config(_apply_param(base, param, v))
        res = run_monte_carlo(cfg)
        rho = res.hazard["rho_H"]
        row = {"param": param, "value": v, "n": cfg.n, "rho_H": rho, "trials": cfg.trials}
        sc = cfg.scenario
        row["regime"] = classify_regime(sc.kind, cfg.n, sc.q if sc.kind == "bernoulli" else sc.n0, rho)[0]
        row["hazard_condition"] = rho < 1.0
        if cfg.process == "sir":
            pp = cfg.process_params
            rep = sir_threshold_report(SirParams(float(pp["beta"]), pp["incubation"], res.hazard["rho_A"]))
            row["classical_condition"] = rep.holds("classical") if rep.conditions["classical"]["applicable"] else None
        for e in res.estimates:
            if e.estimand in ("influence", "c1"):
                row[f"{e.estimand}_mean"] = e.mean
                row[f"{e.estimand}_stderr"] = e.stderr
        for c in res.checks:
            if c.estimand == "influence" and c.bound_name in ("worst_case", "uniform", "bernoulli", "empty_set"):
                row["influence_bound"] = c.bound
            elif c.estimand == "influence" and c.bound_name.endswith("closed_form"):
                row["influence_closed_form"] = c.bound
            elif c.estimand == "c1":
                row["c1_bound"] = c.bound
                row["c1_regime"] = c.regime
        rows.append(row)
    return SWEEP_COLUMNS, rows


def run_scaling(base: dict, ns, estimand: str = "c1") -> tuple[list[dict], float]:
    """Estimate ``estimand`` at each model size ``n``; returns rows and log-log slope."""
    rows = []
    for n in ns:
        cfg = _apply_param(base, "n", int(n))
        cfg["outputs"] = [estimand]
        cfg["bounds"] = False
        res = run_monte_carlo(cfg)
        e = res.estimates[0]
        rows.append({"n": int(n), "mean": e.mean, "stderr": e.stderr, "trials": e.trials})
    slope = loglog_slope([r["n"] for r in rows], [r["mean"] for r in rows])
    return rows, slope


def loglog_slope(xs, ys) -> float:
    lx, ly = np.log(np.asarray(xs, float)), np.log(np.asarray(ys, float))
    return float(np.polyfit(lx, ly, 1)[0])


# -- tightness -----------------------------------------------------------

TIGHTNESS_COLUMNS = ["rho", "n", "a", "b", "rho_H", "sigma_mean", "sigma_stderr", "scaling", "ratio", "gamma0", "trials"]


def tightness_construction(rho: float, n: int) -> tuple[float, float]:
    """Hub and background probabilities ``(a, b)`` of the random star-network."""
    if rho < 1.0:
        return rho / math.sqrt(n - 1), 0.0
    return 1.0 / math.sqrt(n * math.log(n)), rho / n


def run_tightness(rho: float, ns, trials: int, master_seed: int = 0, workers: int = 1) -> tuple[list[str], list[dict]]:
    """Influence of the hub in the random star-network, rescaled by its predicted order."""
    if not rho > 0:
        raise ConfigError("rho", "must be > 0")
    rows = []
    for n in ns:
        if n < 10:
            raise ConfigError("n", "all n must be >= 10")
        a, b = tightness_construction(rho, n)
        raw = {
            "model": {"generator": "random_star", "params": {"n": int(n), "a": a, "b": b}},
            "scenario": "fixed:0",
            "trials": int(trials),
            "master_seed": int(master_seed),
            "outputs": ["influence"],
            "bounds": False,
            "workers": workers,
        }
        cfg = parse_config(raw)
        res = run_monte_carlo(cfg)
        e = res.estimates[0]
        if rho < 1.0:
            scaling, scale = "sqrt_n", math.sqrt(n)
        elif rho == 1.0:
            scaling, scale = "n_2_3", n ** (2.0 / 3.0)
        else:
            scaling, scale = "n", float(n)
        rows.append({
            "rho": rho, "n": int(n), "a": a, "b": b,
            "rho_H": spec_hazard_radius(cfg.spec).rho_H,
            "sigma_mean": e.mean, "sigma_stderr": e.stderr,
            "scaling": scaling, "ratio": e.mean / scale,
            "gamma0": gamma0(rho).value, "trials": e.trials,
        })
    return TIGHTNESS_COLUMNS, rows


# -- link-percolation identity -------------------------------------------

def run_linkperco_check(spec: GraphSpec, a: float, trials: int, master_seed: int = 0) -> dict:
    """Compare ``E[sum_k C_k (1 - exp(-a C_k))]`` with ``gamma(rho_H, a) n``."""
    if not a > 0:
        raise ConfigError("a", "must be > 0")
    vals = np.empty(trials)
    for k in range(trials):
        s = components(sample_graph(spec, TrialSeed(master_seed, k))).sizes.astype(float)
        vals[k] = -(s * np.expm1(-a * s)).sum()
    e = estimate(f"linkperco_lhs:{a}", vals, master_seed)
    rho = spec_hazard_radius(spec).rho_H
    rhs = gamma(rho, a).value * spec.n
    return {
        "a": a, "rho_H": rho, "lhs_mean": e.mean, "lhs_stderr": e.stderr,
        "rhs": rhs, "margin": rhs + Z_SLACK * e.stderr - e.mean,
        "passed": bool(e.mean <= rhs + Z_SLACK * e.stderr + FLOAT_SLACK * max(1.0, rhs)), "trials": trials,
    }
