"""Samplers for random graphs and diffusions, plus exact small-instance oracles.

Every sampler takes either a :class:`TrialSeed` or a ``numpy.random.Generator``.
A ``TrialSeed`` maps ``(master, index)`` to its own stream, so trials can be
run in any order or on any worker and still reproduce bit-exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import sparse
from scipy.sparse import csgraph

from .bounds import Exponential
from .errors import CapacityError, ContractViolation, DomainError, InvalidProbabilityError
from .graph_model import GraphSpec, ctic_spec

EXACT_MAX_EDGES = 25
EXACT_CHUNK = 1 << 15
SIR_EXACT_MAX_LEAVES = 1 << 22
SMALL_BACKGROUND = 4096


# -- randomness ----------------------------------------------------------

@dataclass(frozen=True)
class TrialSeed:
    master: int
    index: int

    def rng(self) -> np.random.Generator:
        return np.random.default_rng(np.random.SeedSequence(self.master, spawn_key=(self.index,)))


def as_rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    if isinstance(seed, TrialSeed):
        return seed.rng()
    return np.random.default_rng(seed)


# -- realised graphs -----------------------------------------------------

@dataclass(frozen=True, eq=False)
class SampledGraph:
    """Realised directed adjacency in CSR form (out-neighbours of each node)."""

    n: int
    indptr: np.ndarray
    indices: np.ndarray
    undirected: bool = False

    @classmethod
    def from_arcs(cls, n, src, dst, undirected=False) -> "SampledGraph":
        """Build from directed arcs; ``undirected`` mirrors each arc."""
        src = np.asarray(src, dtype=np.int64)
        dst = np.asarray(dst, dtype=np.int64)
        if undirected:
            off = src != dst
            src, dst = np.concatenate([src, dst[off]]), np.concatenate([dst, src[off]])
        order = np.lexsort((dst, src))
        src, dst = src[order], dst[order]
        if len(src) > 1:
            keep = np.ones(len(src), bool)
            keep[1:] = (src[1:] != src[:-1]) | (dst[1:] != dst[:-1])
            src, dst = src[keep], dst[keep]
        indptr = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(np.bincount(src, minlength=n), out=indptr[1:])
        return cls(n, indptr, dst, undirected)

    @property
    def num_arcs(self) -> int:
        return len(self.indices)

    def out_neighbors(self, i: int) -> np.ndarray:
        return self.indices[self.indptr[i]:self.indptr[i + 1]]

    def arcs(self) -> tuple[np.ndarray, np.ndarray]:
        src = np.repeat(np.arange(self.n, dtype=np.int64), np.diff(self.indptr))
        return src, self.indices

    def has_arc(self, i: int, j: int) -> bool:
        nb = self.out_neighbors(i)
        k = np.searchsorted(nb, j)
        return bool(k < len(nb) and nb[k] == j)

    def to_csr(self) -> sparse.csr_matrix:
        data = np.ones(len(self.indices), dtype=np.float64)
        return sparse.csr_matrix((data, self.indices, self.indptr), shape=(self.n, self.n))

    def is_symmetric(self) -> bool:
        if self.undirected:
            return True  # arcs were mirrored on construction
        src, dst = self.arcs()
        # arcs are sorted by (src, dst), so compare against the sorted reverse keys
        return bool(np.array_equal(src * self.n + dst, np.sort(dst * self.n + src)))


def _unrank_lower(k: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    # k -> (i, j), j < i, enumerating i = 1, 2, ... with k = i (i-1)/2 + j
    i = ((1.0 + np.sqrt(1.0 + 8.0 * k.astype(np.float64))) / 2.0).astype(np.int64)
    # float rounding can put i one off in either direction
    i -= (i * (i - 1) // 2) > k
    i += ((i + 1) * i // 2) <= k
    j = k - i * (i - 1) // 2
    return i, j


@lru_cache(maxsize=64)
def _small_pairs(n: int, undirected: bool) -> tuple[np.ndarray, np.ndarray]:
    # canonical (row, col) for every background slot, in slot order
    if undirected:
        c, r = np.tril_indices(n, -1)
    else:
        r, c = np.nonzero(~np.eye(n, dtype=bool))
    r, c = r.astype(np.int64), c.astype(np.int64)
    r.setflags(write=False)
    c.setflags(write=False)
    return r, c


def _sample_background(spec: GraphSpec, rng) -> tuple[np.ndarray, np.ndarray]:
    """Off-diagonal background pairs present in one draw (canonical orientation)."""
    n, b = spec.n, spec.background
    total = n * (n - 1) // 2 if spec.undirected else n * (n - 1)
    if b == 0.0 or total == 0:
        return np.empty(0, np.int64), np.empty(0, np.int64)
    if total <= SMALL_BACKGROUND:
        # one uniform per slot is cheaper than count-then-place on tiny graphs
        r, c = _small_pairs(n, spec.undirected)
        hit = rng.random(total) < b
        return r[hit], c[hit]
    count = int(rng.binomial(total, b))
    k = np.sort(rng.choice(total, size=count, replace=False)).astype(np.int64)
    if spec.undirected:
        hi, lo = _unrank_lower(k)
        r, c = lo, hi
    else:
        r = k // (n - 1)
        c = k % (n - 1)
        c = c + (c >= r)
    return r, c


def sample_graph(spec: GraphSpec, seed) -> SampledGraph:
    """Draw one realisation: an independent Bernoulli per pair.

    Undirected pairs are drawn once and mirrored.  Pairs covered only by the
    background are drawn by sampling the number of present pairs and then
    their positions, so dense sparse-parameter models stay cheap.  Self-loops
    never affect reachability or components and are not realised.
    """
    rng = as_rng(seed)
    hit = rng.random(len(spec.probs)) < spec.probs
    r, c = spec.rows[hit], spec.cols[hit]
    if spec.background > 0.0:
        br, bc = _sample_background(spec, rng)
        if len(spec.rows):
            # explicit entries replace the background on their pair
            explicit = spec.rows * spec.n + spec.cols
            keep = ~np.isin(br * spec.n + bc, explicit)
            br, bc = br[keep], bc[keep]
        r, c = np.concatenate([r, br]), np.concatenate([c, bc])
    off = r != c
    return SampledGraph.from_arcs(spec.n, r[off], c[off], undirected=spec.undirected)


# -- reachability and components -----------------------------------------

def _check_nodes(n, nodes) -> np.ndarray:
    nodes = np.asarray(list(nodes) if not isinstance(nodes, np.ndarray) else nodes, dtype=np.int64)
    if len(nodes) > 1:
        nodes = np.unique(nodes)
    if len(nodes) and (nodes[0] < 0 or nodes[-1] >= n):
        raise IndexError(f"influencer outside [0, {n})")
    return nodes


def reachable_mask(g: SampledGraph, sources) -> np.ndarray:
    src = _check_nodes(g.n, sources)
    seen = np.zeros(g.n, dtype=bool)
    seen[src] = True
    frontier = src
    indptr, indices = g.indptr, g.indices
    while len(frontier):
        if len(frontier) == 1:
            f = int(frontier[0])
            nb = indices[indptr[f]:indptr[f + 1]]
        else:
            # gather all out-neighbours of the frontier in one shot
            starts, lens = indptr[frontier], indptr[frontier + 1] - indptr[frontier]
            total = int(lens.sum())
            offs = np.repeat(starts - np.cumsum(lens) + lens, lens) + np.arange(total)
            nb = indices[offs]
        nb = nb[~seen[nb]]
        seen[nb] = True
        # duplicates only repeat work, drop them when they could pile up
        frontier = np.unique(nb) if len(nb) > 64 else nb
    return seen


def reachable_set(g: SampledGraph, sources) -> np.ndarray:
    """Sorted array of nodes reachable from ``sources`` by a directed path."""
    return np.flatnonzero(reachable_mask(g, sources))


@dataclass(frozen=True)
class ComponentStats:
    sizes: np.ndarray  # nonincreasing

    @property
    def c1(self) -> int:
        return int(self.sizes[0]) if len(self.sizes) else 0

    @property
    def total(self) -> int:
        return int(self.sizes.sum())

    def n_at_least(self, m: int) -> int:
        return int(np.count_nonzero(self.sizes >= m))

    def largest(self, k: int) -> int:
        """Size of the k-th largest component (1-based), 0 if absent."""
        return int(self.sizes[k - 1]) if k <= len(self.sizes) else 0


def components(g: SampledGraph, nodes=None) -> ComponentStats:
    """Connected component sizes of a symmetric realisation.

    ``nodes`` restricts the count to a subset (the induced subgraph must
    already exclude arcs touching other nodes).
    """
    if not g.is_symmetric():
        raise ContractViolation("components() needs a symmetric realisation")
    _, labels = csgraph.connected_components(g.to_csr(), directed=False)
    if nodes is not None:
        labels = labels[nodes]
    sizes = np.bincount(labels)
    sizes = np.sort(sizes[sizes > 0])[::-1]
    return ComponentStats(sizes)


# -- site percolation ----------------------------------------------------

def _edge_array(edges) -> np.ndarray:
    return np.asarray(edges, dtype=np.int64).reshape(-1, 2)


def sample_site_percolation(n: int, edges, node_probs, seed) -> ComponentStats:
    """Keep node i with probability ``node_probs[i]``; components of survivors only."""
    p = np.asarray(node_probs, dtype=float)
    if len(p) != n:
        raise ValueError("need one survival probability per node")
    if np.any(~((p >= 0) & (p < 1))):
        raise InvalidProbabilityError("node survival probabilities must lie in [0, 1)")
    rng = as_rng(seed)
    alive = rng.random(n) < p
    e = _edge_array(edges)
    e = e[alive[e[:, 0]] & alive[e[:, 1]]]
    g = SampledGraph.from_arcs(n, e[:, 0], e[:, 1], undirected=True)
    return components(g, np.flatnonzero(alive))


# -- SIR -----------------------------------------------------------------

def sample_sir_graph(n: int, edges, beta: float, incubation, seed) -> SampledGraph:
    """Static transmission graph: arc i->j iff ``T_ij < D_i``.

    One incubation time per node, one exponential transmission time per arc.
    """
    if not beta > 0:
        raise DomainError(f"beta must be > 0, got {beta!r}")
    rng = as_rng(seed)
    e = _edge_array(edges)
    e = e[e[:, 0] != e[:, 1]]
    src = np.concatenate([e[:, 0], e[:, 1]])
    dst = np.concatenate([e[:, 1], e[:, 0]])
    D = np.asarray(incubation.sample(rng, n), dtype=float)
    T = rng.exponential(1.0 / beta, len(src))
    ok = T < D[src]
    return SampledGraph.from_arcs(n, src[ok], dst[ok])


def sample_sir_final(n: int, edges, beta: float, incubation, I, seed) -> np.ndarray:
    """Final recovered set of an SIR epidemic started from ``I``."""
    return reachable_set(sample_sir_graph(n, edges, beta, incubation, seed), I)


# -- cascades ------------------------------------------------------------

def sample_dtic(spec: GraphSpec, I, seed) -> np.ndarray:
    """Discrete-time cascade: each arc fires once with its probability."""
    return reachable_set(sample_graph(spec, seed), I)


def sample_ctic(n: int, rows, cols, integrals, I, seed) -> np.ndarray:
    """Continuous-time cascade at infinite horizon, arcs given by rate integrals."""
    return sample_dtic(ctic_spec(n, rows, cols, integrals), I, seed)


# -- exact oracles -------------------------------------------------------

def exact_influence(spec: GraphSpec, I) -> float:
    """Expected size of the reachable set, by enumerating every edge pattern."""
    I = _check_nodes(spec.n, I)
    r, c, p = spec.entries()
    off = r != c
    r, c, p = r[off], c[off], p[off]
    m = len(p)
    if m > EXACT_MAX_EDGES:
        raise CapacityError(f"{m} random edges exceed the enumeration cap of {EXACT_MAX_EDGES}")
    if len(I) == spec.n:
        return float(spec.n)
    # only nodes touched by an edge can change state
    touched = np.unique(np.concatenate([r, c, I]))
    local = {int(v): k for k, v in enumerate(touched)}
    lr = np.array([local[int(v)] for v in r], dtype=np.int64)
    lc = np.array([local[int(v)] for v in c], dtype=np.int64)
    li = np.array([local[int(v)] for v in I], dtype=np.int64)
    k = len(touched)
    parts = []
    shifts = np.arange(m, dtype=np.int64)
    for start in range(0, 1 << m, EXACT_CHUNK):
        pats = np.arange(start, min(start + EXACT_CHUNK, 1 << m), dtype=np.int64)
        bits = ((pats[:, None] >> shifts) & 1).astype(bool)
        w = np.prod(np.where(bits, p, 1.0 - p), axis=1)
        reach = np.zeros((len(pats), k), dtype=bool)
        reach[:, li] = True
        changed = True
        while changed:
            changed = False
            for e in range(m):
                a, b = lr[e], lc[e]
                fwd = bits[:, e] & reach[:, a] & ~reach[:, b]
                if fwd.any():
                    reach[fwd, b] = True
                    changed = True
                if spec.undirected:
                    back = bits[:, e] & reach[:, b] & ~reach[:, a]
                    if back.any():
                        reach[back, a] = True
                        changed = True
        parts.append(w * reach.sum(axis=1))
    return math.fsum(np.concatenate(parts).tolist())


def exact_dtic_influence(spec: GraphSpec, I) -> float:
    return exact_influence(spec, I)


def exact_ctic_influence(n, rows, cols, integrals, I) -> float:
    return exact_influence(ctic_spec(n, rows, cols, integrals), I)


def exact_sir_influence(n: int, edges, beta: float, delta: float | None = None, I=(), *, incubation=None,
                        max_leaves: int = SIR_EXACT_MAX_LEAVES) -> float:
    """Exact expected SIR final size on a small graph.

    Nodes are revealed in breadth-first order.  When node ``u`` is revealed
    only its arcs towards still-unreached nodes matter; for a success set
    ``S`` and failure set ``F`` among them::

        P = sum_{T subset S} (-1)^|T| L((|T| + |F|) beta),   L(s) = E[exp(-s D)]

    Arcs out of distinct nodes are independent, so the leaf probabilities
    multiply.  Works for any incubation law exposing ``laplace``.
    """
    if incubation is None:
        if delta is None:
            raise DomainError("give delta or an incubation distribution")
        incubation = Exponential(delta)
    if not beta > 0:
        raise DomainError(f"beta must be > 0, got {beta!r}")
    I = _check_nodes(n, I)
    e = _edge_array(edges)
    if len(e) and (e.min() < 0 or e.max() >= n):
        raise IndexError("edge endpoint outside [0, n)")
    nbrs = [set() for _ in range(n)]
    for a, b in e.tolist():
        if a != b:
            nbrs[a].add(b)
            nbrs[b].add(a)
    nbrs = [sorted(s) for s in nbrs]
    if max((len(s) for s in nbrs), default=0) > 20:
        raise CapacityError("out-degree too large for exact SIR enumeration")

    L_cache = {}

    def L(k):
        if k not in L_cache:
            L_cache[k] = incubation.laplace(k * beta)
        return L_cache[k]

    def pattern_prob(ns, nf):
        return math.fsum((-1) ** t * math.comb(ns, t) * L(t + nf) for t in range(ns + 1))

    leaves = 0
    acc = []

    def walk(reached, queue, prob):
        nonlocal leaves
        if not queue:
            leaves += 1
            if leaves > max_leaves:
                raise CapacityError(f"more than {max_leaves} outcomes to enumerate")
            acc.append(prob * len(reached))
            return
        u, rest = queue[0], queue[1:]
        targets = [v for v in nbrs[u] if v not in reached]
        k = len(targets)
        for mask in range(1 << k):
            S = [targets[i] for i in range(k) if mask >> i & 1]
            q = pattern_prob(len(S), k - len(S))
            if q == 0.0:
                continue
            walk(reached | set(S), rest + tuple(S), prob * q)

    start = frozenset(I.tolist())
    walk(start, tuple(sorted(start)), 1.0)
    return math.fsum(acc)


def exact_scenario_influence(spec: GraphSpec, scenario: str, param) -> float:
    """Exact influence averaged over a random influencer set.

    ``scenario`` is ``"fixed"`` (``param`` a node list), ``"uniform"``
    (``param = n0``, uniform subset) or ``"bernoulli"`` (``param = q``).
    For every edge pattern the transitive closure gives, per node v, the
    number of nodes that reach it; v is active unless the random set misses
    all of them.
    """
    n = spec.n
    if n > 16:
        raise CapacityError("scenario enumeration needs n <= 16")
    r, c, p = spec.entries()
    off = r != c
    r, c, p = r[off], c[off], p[off]
    m = len(p)
    if m > EXACT_MAX_EDGES:
        raise CapacityError(f"{m} random edges exceed the enumeration cap of {EXACT_MAX_EDGES}")
    if scenario == "fixed":
        src = _check_nodes(n, param)
    elif scenario == "uniform":
        n0 = int(param)
        if not 0 <= n0 <= n:
            raise DomainError("need 0 <= n0 <= n")
        miss = np.array([math.comb(n - k, n0) / math.comb(n, n0) for k in range(n + 1)])
    elif scenario == "bernoulli":
        q = float(param)
        if not 0 <= q <= 1:
            raise DomainError("need 0 <= q <= 1")
        miss = (1.0 - q) ** np.arange(n + 1)
    else:
        raise DomainError(f"unknown scenario {scenario!r}")
    eye = np.eye(n, dtype=bool)
    shifts = np.arange(m, dtype=np.int64)
    steps = max(1, math.ceil(math.log2(max(n, 2))))
    parts = []
    for start in range(0, 1 << m, EXACT_CHUNK):
        pats = np.arange(start, min(start + EXACT_CHUNK, 1 << m), dtype=np.int64)
        bits = ((pats[:, None] >> shifts) & 1).astype(bool)
        w = np.prod(np.where(bits, p, 1.0 - p), axis=1)
        R = np.broadcast_to(eye, (len(pats), n, n)).copy()
        R[:, r, c] |= bits
        if spec.undirected:
            R[:, c, r] |= bits
        for _ in range(steps):
            R = np.matmul(R.astype(np.int32), R.astype(np.int32)) > 0
        if scenario == "fixed":
            size = R[:, src, :].any(axis=1).sum(axis=1) if len(src) else np.zeros(len(pats))
        else:
            anc = R.sum(axis=1)
            size = (1.0 - miss[anc]).sum(axis=1)
        parts.append(w * size)
    return math.fsum(np.concatenate(parts).tolist())
