"""Random-graph specifications: edge-presence probabilities over n labelled nodes.

A :class:`GraphSpec` stores the expected adjacency matrix ``P`` of a random
graph with independent edges.  Entries are kept sparse, as parallel arrays of
``(row, col, prob)``.  Dense homogeneous models (Erdős-Rényi, the background of
a random star) would need ``O(n^2)`` storage, so a spec may also carry a
``background`` probability that applies to every off-diagonal pair without an
explicit entry.  Explicit entries override the background.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    DegenerateWeightsError,
    EdgeListParseError,
    GraphSizeError,
    InvalidProbabilityError,
    ParameterOrderError,
)

MAX_NODES = 10_000_000
# Materialising the background of a dense spec beyond this many pairs is refused.
MAX_MATERIALIZED_PAIRS = 50_000_000


def _check_prob(p: float, what: str = "probability") -> None:
    if not (0.0 <= p < 1.0) or math.isnan(p):
        raise InvalidProbabilityError(f"{what} must lie in [0, 1), got {p!r}")


def _readonly(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class GraphSpec:
    """Immutable random-graph model with independent edge indicators.

    For undirected specs only pairs with ``row <= col`` are stored and
    ``prob(i, j) == prob(j, i)``.  Use :func:`make_spec` rather than the
    constructor so that entries are canonicalised and validated.
    """

    n: int
    rows: np.ndarray
    cols: np.ndarray
    probs: np.ndarray
    undirected: bool = True
    background: float = 0.0
    label: str = ""
    background_loops: bool = False

    def __post_init__(self):
        if self.n < 1:
            raise GraphSizeError(f"node count must be >= 1, got {self.n}")
        _check_prob(self.background, "background probability")
        if len(self.probs):
            bad = ~((self.probs >= 0.0) & (self.probs < 1.0))
            if bad.any():
                k = int(np.flatnonzero(bad)[0])
                raise InvalidProbabilityError(
                    f"p[{self.rows[k]},{self.cols[k]}] = {self.probs[k]!r} is outside [0, 1)"
                )
            if self.rows.min() < 0 or max(self.rows.max(), self.cols.max()) >= self.n or self.cols.min() < 0:
                raise GraphSizeError("edge endpoint outside [0, n)")

    @cached_property
    def _index(self) -> dict:
        return {(i, j): k for k, (i, j) in enumerate(zip(self.rows.tolist(), self.cols.tolist()))}

    # -- queries ---------------------------------------------------------
    def prob(self, i: int, j: int) -> float:
        if not (0 <= i < self.n and 0 <= j < self.n):
            raise IndexError(f"node pair ({i}, {j}) outside [0, {self.n})")
        key = (min(i, j), max(i, j)) if self.undirected else (i, j)
        k = self._index.get(key)
        if k is not None:
            return float(self.probs[k])
        return 0.0 if i == j and not self.background_loops else self.background

    @property
    def num_pairs(self) -> int:
        """Number of slots the background covers in canonical storage."""
        off = self.n * (self.n - 1) // 2 if self.undirected else self.n * (self.n - 1)
        return off + self.n if self.background_loops else off

    @property
    def num_entries(self) -> int:
        """Number of stored entries with nonzero probability."""
        explicit = int(np.count_nonzero(self.probs))
        if self.background == 0.0:
            return explicit
        covered = len(self.rows) if self.background_loops else int(np.count_nonzero(self.rows != self.cols))
        return explicit + self.num_pairs - covered

    @cached_property
    def max_prob(self) -> float:
        """``max_ij P_ij`` (the sup-norm used in the Hazard sandwich)."""
        m = float(self.probs.max()) if len(self.probs) else 0.0
        if self.background > 0.0 and self.num_pairs > len(self.rows):
            m = max(m, self.background)
        return m

    def entries(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """All nonzero entries in canonical order, background included."""
        if self.background == 0.0:
            keep = self.probs > 0
            return self.rows[keep], self.cols[keep], self.probs[keep]
        if self.num_pairs > MAX_MATERIALIZED_PAIRS:
            raise GraphSizeError(
                f"refusing to materialise {self.num_pairs} background pairs"
            )
        k = 0 if self.background_loops else 1
        if self.undirected:
            r, c = np.triu_indices(self.n, k=k)
        else:
            r, c = np.nonzero(~np.eye(self.n, dtype=bool)) if k else np.indices((self.n, self.n)).reshape(2, -1)
        r, c = r.astype(np.int64), c.astype(np.int64)
        p = np.full(len(r), self.background)
        covered = np.ones(len(self.rows), bool) if self.background_loops else self.rows != self.cols
        pos = np.searchsorted(r * self.n + c, self.rows * self.n + self.cols)
        p[pos[covered]] = self.probs[covered]
        rows = np.concatenate([r, self.rows[~covered]])
        cols = np.concatenate([c, self.cols[~covered]])
        probs = np.concatenate([p, self.probs[~covered]])
        order = np.lexsort((cols, rows))
        rows, cols, probs = rows[order], cols[order], probs[order]
        keep = probs > 0
        return rows[keep], cols[keep], probs[keep]

    def directed_entries(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Explicit entries as directed pairs, mirrored for undirected specs.

        The background is *not* included.
        """
        r, c, p = self.rows, self.cols, self.probs
        if not self.undirected:
            return r, c, p
        off = r != c
        return (
            np.concatenate([r, c[off]]),
            np.concatenate([c, r[off]]),
            np.concatenate([p, p[off]]),
        )

    def __eq__(self, other):
        if not isinstance(other, GraphSpec):
            return NotImplemented
        if (self.n, self.undirected, self.label) != (other.n, other.undirected, other.label):
            return False
        a, b = self.entries(), other.entries()
        return all(np.array_equal(x, y) for x, y in zip(a, b))

    __hash__ = None

    def __repr__(self):
        return (
            f"GraphSpec(n={self.n}, entries={self.num_entries}, "
            f"undirected={self.undirected}, label={self.label!r})"
        )


def make_spec(
    n: int,
    rows: Iterable[int],
    cols: Iterable[int],
    probs: Iterable[float],
    *,
    undirected: bool = True,
    background: float = 0.0,
    background_loops: bool = False,
    label: str = "",
    allow_self_loops: bool = False,
    drop_zeros: bool = True,
) -> GraphSpec:
    """Validate and canonicalise raw entries into a :class:`GraphSpec`.

    Duplicate pairs (including ``(i, j)``/``(j, i)`` for undirected specs)
    raise ``ValueError``.
    """
    if n < 1 or n > MAX_NODES:
        raise GraphSizeError(f"node count {n} outside [1, {MAX_NODES}]")
    rows = np.asarray(list(rows) if not isinstance(rows, np.ndarray) else rows, dtype=np.int64)
    cols = np.asarray(list(cols) if not isinstance(cols, np.ndarray) else cols, dtype=np.int64)
    probs = np.asarray(list(probs) if not isinstance(probs, np.ndarray) else probs, dtype=np.float64)
    if not (rows.shape == cols.shape == probs.shape):
        raise ValueError("rows, cols and probs must have equal length")
    if len(rows) and (rows.min() < 0 or cols.min() < 0 or max(rows.max(), cols.max()) >= n):
        raise GraphSizeError(f"edge endpoint outside [0, {n})")
    if not allow_self_loops and np.any(rows == cols):
        raise ValueError("self-loops are not allowed for this model")
    if undirected:
        rows, cols = np.minimum(rows, cols), np.maximum(rows, cols)
    order = np.lexsort((cols, rows))
    rows, cols, probs = rows[order], cols[order], probs[order]
    if len(rows) > 1:
        dup = (rows[1:] == rows[:-1]) & (cols[1:] == cols[:-1])
        if dup.any():
            k = int(np.flatnonzero(dup)[0])
            raise ValueError(f"duplicate pair ({rows[k]}, {cols[k]})")
    if drop_zeros and background == 0.0:
        keep = probs != 0.0
        rows, cols, probs = rows[keep], cols[keep], probs[keep]
    return GraphSpec(
        n=int(n),
        rows=_readonly(rows),
        cols=_readonly(cols),
        probs=_readonly(probs),
        undirected=undirected,
        background=float(background),
        label=label,
        background_loops=bool(background_loops and background > 0),
    )


# -- generators ----------------------------------------------------------

def erdos_spec(n: int, c: float) -> GraphSpec:
    """G(n, c/n): every pair ``i <= j`` present independently with ``c/n``.

    Self-loops are included (they never change reachability) so that the
    Hazard radius is exactly ``-n ln(1 - c/n)``.
    """
    if n < 1:
        raise GraphSizeError("n must be >= 1")
    if c < 0:
        raise InvalidProbabilityError(f"c must be nonnegative, got {c}")
    p = c / n
    _check_prob(p, "c/n")
    empty = np.empty(0, dtype=np.int64)
    return make_spec(
        n, empty, empty, np.empty(0), background=p, background_loops=True, label=f"erdos(n={n},c={c!r})"
    )


def norros_reittu_spec(w: Sequence[float]) -> GraphSpec:
    """Poissonian graph process: ``p_ij = 1 - exp(-w_i w_j / sum(w))``, self-loops kept."""
    w = np.asarray(w, dtype=np.float64)
    if w.ndim != 1 or len(w) == 0:
        raise DegenerateWeightsError("weights must be a nonempty vector")
    if np.any(w < 0) or not np.all(np.isfinite(w)):
        raise DegenerateWeightsError("weights must be finite and nonnegative")
    total = w.sum()
    if total <= 0:
        raise DegenerateWeightsError("weights sum to zero")
    nz = np.flatnonzero(w > 0)
    r, c = np.triu_indices(len(nz))
    r, c = nz[r], nz[c]
    p = -np.expm1(-w[r] * w[c] / total)
    if np.any(p >= 1.0):
        raise InvalidProbabilityError("a weight product saturates to probability one")
    return make_spec(len(w), r, c, p, allow_self_loops=True, label="norros_reittu")


def star_spec(n: int, p: float) -> GraphSpec:
    """Star centred on node 0 with edge probability ``p`` on every spoke."""
    if n < 2:
        raise GraphSizeError("a star needs n >= 2")
    _check_prob(p)
    leaves = np.arange(1, n)
    return make_spec(n, np.zeros(n - 1, dtype=np.int64), leaves, np.full(n - 1, p), label=f"star(n={n},p={p!r})")


def grid_spec(d: int, side: int, p: float, max_nodes: int = MAX_NODES) -> GraphSpec:
    """Bond percolation on the d-dimensional periodic lattice of ``side**d`` nodes.

    With ``side == 2`` the two lattice bonds joining a pair of nodes coincide;
    they are merged into one pair of probability ``1 - (1 - p)**2`` so that the
    Hazard radius stays ``-2d ln(1 - p)``.
    """
    if d < 1 or side < 2:
        raise GraphSizeError("need d >= 1 and side >= 2")
    _check_prob(p)
    if d * math.log(side) > math.log(max_nodes):
        raise GraphSizeError(f"side**d = {side}**{d} exceeds the node limit {max_nodes}")
    n = side**d
    idx = np.arange(n, dtype=np.int64)
    rows, cols = [], []
    for k in range(d):
        stride = side**k
        coord = (idx // stride) % side
        nb = idx + np.where(coord == side - 1, -(side - 1) * stride, stride)
        rows.append(idx)
        cols.append(nb)
    rows = np.concatenate(rows)
    cols = np.concatenate(cols)
    if side == 2:
        lo, hi = np.minimum(rows, cols), np.maximum(rows, cols)
        keep = lo == rows
        rows, cols = lo[keep], hi[keep]
        prob = -math.expm1(2 * math.log1p(-p))
    else:
        prob = p
    return make_spec(n, rows, cols, np.full(len(rows), prob), label=f"grid(d={d},side={side},p={p!r})")


def random_star_spec(n: int, a: float, b: float) -> GraphSpec:
    """Star spokes with probability ``a`` over an Erdős-Rényi background ``b``."""
    if n < 2:
        raise GraphSizeError("a random star needs n >= 2")
    _check_prob(a, "a")
    _check_prob(b, "b")
    if not (0.0 <= b < a):
        raise ParameterOrderError(f"need 0 <= b < a, got a={a!r}, b={b!r}")
    leaves = np.arange(1, n)
    return make_spec(
        n,
        np.zeros(n - 1, dtype=np.int64),
        leaves,
        np.full(n - 1, a),
        background=b,
        label=f"random_star(n={n},a={a!r},b={b!r})",
    )


def cycle_edges(n: int) -> np.ndarray:
    """Edge array ``(E, 2)`` of the n-cycle."""
    i = np.arange(n)
    return np.column_stack([i, (i + 1) % n])


def uniform_spec_on_edges(n: int, edges, p: float, *, undirected: bool = True, label: str = "") -> GraphSpec:
    """Homogeneous percolation with probability ``p`` on a given edge list."""
    edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
    return make_spec(n, edges[:, 0], edges[:, 1], np.full(len(edges), float(p)), undirected=undirected, label=label)


def ctic_spec(n: int, rows, cols, integrals, *, label: str = "ctic") -> GraphSpec:
    """Infinite-horizon continuous-time cascade reduced to a directed spec.

    ``integrals[k]`` is the total transmission rate mass of edge k; the edge
    fires with probability ``1 - exp(-integral)``.
    """
    from .errors import DomainError

    lam = np.asarray(integrals, dtype=np.float64)
    if np.any(lam < 0) or not np.all(np.isfinite(lam)):
        raise DomainError("rate integrals must be finite and nonnegative")
    return make_spec(n, rows, cols, -np.expm1(-lam), undirected=False, label=label)


# -- edge-list files -----------------------------------------------------

def to_edge_list(spec: GraphSpec, path) -> None:
    """Write ``spec`` as a UTF-8 edge list with 17-significant-digit probabilities."""
    r, c, p = spec.entries()
    lines = []
    if spec.label:
        lines.append(f"# label: {spec.label}")
    lines.append(f"n {spec.n} {'undirected' if spec.undirected else 'directed'}")
    lines.extend(f"{i} {j} {q:.17g}" for i, j, q in zip(r.tolist(), c.tolist(), p.tolist()))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def from_edge_list(path) -> GraphSpec:
    text = Path(path).read_text(encoding="utf-8")
    return parse_edge_list(text)


def parse_edge_list(text: str) -> GraphSpec:
    n = None
    undirected = True
    label = ""
    rows, cols, probs = [], [], []
    seen: dict[tuple[int, int], int] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        stripped = raw.strip()
        if stripped.startswith("# label:") and n is None:
            label = stripped[len("# label:"):].strip()
            continue
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if n is None:
            if len(parts) != 3 or parts[0] != "n" or parts[2] not in ("directed", "undirected"):
                raise EdgeListParseError("expected header 'n <count> <directed|undirected>'", lineno)
            try:
                n = int(parts[1])
            except ValueError:
                raise EdgeListParseError(f"bad node count {parts[1]!r}", lineno) from None
            if n < 1:
                raise EdgeListParseError("node count must be >= 1", lineno)
            undirected = parts[2] == "undirected"
            continue
        if len(parts) != 3:
            raise EdgeListParseError(f"expected 'i j p', got {line!r}", lineno)
        try:
            i, j, p = int(parts[0]), int(parts[1]), float(parts[2])
        except ValueError:
            raise EdgeListParseError(f"cannot parse {line!r}", lineno) from None
        if not (0 <= i < n and 0 <= j < n):
            raise EdgeListParseError(f"node index outside [0, {n})", lineno)
        if not (0.0 <= p < 1.0):
            raise EdgeListParseError(f"probability {p!r} outside [0, 1)", lineno)
        key = (min(i, j), max(i, j)) if undirected else (i, j)
        if key in seen:
            raise EdgeListParseError(f"duplicate pair {key} (first on line {seen[key]})", lineno)
        seen[key] = lineno
        rows.append(i)
        cols.append(j)
        probs.append(p)
    if n is None:
        raise EdgeListParseError("missing header line")
    return make_spec(n, rows, cols, probs, undirected=undirected, label=label, allow_self_loops=True)
