"""Counter braid graph ensembles.

A single-layer counter braid is a bipartite graph between ``m0`` flow nodes
and ``m1`` counter nodes.  Every flow has exactly ``k`` edges (left-regular);
the counter degrees are approximately Poisson(gamma) with
``gamma = m0 * k / m1``.

Graphs are stored edge-wise: edge ``e`` belongs to flow ``e // k`` and lands
on counter ``flow_adj.ravel()[e]``.  Multi-edges (a flow hitting the same
counter twice) are kept; every routine in the package reasons about *edges*,
not about distinct neighbours.

Positions of spatially coupled graphs are 0-based: flows live at positions
``0..N-1`` and counters at ``0..M-1`` with ``M = N + w - 1``.
"""

import json
from dataclasses import dataclass

import numpy as np

from ._rng import make_rng
from .errors import ParameterError


@dataclass(frozen=True)
class EnsembleParams:
    """Uncoupled ensemble: flow degree ``k``, ``m0`` flows, ``m1`` counters."""

    k: int
    gamma: float
    m0: int
    m1: int

    def __post_init__(self):
        if int(self.k) != self.k or self.k < 2:
            raise ParameterError(f"k must be an integer >= 2, got {self.k}")
        if self.m0 < 1:
            raise ParameterError(f"m0 must be positive, got {self.m0}")
        if self.m1 < 1:
            raise ParameterError(f"m1 must be positive, got {self.m1}")
        if not self.gamma > 0:
            raise ParameterError(f"gamma must be positive, got {self.gamma}")
        # gamma and m1 are tied by m1 = round(m0 k / gamma)
        if abs(self.m0 * self.k / self.gamma - self.m1) > 1.0 + 1e-9:
            raise ParameterError(
                f"gamma={self.gamma} inconsistent with m0={self.m0}, k={self.k}, m1={self.m1}"
            )

    @classmethod
    def from_gamma(cls, k, gamma, m0):
        m1 = max(1, int(round(m0 * k / gamma)))
        return cls(k=int(k), gamma=float(gamma), m0=int(m0), m1=m1)

    @classmethod
    def from_beta(cls, k, beta, m0):
        m1 = max(1, int(round(beta * m0)))
        return cls(k=int(k), gamma=m0 * k / m1, m0=int(m0), m1=m1)

    @property
    def beta(self):
        return self.m1 / self.m0


@dataclass(frozen=True)
class ScParams:
    """Coupling chain: ``N`` flow positions, window ``w``, ``kappa`` flows per position."""

    N: int
    w: int
    kappa: int

    def __post_init__(self):
        if self.N < 1:
            raise ParameterError(f"N must be >= 1, got {self.N}")
        if not 1 <= self.w <= self.N + 1:
            raise ParameterError(f"need 1 <= w <= N+1, got w={self.w}, N={self.N}")
        if self.kappa < 1:
            raise ParameterError(f"kappa must be >= 1, got {self.kappa}")

    @property
    def M(self):
        return self.N + self.w - 1


def _readonly(a):
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


class CbGraph:
    """Immutable bipartite flow/counter graph with counter values.

    Parameters
    ----------
    flow_adj : (m0, k) int array
        ``flow_adj[f, j]`` is the counter hit by the j-th edge of flow ``f``.
    m1 : int
        Number of counters (counters with no edges are allowed).
    counters : (m1,) int array, optional
        Counter values; zeros when omitted.
    flow_pos, counter_pos : int arrays, optional
        Coupling positions (0-based) for coupled graphs.
    w : int, optional
        Coupling window, stored alongside the positions.
    """

    def __init__(self, flow_adj, m1, counters=None, flow_pos=None, counter_pos=None, w=None):
        flow_adj = np.asarray(flow_adj, dtype=np.int64)
        if flow_adj.ndim != 2 or flow_adj.shape[1] < 1:
            raise ParameterError("flow_adj must be a 2-d (m0, k) array")
        m1 = int(m1)
        if flow_adj.size and (flow_adj.min() < 0 or flow_adj.max() >= m1):
            raise ParameterError("flow_adj references a counter outside 0..m1-1")
        self.flow_adj = _readonly(flow_adj)
        self.m1 = m1
        if counters is None:
            counters = np.zeros(m1, dtype=np.int64)
        counters = np.asarray(counters, dtype=np.int64)
        if counters.shape != (m1,):
            raise ParameterError(f"counters must have shape ({m1},), got {counters.shape}")
        self.counters = _readonly(counters)
        self.flow_pos = None if flow_pos is None else _readonly(np.asarray(flow_pos, dtype=np.int64))
        self.counter_pos = None if counter_pos is None else _readonly(np.asarray(counter_pos, dtype=np.int64))
        self.w = None if w is None else int(w)
        if (self.flow_pos is None) != (self.counter_pos is None):
            raise ParameterError("flow_pos and counter_pos must be given together")
        if self.flow_pos is not None:
            if self.flow_pos.shape != (self.m0,) or self.counter_pos.shape != (m1,):
                raise ParameterError("position label arrays have the wrong length")

        # derived edge views
        self.edge_counter = _readonly(self.flow_adj.ravel())
        self.edge_flow = _readonly(np.repeat(np.arange(self.m0, dtype=np.int64), self.k))
        order = np.argsort(self.edge_counter, kind="stable")
        deg = np.bincount(self.edge_counter, minlength=m1).astype(np.int64)
        start = np.zeros(m1 + 1, dtype=np.int64)
        np.cumsum(deg, out=start[1:])
        self.counter_degree = _readonly(deg)
        self.counter_edge_order = _readonly(order)  # edges sorted by counter
        self.counter_edge_start = _readonly(start)  # CSR offsets into that order

    # -- basic shape -----------------------------------------------------
    @property
    def m0(self):
        return self.flow_adj.shape[0]

    @property
    def k(self):
        return self.flow_adj.shape[1]

    @property
    def n_edges(self):
        return self.flow_adj.size

    @property
    def gamma(self):
        return self.n_edges / self.m1

    def counter_edges(self, c):
        """Edge ids incident to counter ``c`` (multi-edges repeated)."""
        s = self.counter_edge_start
        return self.counter_edge_order[s[c]:s[c + 1]]

    @property
    def counter_adj(self):
        """Per-counter flow lists (a flow appears once per edge)."""
        return [self.edge_flow[self.counter_edges(c)] for c in range(self.m1)]

    def with_counters(self, counters):
        """Copy of the graph carrying new counter values."""
        return CbGraph(self.flow_adj, self.m1, counters, self.flow_pos, self.counter_pos, self.w)

    def __eq__(self, other):
        if not isinstance(other, CbGraph):
            return NotImplemented

        def same(a, b):
            return (a is None and b is None) or (
                a is not None and b is not None and np.array_equal(a, b)
            )

        return (
            self.m1 == other.m1
            and np.array_equal(self.flow_adj, other.flow_adj)
            and np.array_equal(self.counters, other.counters)
            and same(self.flow_pos, other.flow_pos)
            and same(self.counter_pos, other.counter_pos)
            and self.w == other.w
        )

    __hash__ = None

    def __repr__(self):
        kind = "coupled" if self.flow_pos is not None else "uncoupled"
        return f"CbGraph({kind}, m0={self.m0}, m1={self.m1}, k={self.k})"

    # -- serialisation ----------------------------------------------------
    def to_dict(self, seed=None):
        d = {
            "m0": int(self.m0),
            "m1": int(self.m1),
            "k": int(self.k),
            "flow_adj": self.flow_adj.tolist(),
            "counters": self.counters.tolist(),
        }
        if self.flow_pos is not None:
            d["positions"] = {
                "flow": self.flow_pos.tolist(),
                "counter": self.counter_pos.tolist(),
                "w": self.w,
            }
        if seed is not None:
            d["seed"] = int(seed)
        return d

    @classmethod
    def from_dict(cls, d):
        flow_adj = np.asarray(d["flow_adj"], dtype=np.int64).reshape(int(d["m0"]), int(d["k"]))
        pos = d.get("positions")
        return cls(
            flow_adj,
            d["m1"],
            d.get("counters"),
            None if pos is None else pos["flow"],
            None if pos is None else pos["counter"],
            None if pos is None else pos.get("w"),
        )


def save_graph(g, path, seed=None):
    with open(path, "w") as fh:
        json.dump(g.to_dict(seed=seed), fh)


def load_graph(path):
    with open(path) as fh:
        return CbGraph.from_dict(json.load(fh))


def sample_graph(params, seed):
    """Sample an uncoupled graph.

    Every flow socket picks its counter uniformly at random, which is the
    same as matching the ``m0 k`` flow sockets to a multinomial counter side
    through a uniform permutation.  The counter degrees are then
    Binomial(m0 k, 1/m1), i.e. Poisson(gamma) in the limit.
    """
    if not isinstance(params, EnsembleParams):
        raise ParameterError("params must be an EnsembleParams")
    rng = make_rng(seed)
    flow_adj = rng.integers(0, params.m1, size=(params.m0, params.k), dtype=np.int64)
    return CbGraph(flow_adj, params.m1)


def counters_per_position(k, gamma, kappa):
    """Counters placed at each coupling position: round(kappa k / gamma)."""
    return max(1, int(round(kappa * k / gamma)))


def sample_coupled_graph(k, gamma, sc, seed):
    """Sample a spatially coupled graph.

    At every flow position ``n`` the ``kappa k`` flow sockets are shuffled by
    a uniform interleaver and cut into ``w`` equal subgroups; subgroup ``i``
    is wired to counter position ``n + i``, where each socket picks one of the
    position's counters uniformly.  Counters at the boundary positions that
    end up with no connected socket are removed, as are their sockets.
    """
    k = int(k)
    if k < 2:
        raise ParameterError(f"k must be >= 2, got {k}")
    if not gamma > 0:
        raise ParameterError(f"gamma must be positive, got {gamma}")
    if not isinstance(sc, ScParams):
        raise ParameterError("sc must be a ScParams")
    N, w, kappa, M = sc.N, sc.w, sc.kappa, sc.M
    if (kappa * k) % w:
        raise ParameterError(f"kappa*k = {kappa * k} must be divisible by w = {w}")
    sub = kappa * k // w
    mc = counters_per_position(k, gamma, kappa)
    rng = make_rng(seed)

    flow_adj = np.empty((N * kappa, k), dtype=np.int64)
    for n in range(N):
        perm = rng.permutation(kappa * k)
        target = np.empty(kappa * k, dtype=np.int64)
        for i in range(w):
            socks = perm[i * sub:(i + 1) * sub]
            target[socks] = (n + i) * mc + rng.integers(0, mc, size=sub)
        flow_adj[n * kappa:(n + 1) * kappa] = target.reshape(kappa, k)

    counter_pos = np.repeat(np.arange(M, dtype=np.int64), mc)
    deg = np.bincount(flow_adj.ravel(), minlength=M * mc)
    boundary = (counter_pos < w - 1) | (counter_pos > N - 1)
    keep = ~(boundary & (deg == 0))
    relabel = np.cumsum(keep) - 1
    flow_adj = relabel[flow_adj]
    flow_pos = np.repeat(np.arange(N, dtype=np.int64), kappa)
    return CbGraph(flow_adj, int(keep.sum()), None, flow_pos, counter_pos[keep], w)


def check_window(g):
    """True when every edge satisfies 0 <= pos(counter) - pos(flow) <= w - 1."""
    if g.flow_pos is None:
        return True
    d = g.counter_pos[g.edge_counter] - g.flow_pos[g.edge_flow]
    return bool(np.all((d >= 0) & (d <= g.w - 1)))


@dataclass(frozen=True)
class EquivGraph:
    """Depth-three equivalent representation of a :class:`CbGraph`.

    Type-1 edges are the original edges: type-1 edge ``e`` joins the root
    counter ``graph.edge_counter[e]`` to the flow ``graph.edge_flow[e]``.

    Each depth-2 node of a tree T(c) is a pair ``(e1, e2)``: the root reaches
    depth-1 flow ``f`` over edge ``e1`` and ``f`` continues to a depth-2
    counter over another of its edges ``e2``.

    Each type-2 edge is a triple ``(e1, e2, e3)``: the depth-2 counter of
    ``e2`` continues over a different edge ``e3`` to the leaf flow.  The
    type-2 edge joins root ``edge_counter[e1]`` to leaf ``edge_flow[e3]`` and
    carries the label ``edge_counter[e3]`` (the leaf's parent counter).
    """

    graph: CbGraph
    d2_e1: np.ndarray
    d2_e2: np.ndarray
    t2_d2: np.ndarray  # index into the depth-2 arrays
    t2_e3: np.ndarray

    @property
    def n_type1(self):
        return self.graph.n_edges

    @property
    def n_type2(self):
        return len(self.t2_e3)

    @property
    def t2_root(self):
        return self.graph.edge_counter[self.d2_e1[self.t2_d2]]

    @property
    def t2_leaf(self):
        return self.graph.edge_flow[self.t2_e3]

    @property
    def t2_label(self):
        return self.graph.edge_counter[self.t2_e3]

    def bundle_sizes(self):
        """Map (root counter, leaf flow) -> number of type-2 edges in the bundle."""
        keys, counts = np.unique(np.stack([self.t2_root, self.t2_leaf], axis=1), axis=0, return_counts=True)
        return {(int(c), int(f)): int(n) for (c, f), n in zip(keys, counts)}


def build_equivalent_graph(g):
    """Enumerate every length-1 and length-3 path from every counter.

    Paths are taken edge-wise exactly as in a breadth-first unrolling of the
    original graph, so repeated nodes (short cycles, multi-edges) produce
    duplicate leaves rather than being merged.
    """
    k = g.k
    E = g.n_edges
    # depth-2 nodes: for each edge e1 and each other edge e2 of the same flow
    e1 = np.repeat(np.arange(E, dtype=np.int64), k - 1)
    f = g.edge_flow[e1]
    j1 = e1 % k
    jj = np.tile(np.arange(k - 1, dtype=np.int64), E)
    j2 = jj + (jj >= j1)  # skip the slot of e1 itself
    e2 = f * k + j2

    # type-2 edges: for each depth-2 node, every edge e3 != e2 of counter(e2)
    c2 = g.edge_counter[e2]
    deg = g.counter_degree[c2]
    d2_idx = np.repeat(np.arange(len(e2), dtype=np.int64), deg)
    base = np.repeat(np.cumsum(deg) - deg, deg)
    offs = np.arange(d2_idx.size, dtype=np.int64) - base
    e3 = g.counter_edge_order[g.counter_edge_start[c2[d2_idx]] + offs]
    keep = e3 != e2[d2_idx]
    return EquivGraph(
        graph=g,
        d2_e1=_readonly(e1),
        d2_e2=_readonly(e2),
        t2_d2=_readonly(d2_idx[keep]),
        t2_e3=_readonly(e3[keep]),
    )


def tree_walk_paths(g, c):
    """Explicit tree walk from counter ``c``: lists of length-1 and length-3 paths.

    Kept deliberately naive (nested loops over adjacency lists) so it can
    serve as an independent check on :func:`build_equivalent_graph`.
    """
    k = g.k
    one, three = [], []
    for e1 in range(g.n_edges):
        if g.edge_counter[e1] != c:
            continue
        f = e1 // k
        one.append((e1,))
        for j in range(k):
            e2 = f * k + j
            if e2 == e1:
                continue
            c2 = g.flow_adj[f, j]
            for e3 in range(g.n_edges):
                if g.edge_counter[e3] == c2 and e3 != e2:
                    three.append((e1, e2, e3))
    return one, three


def type2_count_formula(g):
    """Closed-form number of type-2 edges: sum over edge pairs of (deg - 1)."""
    deg = g.counter_degree
    per_edge_other = (deg[g.flow_adj] - 1)  # (m0, k)
    row = per_edge_other.sum(axis=1, keepdims=True)
    # for each edge e1 sum over the other edges of its flow
    return int((row - per_edge_other).sum())
