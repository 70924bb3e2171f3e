"""Decoders for single-layer counter braids.

* :func:`bp_decode` -- min/max message passing on the original graph.
* :func:`bp_decode_equiv` -- the same decoder run on the depth-three
  equivalent graph (one iteration there is two iterations here).
* :func:`peel_decode` -- BP plus the two peeling rules; returns the residual graph.
* :func:`maxwell_decode` -- BP followed by guessing with symbolic linear
  expressions and an exact solve of the final integer system.
* :func:`ml_oracle` -- exhaustive enumeration of all feasible flow vectors.

All messages are integers, so every stopping test is an exact comparison.
"""

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from ._rng import make_rng
from .errors import ParameterError, ResourceError
from .graphs import CbGraph

# stands in for -infinity on messages that must never win a max
NEG_SENTINEL = np.iinfo(np.int64).min // 4


def _counter_values(g, counters):
    vals = g.counters if counters is None else np.asarray(counters, dtype=np.int64)
    if vals.shape != (g.m1,):
        raise ParameterError(f"expected {g.m1} counter values, got shape {vals.shape}")
    return vals


def _segment_sums(values, order, start):
    """Exact integer sums of ``values`` grouped by a CSR layout."""
    cs = np.zeros(len(order) + 1, dtype=np.int64)
    np.cumsum(values[order], out=cs[1:])
    return cs[start[1:]] - cs[start[:-1]]


def _extrinsic(P, op):
    """For each row of P and each column j, reduce ``op`` over the other columns."""
    m, k = P.shape
    if k == 1:
        raise ParameterError("extrinsic reduction needs at least two columns")
    acc = op.accumulate
    pre = acc(P, axis=1)
    suf = acc(P[:, ::-1], axis=1)[:, ::-1]
    out = np.empty_like(P)
    out[:, 0] = suf[:, 1]
    out[:, -1] = pre[:, -2]
    if k > 2:
        out[:, 1:-1] = op(pre[:, :-2], suf[:, 2:])
    return out


# ---------------------------------------------------------------------------
# BP on the original graph
# ---------------------------------------------------------------------------

def bp_iterations(g, counters, f_min, n_iter):
    """Yield ``(ell, psi, mu, estimate)`` for ``ell = 1..n_iter``.

    ``psi`` and ``mu`` are per-edge arrays (edge ``e`` belongs to flow
    ``e // k``); the estimate is the min over incoming ``psi`` on odd
    iterations (an upper bound) and the max on even ones (a lower bound).
    """
    vals = _counter_values(g, counters)
    m0, k = g.m0, g.k
    cval = vals[g.edge_counter]
    order, start = g.counter_edge_order, g.counter_edge_start
    mu = np.full(g.n_edges, f_min, dtype=np.int64)
    for ell in range(1, n_iter + 1):
        S = _segment_sums(mu, order, start)
        psi = np.maximum(cval - (S[g.edge_counter] - mu), f_min)
        P = psi.reshape(m0, k)
        if ell % 2:
            est = P.min(axis=1)
            mu = _extrinsic(P, np.minimum).ravel()
        else:
            est = P.max(axis=1)
            mu = _extrinsic(P, np.maximum).ravel()
        yield ell, psi, mu, est


@dataclass
class BpResult:
    estimates: np.ndarray
    converged: np.ndarray
    iterations: int
    upper: np.ndarray
    lower: np.ndarray
    history: list = field(default=None, repr=False)


def bp_decode(g, counters=None, f_min=0, l_max=1000, keep_history=False):
    """Run BP until it stops or ``l_max`` iterations.

    The decoder stops as soon as every flow has equal upper and lower
    bounds, or when the flow-to-counter messages repeat at lag two (the
    min/max updates are monotone, so nothing can change after that).  A flow
    is converged when its latest odd and even estimates coincide.
    """
    k = g.k
    lower = np.full(g.m0, f_min, dtype=np.int64)  # mu^(0) is a valid lower bound
    upper = None
    prev = [None, None]
    history = [] if keep_history else None
    ell = 0
    est = lower
    for ell, psi, mu, est in bp_iterations(g, counters, f_min, l_max):
        if keep_history:
            history.append(est.copy())
        if ell % 2:
            upper = est
        else:
            lower = est
        if upper is not None and np.array_equal(upper, lower):
            break
        if prev[ell % 2] is not None and np.array_equal(prev[ell % 2], mu):
            break
        prev[ell % 2] = mu
    if upper is None:
        upper = np.full(g.m0, np.iinfo(np.int64).max, dtype=np.int64)
    return BpResult(
        estimates=est.copy(),
        converged=upper == lower,
        iterations=ell,
        upper=upper.copy(),
        lower=lower.copy(),
        history=history,
    )


# ---------------------------------------------------------------------------
# BP on the equivalent graph
# ---------------------------------------------------------------------------

@dataclass
class EquivBpResult:
    estimates: np.ndarray
    converged: np.ndarray
    iterations: int
    history: list = field(default=None, repr=False)


def bp_decode_equiv(eg, counters=None, f_min=0, l_max=500, stop=True, keep_history=False):
    """Flooding BP on the equivalent graph.

    Counter update (per root counter, three steps on its tree):
      1. every depth-2 counter sends ``max(phi - sum of leaf messages, f_min)``
         up to its depth-1 flow;
      2. every depth-1 flow sends the min of those up to the root;
      3. the root sends ``max(phi - sum of the other depth-1 messages, f_min)``
         on each type-1 edge.  Type-2 edges carry the sentinel.
    Flow update: max over incoming messages; on a type-2 edge the type-1
    edge towards the labelling counter is excluded.

    With ``stop=False`` exactly ``l_max`` iterations are run (used to compare
    iteration by iteration with :func:`bp_decode`).
    """
    g = eg.graph
    vals = _counter_values(g, counters)
    m0, k, E = g.m0, g.k, g.n_edges
    root_val = vals[g.edge_counter]  # per type-1 edge
    d2_val = vals[g.edge_counter[eg.d2_e2]]  # per depth-2 node
    n_d2 = len(eg.d2_e2)
    t2_start = np.zeros(n_d2 + 1, dtype=np.int64)
    np.cumsum(np.bincount(eg.t2_d2, minlength=n_d2), out=t2_start[1:])
    t2_order = np.arange(len(eg.t2_d2), dtype=np.int64)  # t2_d2 is already sorted
    t2_leaf = g.edge_flow[eg.t2_e3]
    order, start = g.counter_edge_order, g.counter_edge_start

    out1 = np.full(E, f_min, dtype=np.int64)  # flow -> counter, type-1
    out2 = np.full(len(eg.t2_e3), f_min, dtype=np.int64)  # flow -> counter, type-2
    history = [] if keep_history else None
    prev_lower = prev_out = None
    lower = upper = None
    it = 0
    for it in range(1, l_max + 1):
        # step 1: depth-2 counters
        leaf_sum = _segment_sums(out2, t2_order, t2_start)
        step1 = np.maximum(d2_val - leaf_sum, f_min)
        # step 2: depth-1 flows (min over the k-1 branches below them)
        step2 = step1.reshape(E, k - 1).min(axis=1)
        # step 3: root counter
        S = _segment_sums(step2, order, start)
        to_flow1 = np.maximum(root_val - (S[g.edge_counter] - step2), f_min)
        to_flow2 = np.full(len(eg.t2_e3), NEG_SENTINEL, dtype=np.int64)

        # flow update
        P = to_flow1.reshape(m0, k)
        t2_in = np.full(m0, NEG_SENTINEL, dtype=np.int64)
        np.maximum.at(t2_in, t2_leaf, to_flow2)
        new_out1 = np.maximum(_extrinsic(P, np.maximum), t2_in[:, None]).ravel()
        new_out2 = new_out1[eg.t2_e3]
        lower = np.maximum(P.max(axis=1), t2_in)
        upper = step1.reshape(m0, k * (k - 1)).min(axis=1)
        out1, out2 = new_out1, new_out2
        if keep_history:
            history.append(lower.copy())
        if stop:
            if np.array_equal(upper, lower):
                break
            if prev_out is not None and np.array_equal(prev_out, out1) and np.array_equal(prev_lower, lower):
                break
        prev_out, prev_lower = out1, lower
    return EquivBpResult(estimates=lower.copy(), converged=upper == lower, iterations=it, history=history)


# ---------------------------------------------------------------------------
# Peeling decoder
# ---------------------------------------------------------------------------

@dataclass
class PeelResult:
    residual: CbGraph
    residual_flows: np.ndarray  # original ids of the flows left in the residual graph
    residual_counters: np.ndarray  # original ids of the counters left in the residual graph
    peeled: np.ndarray  # boolean mask over original flows
    estimates: np.ndarray  # value for peeled flows, -1 elsewhere
    rounds: int


def peel_decode(g, counters=None, f_min=0, l_max=1000):
    """BP with the two peeling rules.

    Rule 1: a counter with exactly one remaining edge determines its flow;
    the flow is removed and its value subtracted from its other counters.
    Rule 2: an odd-iteration counter-to-flow message equal to ``f_min``
    pins the flow at ``f_min``; it is removed and ``f_min`` subtracted from
    all its counters.  The residual graph holds the flows that were never
    peeled and the counters still attached to them, with updated values.
    """
    vals = _counter_values(g, counters).copy()
    m0, k = g.m0, g.k
    ec = g.edge_counter
    alive = np.ones(m0, dtype=bool)
    est = np.full(m0, -1, dtype=np.int64)
    mu = np.full(g.n_edges, f_min, dtype=np.int64)

    def remove(flows, values):
        flows = np.asarray(flows, dtype=np.int64)
        est[flows] = values
        alive[flows] = False
        edges = (flows[:, None] * k + np.arange(k)).ravel()
        np.subtract.at(vals, ec[edges], np.repeat(values, k))

    def rule1():
        fired = False
        while True:
            edge_alive = np.repeat(alive, k)
            deg = np.bincount(ec[edge_alive], minlength=g.m1)
            single = deg == 1
            cand = np.flatnonzero(edge_alive & single[ec])
            if cand.size == 0:
                return fired
            flows, first = np.unique(cand // k, return_index=True)
            remove(flows, vals[ec[cand[first]]])
            fired = True

    def counter_messages(mu):
        edge_alive = np.repeat(alive, k)
        m = np.where(edge_alive, mu, 0)
        S = np.zeros(g.m1, dtype=np.int64)
        np.add.at(S, ec, m)
        return np.maximum(vals[ec] - (S[ec] - m), f_min), edge_alive

    rounds = 0
    prev_even = None
    while rounds < l_max:
        rounds += 1
        fired = rule1()
        # odd half-iteration
        psi, edge_alive = counter_messages(mu)
        hit = (psi == f_min) & edge_alive
        pinned = np.unique(np.flatnonzero(hit) // k)
        if pinned.size:
            remove(pinned, np.full(pinned.size, f_min, dtype=np.int64))
            fired = True
        mu = _extrinsic(psi.reshape(m0, k), np.minimum).ravel()
        fired = rule1() or fired
        # even half-iteration
        psi, edge_alive = counter_messages(mu)
        mu = _extrinsic(psi.reshape(m0, k), np.maximum).ravel()
        mu_alive = np.where(np.repeat(alive, k), mu, 0)
        if not fired and prev_even is not None and np.array_equal(prev_even, mu_alive):
            break
        prev_even = mu_alive

    keep = np.flatnonzero(alive)
    used = np.zeros(g.m1, dtype=bool)
    used[g.flow_adj[keep].ravel()] = True
    cid = np.flatnonzero(used)
    remap = np.cumsum(used) - 1
    residual = CbGraph(remap[g.flow_adj[keep]].reshape(len(keep), k), len(cid), vals[cid])
    return PeelResult(residual=residual, residual_flows=keep, residual_counters=cid, peeled=~alive,
                      estimates=est, rounds=rounds)


# ---------------------------------------------------------------------------
# Maxwell decoder
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GuessExpr:
    """``value = K - sum_j terms[j] * phi(f_j)`` over guessed flows ``f_j``."""

    terms: dict
    K: int

    @classmethod
    def constant(cls, K):
        return cls({}, int(K))

    @classmethod
    def guess(cls, f):
        return cls({int(f): -1}, 0)

    @property
    def is_constant(self):
        return not self.terms

    def evaluate(self, assignment):
        return self.K - sum(b * assignment[f] for f, b in self.terms.items())


def counter_output(phi_c, incoming):
    """Outgoing expression of a counter given the expressions of its other edges.

    The flow lists are merged, coefficients summed and negated (zero
    coefficients dropped), and ``K = phi(c) - sum of incoming K``.
    """
    coef = {}
    K = int(phi_c)
    for ex in incoming:
        K -= ex.K
        for f, b in ex.terms.items():
            coef[f] = coef.get(f, 0) + b
    return GuessExpr({f: -b for f, b in sorted(coef.items()) if b != 0}, K)


@dataclass
class MaxwellResult:
    estimates: np.ndarray  # resolved values (-1 where not determined)
    known: np.ndarray  # flows resolved without guessing
    guessed: list  # flows guessed, in order
    expressions: list  # per-flow GuessExpr
    system: list  # equations (coeffs over guessed flows, rhs): sum coeff*phi = rhs
    status: str  # 'unique' | 'multiple' | 'inconsistent'
    solutions: list = field(repr=False, default_factory=list)
    flow_system: list = field(repr=False, default_factory=list)


def maxwell_decode(g, counters=None, f_min=0, seed=0, l_max=1000, cap=10 ** 6, max_solutions=2):
    """BP, then guess unknown flows one at a time and solve the final system.

    After BP stops, converged flows are known constants.  Then, repeatedly:
    every counter with exactly one edge to a still-unknown flow resolves that
    flow as ``phi(c)`` minus the expressions on its other edges; when no
    counter can fire, a uniformly random unknown flow is guessed.  At the
    end every counter equation, rewritten over the guessed flows, is
    collected and solved exactly: rational elimination reduces it to free
    variables, which are enumerated over their feasible integer ranges.
    The enumeration stops after ``max_solutions`` solutions (two are enough
    to tell 'unique' from 'multiple'; pass ``None`` to list them all).
    """
    vals = _counter_values(g, counters)
    rng = make_rng(seed)
    bp = bp_decode(g, vals, f_min, l_max)
    m0, k = g.m0, g.k
    expr = [None] * m0
    for f in np.flatnonzero(bp.converged):
        expr[f] = GuessExpr.constant(bp.estimates[f])
    known = bp.converged.copy()
    guessed = []

    counter_flows = [g.edge_flow[g.counter_edges(c)].tolist() for c in range(g.m1)]
    flow_counters = g.flow_adj.tolist()
    open_edges = np.array([sum(expr[f] is None for f in fl) for fl in counter_flows], dtype=np.int64)

    def resolve(f, ex):
        expr[f] = ex
        for c in flow_counters[f]:
            open_edges[c] -= 1
            if open_edges[c] == 1:
                queue.append(c)

    def propagate():
        while queue:
            c = queue.pop()
            if open_edges[c] != 1:
                continue
            fl = counter_flows[c]
            target = next(f for f in fl if expr[f] is None)
            ex = counter_output(vals[c], [expr[f] for f in fl if expr[f] is not None])
            if ex.is_constant:
                known[target] = True
            resolve(target, ex)

    queue = [c for c in range(g.m1) if open_edges[c] == 1]
    propagate()
    while True:
        unknown = [f for f in range(m0) if expr[f] is None]
        if not unknown:
            break
        f = unknown[int(rng.integers(len(unknown)))]
        guessed.append(f)
        resolve(f, GuessExpr.guess(f))
        propagate()

    system = []
    inconsistent = False
    for c in range(g.m1):
        fl = counter_flows[c]
        if not fl:
            if vals[c] != 0:
                inconsistent = True
            continue
        # sum of the edge expressions equals phi(c); counter_output(0, .) negates
        # both the summed coefficients and the summed constants
        total = counter_output(0, [expr[f] for f in fl])
        coeffs = dict(total.terms)
        rhs = vals[c] + total.K
        if not coeffs:
            if rhs != 0:
                inconsistent = True
            continue
        system.append((coeffs, int(rhs)))

    solutions = []
    if not inconsistent:
        solutions = _solve_guess_system(g, vals, f_min, expr, guessed, system, cap, max_solutions)
    status = "inconsistent" if not solutions else ("unique" if len(solutions) == 1 else "multiple")
    estimates = np.full(m0, -1, dtype=np.int64)
    for f in range(m0):
        if expr[f].is_constant:
            estimates[f] = expr[f].K
    if status == "unique":
        estimates = np.array(solutions[0], dtype=np.int64)
    flow_system = []
    for c in range(g.m1):
        fl = counter_flows[c]
        coeffs = {}
        rhs = int(vals[c])
        for f in fl:
            if known[f]:
                rhs -= expr[f].K
            else:
                coeffs[f] = coeffs.get(f, 0) + 1
        if coeffs:
            flow_system.append((coeffs, rhs))
    return MaxwellResult(estimates, known, guessed, expr, system, status, solutions, flow_system)


def _flow_upper_bounds(g, vals, f_min):
    ub = np.full(g.m0, np.iinfo(np.int64).max, dtype=np.int64)
    for c in range(g.m1):
        fl = g.edge_flow[g.counter_edges(c)]
        if fl.size == 0:
            continue
        flows, mult = np.unique(fl, return_counts=True)
        room = vals[c] - f_min * (fl.size - mult)
        ub[flows] = np.minimum(ub[flows], np.floor_divide(room, mult))
    return ub


def _solve_guess_system(g, vals, f_min, expr, guessed, system, cap, max_solutions=None):
    """All integer solutions of the guessed-variable system.

    Returns the list of full flow vectors (as tuples) that satisfy every
    counter equation with all flows >= f_min.
    """
    var_index = {f: i for i, f in enumerate(guessed)}
    n = len(guessed)
    # rational row reduction of  A phi = b
    rows = []
    for coeffs, rhs in system:
        row = [Fraction(0)] * (n + 1)
        for f, b in coeffs.items():
            row[var_index[f]] = Fraction(b)
        row[n] = Fraction(rhs)
        rows.append(row)
    pivots = []
    r = 0
    for col in range(n):
        piv = next((i for i in range(r, len(rows)) if rows[i][col] != 0), None)
        if piv is None:
            continue
        rows[r], rows[piv] = rows[piv], rows[r]
        p = rows[r][col]
        rows[r] = [v / p for v in rows[r]]
        for i in range(len(rows)):
            if i != r and rows[i][col] != 0:
                fac = rows[i][col]
                rows[i] = [a - fac * b for a, b in zip(rows[i], rows[r])]
        pivots.append(col)
        r += 1
    for i in range(r, len(rows)):
        if rows[i][n] != 0:
            return []
    free = [c for c in range(n) if c not in pivots]
    nf = len(free)
    # every guessed variable as an affine map of the free ones: (const, [coef per free])
    affine = [None] * n
    for j, c in enumerate(free):
        affine[c] = (Fraction(0), [Fraction(int(i == j)) for i in range(nf)])
    for i, col in enumerate(pivots):
        affine[col] = (rows[i][n], [-rows[i][c] for c in free])
    # every flow value as an affine map of the free variables
    flow_aff = []
    for ex in expr:
        c0 = Fraction(ex.K)
        co = [Fraction(0)] * nf
        for f, b in ex.terms.items():
            a0, a = affine[var_index[f]]
            c0 -= b * a0
            co = [x - b * y for x, y in zip(co, a)]
        flow_aff.append((c0, co))

    # flows not depending on any free variable are fixed by the elimination
    fixed = {}
    active = []
    for i, (c0, co) in enumerate(flow_aff):
        if any(co):
            active.append(i)
        elif c0.denominator != 1 or c0 < f_min:
            return []
        else:
            fixed[i] = int(c0)
    act_aff = [flow_aff[i] for i in active]

    ub = _flow_upper_bounds(g, vals, f_min)
    lo = [f_min] * nf
    hi = [int(ub[guessed[c]]) for c in free]
    if any(h < l for l, h in zip(lo, hi)):
        return []
    # suffix sums of the best achievable contribution of unassigned variables
    best_tail = []
    for c0, co in act_aff:
        tail = [Fraction(0)] * (nf + 1)
        for j in range(nf - 1, -1, -1):
            tail[j] = tail[j + 1] + max(co[j] * lo[j], co[j] * hi[j])
        best_tail.append(tail)
    # flows touched by each free variable
    touch = [[(i, co[j]) for i, (_, co) in enumerate(act_aff) if co[j] != 0] for j in range(nf)]

    solutions = []
    partial = [c0 for c0, _ in act_aff]
    visited = [0]

    def dfs(j):
        if max_solutions is not None and len(solutions) >= max_solutions:
            return
        visited[0] += 1
        if visited[0] > cap:
            raise ResourceError(f"Maxwell solve exceeded {cap} search nodes")
        for p, tail in zip(partial, best_tail):
            if p + tail[j] < f_min:
                return
        if j == nf:
            if any(p.denominator != 1 for p in partial):
                return
            full = [0] * len(flow_aff)
            for i, v in fixed.items():
                full[i] = v
            for i, p in zip(active, partial):
                full[i] = int(p)
            full = tuple(full)
            if _satisfies(g, vals, full):
                solutions.append(full)
            return
        for v in range(lo[j], hi[j] + 1):
            for i, c in touch[j]:
                partial[i] += c * v
            dfs(j + 1)
            for i, c in touch[j]:
                partial[i] -= c * v

    dfs(0)
    return solutions


def _satisfies(g, vals, flows):
    s = np.zeros(g.m1, dtype=np.int64)
    np.add.at(s, g.edge_counter, np.repeat(np.asarray(flows, dtype=np.int64), g.k))
    return bool(np.array_equal(s, vals))


# ---------------------------------------------------------------------------
# Exhaustive maximum-likelihood oracle
# ---------------------------------------------------------------------------

@dataclass
class MlResult:
    solutions: list
    best_total: int = None
    best: list = field(default_factory=list)

    @property
    def unique(self):
        return len(self.solutions) == 1


def ml_oracle(g, counters=None, f_min=0, size_cap=10 ** 6, max_solutions=None):
    """Every integer flow vector ``>= f_min`` consistent with the counters.

    Depth-first search over flows in index order; a branch is cut as soon as
    some counter cannot be completed.  The integer-program objective
    (maximise the total flow) is reported through ``best_total``/``best``.
    ``max_solutions`` stops the search early (the objective then refers to
    the solutions found).
    """
    vals = _counter_values(g, counters)
    m0 = g.m0
    res = vals.astype(np.int64).tolist()
    remaining = g.counter_degree.astype(np.int64).tolist()
    # per flow: list of (counter, multiplicity)
    per_flow = []
    for f in range(m0):
        cs, mult = np.unique(g.flow_adj[f], return_counts=True)
        per_flow.append(list(zip(cs.tolist(), mult.tolist())))
    if any(v < 0 for v in res):
        return MlResult([])
    solutions = []
    cur = [0] * m0
    visited = [0]

    def dfs(f):
        if max_solutions is not None and len(solutions) >= max_solutions:
            return
        visited[0] += 1
        if visited[0] > size_cap:
            raise ResourceError(f"ML enumeration exceeded {size_cap} search nodes")
        if f == m0:
            if all(v == 0 for v in res):
                solutions.append(tuple(cur))
            return
        hi = None
        for c, m in per_flow[f]:
            room = (res[c] - f_min * (remaining[c] - m)) // m
            hi = room if hi is None else min(hi, room)
        for v in range(f_min, hi + 1):
            ok = True
            for c, m in per_flow[f]:
                res[c] -= v * m
                remaining[c] -= m
                if remaining[c] == 0 and res[c] != 0:
                    ok = False
            if ok:
                cur[f] = v
                dfs(f + 1)
            for c, m in per_flow[f]:
                res[c] += v * m
                remaining[c] += m

    dfs(0)
    if not solutions:
        return MlResult([])
    totals = [sum(s) for s in solutions]
    best_total = max(totals)
    best = [s for s, t in zip(solutions, totals) if t == best_total]
    return MlResult(solutions, best_total, best)


# ---------------------------------------------------------------------------
# Multilayer decoding
# ---------------------------------------------------------------------------

def decode_layers(layers, graphs, layer_counters, f_min, l_max=1000):
    """Decode a multilayer braid from the last layer down to the first.

    Layer ``l > 1`` flows are overflow counts (they can be zero, so they are
    decoded with a minimum size of 0).  After decoding layer ``l`` the
    counters of layer ``l-1`` are restored as ``overflow * 2**d + residual``
    with ``d`` the depth of the layer ``l-1`` counters.  Returns the first
    layer's BpResult.
    """
    from .codec import restore_counters

    L = layers.L
    restored = np.asarray(layer_counters[L - 1], dtype=np.int64)
    result = None
    for l in range(L, 0, -1):
        g = graphs[l - 1]
        fm = f_min if l == 1 else 0
        result = bp_decode(g, restored, fm, l_max)
        if l > 1:
            restored = restore_counters(layer_counters[l - 2], result.estimates, layers.d[l - 2])
    return result
