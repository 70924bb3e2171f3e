"""Flow-size laws, counter encoding with overflow cascade, and trace ingestion."""

import csv
from dataclasses import dataclass, field

import numpy as np

from ._rng import make_rng
from .errors import ParameterError

# power-law draws are clipped here so they stay representable as int64
SIZE_CAP = 2 ** 62


@dataclass(frozen=True)
class FlowSizeDist:
    """Distribution of flow sizes.

    Either ``power_law(alpha)`` with ``Pr(size > eta) = eta**-alpha`` for
    integers ``eta >= 1`` (so sizes start at 2), or ``explicit(pmf)`` with a
    finite ``{size: probability}`` map.
    """

    kind: str
    alpha: float = None
    pmf: dict = field(default=None, hash=False, compare=False)

    def __post_init__(self):
        if self.kind == "power_law":
            if self.alpha is None or not self.alpha > 0:
                raise ParameterError(f"power-law alpha must be positive, got {self.alpha}")
        elif self.kind == "explicit":
            if not self.pmf:
                raise ParameterError("explicit pmf must be non-empty")
            sizes = [int(s) for s in self.pmf]
            if any(int(s) != s for s in self.pmf) or min(sizes) < 0:
                raise ParameterError("pmf support must be nonnegative integers")
            probs = np.array(list(self.pmf.values()), dtype=float)
            if np.any(probs < 0) or abs(probs.sum() - 1.0) > 1e-12:
                raise ParameterError(f"pmf must be nonnegative and sum to 1, sums to {probs.sum()!r}")
        else:
            raise ParameterError(f"unknown distribution kind {self.kind!r}")

    @classmethod
    def power_law(cls, alpha):
        return cls("power_law", alpha=float(alpha))

    @classmethod
    def explicit(cls, pmf):
        return cls("explicit", pmf={int(s): float(p) for s, p in pmf.items()})

    @property
    def f_min(self):
        if self.kind == "power_law":
            return 2
        return min(s for s, p in self.pmf.items() if p > 0)

    @property
    def epsilon(self):
        return epsilon_of(self)

    def tail(self, eta):
        """Pr(size > eta)."""
        if self.kind == "power_law":
            return 1.0 if eta < 1 else float(eta) ** -self.alpha
        return float(sum(p for s, p in self.pmf.items() if s > eta))

    def prob(self, eta):
        """Pr(size == eta)."""
        if self.kind == "power_law":
            if eta < 2:
                return 0.0
            return float(eta - 1) ** -self.alpha - float(eta) ** -self.alpha
        return float(self.pmf.get(int(eta), 0.0))

    def pmf_table(self, tail_mass=1e-10, max_size=10 ** 7):
        """``{size: prob}`` truncated once the remaining tail is below ``tail_mass``.

        Returns the table and the tail mass actually dropped.
        """
        if self.kind == "explicit":
            return {s: p for s, p in sorted(self.pmf.items()) if p > 0}, 0.0
        top = int(np.ceil(tail_mass ** (-1.0 / self.alpha)))
        top = min(max(top, 2), max_size)
        eta = np.arange(2, top + 1, dtype=float)
        p = (eta - 1) ** -self.alpha - eta ** -self.alpha
        return dict(zip(range(2, top + 1), p.tolist())), self.tail(top)


def epsilon_of(dist):
    """Probability that a flow is strictly larger than ``f_min``."""
    if dist.kind == "power_law":
        return 2.0 ** -dist.alpha
    fm = dist.f_min
    return float(sum(p for s, p in dist.pmf.items() if s > fm))


def sample_flow_sizes(dist, m0, seed):
    """``m0`` i.i.d. flow sizes (exact inverse-CDF sampling for power laws)."""
    rng = make_rng(seed)
    if dist.kind == "power_law":
        u = 1.0 - rng.random(m0)  # (0, 1]
        x = np.floor(u ** (-1.0 / dist.alpha))
        x = np.minimum(x, SIZE_CAP - 1)
        return x.astype(np.int64) + 1
    sizes = np.array(sorted(dist.pmf), dtype=np.int64)
    probs = np.array([dist.pmf[s] for s in sizes], dtype=float)
    return rng.choice(sizes, size=m0, p=probs / probs.sum())


@dataclass(frozen=True)
class Encoding:
    exact: np.ndarray
    mod: np.ndarray
    overflow: np.ndarray
    overflow_count: np.ndarray


def encode(g, flows, d=None):
    """Counter values for flow sizes ``flows`` on graph ``g``.

    ``exact`` holds the true sums; ``mod`` the values of depth-``d`` counters
    (``d=None`` means unbounded counters); ``overflow_count`` how many times
    each counter wrapped.
    """
    flows = np.asarray(flows, dtype=np.int64)
    if flows.shape != (g.m0,):
        raise ParameterError(f"expected {g.m0} flow sizes, got shape {flows.shape}")
    exact = np.zeros(g.m1, dtype=np.int64)
    np.add.at(exact, g.edge_counter, np.repeat(flows, g.k))
    if d is None:
        zeros = np.zeros(g.m1, dtype=np.int64)
        return Encoding(exact, exact.copy(), zeros.astype(bool), zeros)
    base = np.int64(1) << np.int64(d)
    count = exact // base
    return Encoding(exact, exact % base, count > 0, count)


@dataclass(frozen=True)
class LayerConfig:
    """Multilayer counter braid: ``m0`` flows and per-layer (k_l, m_l, d_l).

    Layer ``l`` has ``m[l-1]`` flows (the counters of layer ``l-1``, or the
    real flows when ``l = 1``) mapped by the identity index bijection.
    """

    m0: int
    k: tuple
    m: tuple
    d: tuple

    def __post_init__(self):
        L = len(self.k)
        if L < 1 or len(self.m) != L or len(self.d) != L:
            raise ParameterError("k, m and d must have the same positive length")
        sizes = (self.m0,) + tuple(self.m)
        if any(b >= a for a, b in zip(sizes, sizes[1:])):
            raise ParameterError(f"layer sizes must strictly decrease, got {sizes}")
        if any(int(d) < 1 for d in self.d):
            raise ParameterError("counter depths must be >= 1")
        if any(int(k) < 2 for k in self.k):
            raise ParameterError("flow degrees must be >= 2")

    @property
    def L(self):
        return len(self.k)

    def flows_in_layer(self, l):
        """Number of flow nodes of layer ``l`` (1-based)."""
        return self.m0 if l == 1 else self.m[l - 2]


def _check_layers(layers, graphs):
    if len(graphs) != layers.L:
        raise ParameterError(f"need {layers.L} graphs, got {len(graphs)}")
    for l, g in enumerate(graphs, start=1):
        if g.m0 != layers.flows_in_layer(l) or g.m1 != layers.m[l - 1] or g.k != layers.k[l - 1]:
            raise ParameterError(f"graph for layer {l} does not match the layer configuration")


def encode_layers(layers, graphs, flows):
    """Batch multilayer encoding: list of per-layer counter arrays.

    Layer-``l`` counters wrap modulo ``2**d_l``; the number of wraps of each
    counter becomes the size of the matching layer-``l+1`` flow.  The last
    layer wraps silently.
    """
    _check_layers(layers, graphs)
    out = []
    sizes = np.asarray(flows, dtype=np.int64)
    for l, g in enumerate(graphs):
        enc = encode(g, sizes, layers.d[l])
        out.append(enc.mod)
        sizes = enc.overflow_count
    return out


def ingest_trace(layers, graphs, trace):
    """Process a packet trace one packet at a time.

    Each packet of flow ``f`` increments the layer-1 counters of ``f``; any
    counter reaching ``2**d_l`` resets to 0 and increments the layer-(l+1)
    counters of its matching layer-(l+1) flow.  Returns per-layer counters.
    """
    _check_layers(layers, graphs)
    counters = [np.zeros(g.m1, dtype=np.int64) for g in graphs]
    caps = [1 << int(d) for d in layers.d]
    adj = [g.flow_adj.tolist() for g in graphs]
    m0 = layers.m0
    for pkt in trace:
        f = int(pkt)
        if not 0 <= f < m0:
            raise ParameterError(f"unknown flow id {pkt!r}")
        pending = [(0, f)]
        while pending:
            l, node = pending.pop()
            vals = counters[l]
            for c in adj[l][node]:
                vals[c] += 1
                if vals[c] == caps[l]:
                    vals[c] = 0
                    if l + 1 < len(graphs):
                        pending.append((l + 1, c))
    return counters


def restore_counters(residual, overflow_estimate, d_prev):
    """Previous-layer counter values from the decoded next-layer flow sizes.

    ``value = overflow * 2**d_prev + residual`` where ``d_prev`` is the depth
    of the counters being restored.
    """
    residual = np.asarray(residual, dtype=np.int64)
    return np.asarray(overflow_estimate, dtype=np.int64) * (np.int64(1) << np.int64(d_prev)) + residual


# -- file formats -----------------------------------------------------------

def _write_pairs(path, header, ids, values):
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(header)
        for i, v in zip(ids, values):
            wr.writerow([int(i), int(v)])


def _read_pairs(path, header):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or [h.strip() for h in rows[0]] != list(header):
        raise ParameterError(f"{path}: expected header {','.join(header)}")
    data = [(int(a), int(b)) for a, b in rows[1:] if (a, b) != ("", "")]
    data.sort()
    ids = [a for a, _ in data]
    if ids != list(range(len(ids))):
        raise ParameterError(f"{path}: ids must be 0..n-1 without gaps")
    return np.array([b for _, b in data], dtype=np.int64)


def write_flows(path, sizes):
    _write_pairs(path, ("flow_id", "size"), range(len(sizes)), sizes)


def read_flows(path):
    return _read_pairs(path, ("flow_id", "size"))


def write_counters(path, values):
    _write_pairs(path, ("counter_id", "value"), range(len(values)), values)


def read_counters(path):
    return _read_pairs(path, ("counter_id", "value"))


def read_trace(path):
    with open(path) as fh:
        return [int(line) for line in fh if line.strip()]


def write_trace(path, trace):
    with open(path, "w") as fh:
        fh.writelines(f"{int(t)}\n" for t in trace)
