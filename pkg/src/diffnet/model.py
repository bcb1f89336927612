"""Network representation, ingestion and structural properties.

A network is a nonnegative ``n x n`` matrix ``a`` whose entry ``a[l, j]``
multiplies ``x_j`` in the update of ``x_l``.  The associated digraph has an
edge ``j -> l`` whenever ``a[l, j] > 0``.  Node ids are 0-based everywhere in
the library; text formats and the CLI use 1-based ids.
"""

from __future__ import annotations

import enum
import hashlib
import io
import json
import math
from collections import deque
from dataclasses import dataclass, field
from functools import cached_property, reduce
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from .errors import InvalidMatrix, NoConvergence, NotStochastic, ParseError

TOL_ROWSUM = 1e-12

# Nine-node substochastic example network (strongly connected, 27 edges).
EXAMPLE_MATRIX = (
    (0, 0, 0, 0, 0, 0, 0.2, 0.3, 0.25),
    (0, 0, 0, 0, 0, 0, 0.35, 0.25, 0.2),
    (0, 0, 0, 0, 0, 0, 0.15, 0.25, 0.45),
    (0.2, 0.4, 0.35, 0, 0, 0, 0, 0, 0),
    (0.2, 0.15, 0.25, 0, 0, 0, 0, 0, 0),
    (0.2, 0.45, 0.15, 0, 0, 0, 0, 0, 0),
    (0, 0, 0, 0.25, 0.25, 0.15, 0, 0, 0),
    (0, 0, 0, 0.3, 0.35, 0.25, 0, 0, 0),
    (0, 0, 0, 0.25, 0.35, 0.1, 0, 0, 0),
)


class StochasticityKind(enum.Enum):
    STOCHASTIC = "stochastic"
    SUBSTOCHASTIC = "substochastic"
    INVALID = "invalid"


@dataclass(frozen=True)
class StochasticityClass:
    kind: StochasticityKind
    worst_row_sum: float


@dataclass(frozen=True, eq=False)
class Network:
    """Immutable weighted digraph with its (sub)stochastic state matrix.

    Build instances with :meth:`from_matrix` or :func:`load_network`; the
    constructor does no validation.
    """

    a: np.ndarray
    node_labels: Optional[tuple] = field(default=None)

    @classmethod
    def from_matrix(cls, a, node_labels: Optional[Sequence[str]] = None) -> "Network":
        arr = np.array(a, dtype=float)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
            raise InvalidMatrix(f"matrix must be square, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            row = int(np.argwhere(~np.isfinite(arr))[0, 0])
            raise InvalidMatrix(f"non-finite entry in row {row + 1}", row=row)
        neg = np.argwhere(arr < 0)
        if len(neg):
            row = int(neg[0, 0])
            raise InvalidMatrix(f"negative entry in row {row + 1}", row=row)
        sums = arr.sum(axis=1)
        over = np.nonzero(sums > 1 + TOL_ROWSUM)[0]
        if len(over):
            row = int(over[0])
            raise InvalidMatrix(
                f"row {row + 1} sums to {float(sums[row])!r} > 1", row=row)
        if node_labels is not None:
            node_labels = tuple(str(x) for x in node_labels)
            if len(node_labels) != arr.shape[0]:
                raise InvalidMatrix("node_labels length does not match n")
        arr.setflags(write=False)
        return cls(arr, node_labels)

    @property
    def n(self) -> int:
        return self.a.shape[0]

    @cached_property
    def digest(self) -> str:
        return hashlib.sha1(np.ascontiguousarray(self.a).tobytes()).hexdigest()[:16]

    def __hash__(self):
        return hash(self.digest)

    def __eq__(self, other):
        if not isinstance(other, Network):
            return NotImplemented
        return self.a.shape == other.a.shape and np.array_equal(self.a, other.a)

    def edges(self) -> list[tuple[int, int]]:
        """Directed edges ``(j, l)`` with ``a[l, j] > 0``, sorted."""
        rows, cols = np.nonzero(self.a > 0)
        return sorted(zip(cols.tolist(), rows.tolist()))

    @cached_property
    def successors(self) -> tuple[tuple[int, ...], ...]:
        return tuple(tuple(np.nonzero(self.a[:, j] > 0)[0].tolist())
                     for j in range(self.n))

    @cached_property
    def predecessors(self) -> tuple[tuple[int, ...], ...]:
        return tuple(tuple(np.nonzero(self.a[l] > 0)[0].tolist())
                     for l in range(self.n))

    @cached_property
    def out_masks(self) -> tuple[int, ...]:
        """Successor sets as integer bitmasks (bit ``l`` set for ``j -> l``)."""
        return tuple(sum(1 << l for l in succ) for succ in self.successors)

    @cached_property
    def rho(self) -> float:
        return spectral_radius(self)

    def label(self, node: int) -> str:
        if self.node_labels is not None:
            return self.node_labels[node]
        return str(node + 1)

    def to_json(self) -> dict:
        kind = classify(self).kind
        return {"n": self.n, "rows": self.a.tolist(), "class": kind.value}


def from_edges(n: int, edges) -> Network:
    """Build a network from 0-based ``(from, to, weight)`` triples."""
    a = np.zeros((n, n))
    seen = set()
    for j, l, w in edges:
        if (j, l) in seen:
            raise ParseError(f"duplicate edge {j + 1}->{l + 1}")
        seen.add((j, l))
        a[l, j] = w
    return Network.from_matrix(a)


def example_network() -> Network:
    return Network.from_matrix(EXAMPLE_MATRIX)


def _rows(text: str) -> list[list[str]]:
    out = []
    for line in io.StringIO(text):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        out.append([tok.strip() for tok in line.split(",")])
    return out


def _parse_float(tok: str, lineno: int) -> float:
    try:
        return float(tok)
    except ValueError:
        raise ParseError(f"line {lineno}: cannot parse {tok!r} as a number") from None


def _parse_matrix(rows) -> Network:
    n = len(rows)
    for k, r in enumerate(rows):
        if len(r) != n:
            raise ParseError(f"row {k + 1} has {len(r)} entries, expected {n}")
    return Network.from_matrix(
        [[_parse_float(t, k + 1) for t in r] for k, r in enumerate(rows)])


def _parse_edgelist(rows) -> Network:
    if rows and not _is_number(rows[0][0]):
        rows = rows[1:]  # header line
    triples = []
    for k, r in enumerate(rows):
        if len(r) != 3:
            raise ParseError(f"edge line {k + 1}: expected 'from,to,weight'")
        try:
            j, l = int(r[0]), int(r[1])
        except ValueError:
            raise ParseError(f"edge line {k + 1}: node ids must be integers") from None
        if j < 1 or l < 1:
            raise ParseError(f"edge line {k + 1}: node ids are 1-based")
        triples.append((j - 1, l - 1, _parse_float(r[2], k + 1)))
    if not triples:
        raise ParseError("empty edge list")
    n = max(max(j, l) for j, l, _ in triples) + 1
    return from_edges(n, triples)


def _is_number(tok: str) -> bool:
    try:
        float(tok)
    except ValueError:
        return False
    return True


def load_network(document: str, fmt: str = "auto") -> Network:
    """Parse a matrix CSV, an edge list or the JSON echo format.

    ``fmt="auto"`` picks JSON when the text starts with ``{``, a matrix when
    the rows form a square table and an edge list otherwise.  A 3-edge list is
    indistinguishable from a 3x3 matrix; pass ``fmt="edgelist"`` for those.
    """
    text = document.strip()
    if not text:
        raise ParseError("empty document")
    if fmt == "json" or (fmt == "auto" and text.startswith("{")):
        try:
            doc = json.loads(text)
            rows = doc["rows"]
        except (ValueError, KeyError, TypeError) as exc:
            raise ParseError(f"bad JSON network: {exc}") from None
        net = Network.from_matrix(rows)
        if "n" in doc and doc["n"] != net.n:
            raise ParseError("JSON 'n' does not match rows")
        return net
    rows = _rows(text)
    if fmt == "matrix":
        return _parse_matrix(rows)
    if fmt == "edgelist":
        return _parse_edgelist(rows)
    if fmt != "auto":
        raise ValueError(f"unknown format {fmt!r}")
    if all(len(r) == len(rows) for r in rows) and all(_is_number(t) for r in rows for t in r):
        return _parse_matrix(rows)
    if all(len(r) == 3 for r in rows):
        return _parse_edgelist(rows)
    raise ParseError("document is neither a square matrix nor an edge list")


def load_network_file(path, fmt: str = "auto") -> Network:
    path = Path(path)
    if fmt == "auto" and path.suffix.lower() == ".json":
        fmt = "json"
    return load_network(path.read_text(), fmt=fmt)


def matrix_csv(net: Network) -> str:
    return "\n".join(",".join(repr(float(v)) for v in row) for row in net.a) + "\n"


def edgelist_csv(net: Network) -> str:
    return "".join(f"{j + 1},{l + 1},{float(net.a[l, j])!r}\n" for j, l in net.edges())


def classify(net: Network) -> StochasticityClass:
    sums = net.a.sum(axis=1)
    worst = float(sums.max()) if net.n else 0.0
    if np.any(sums > 1 + TOL_ROWSUM) or np.any(net.a < 0):
        kind = StochasticityKind.INVALID
    elif np.all(np.abs(sums - 1) <= TOL_ROWSUM):
        kind = StochasticityKind.STOCHASTIC
    else:
        kind = StochasticityKind.SUBSTOCHASTIC
    return StochasticityClass(kind, worst)


def _scc_labels(net: Network) -> tuple[int, np.ndarray]:
    graph = csr_matrix((net.a > 0).astype(np.int8))
    return connected_components(graph, directed=True, connection="strong")


def strongly_connected(net: Network) -> bool:
    if net.n <= 1:
        return True
    ncomp, _ = _scc_labels(net)
    return ncomp == 1


def bfs_distances(net: Network, source: int) -> list[int]:
    """Hop distances from ``source`` along directed edges; -1 if unreachable."""
    dist = [-1] * net.n
    dist[source] = 0
    queue = deque([source])
    while queue:
        j = queue.popleft()
        for l in net.successors[j]:
            if dist[l] < 0:
                dist[l] = dist[j] + 1
                queue.append(l)
    return dist


def period(net: Network) -> int:
    """Period of an irreducible network: gcd of all cycle lengths."""
    dist = bfs_distances(net, 0)
    g = 0
    for j, l in net.edges():
        g = math.gcd(g, dist[j] + 1 - dist[l])
    return abs(g)


def is_ergodic(net: Network) -> bool:
    cls = classify(net)
    if cls.kind is not StochasticityKind.STOCHASTIC:
        raise NotStochastic(f"matrix is {cls.kind.value}, not stochastic")
    if not strongly_connected(net):
        return False
    return period(net) == 1


def distance_classes(net: Network, source: int) -> dict[int, frozenset[int]]:
    """Group reachable vertices by hop distance from ``source``."""
    classes: dict[int, set[int]] = {}
    for v, d in enumerate(bfs_distances(net, source)):
        if d >= 0:
            classes.setdefault(d, set()).add(v)
    return {d: frozenset(vs) for d, vs in sorted(classes.items())}


def _perron_root(block: np.ndarray, rtol: float, max_iter: int) -> float:
    # Iterate on block + I: primitive when block is irreducible, and the
    # Collatz-Wielandt ratios of a positive vector bracket its Perron root.
    m = block.shape[0]
    if m == 1:
        return float(block[0, 0])
    shifted = block + np.eye(m)
    x = np.full(m, 1.0 / m)
    lo = hi = 0.0
    for _ in range(max_iter):
        y = shifted @ x
        ratios = y / x
        lo, hi = ratios.min(), ratios.max()
        if hi - lo <= rtol * hi:
            return float(0.5 * (lo + hi) - 1.0)
        x = y / y.sum()
    raise NoConvergence(
        f"power iteration did not converge, bracket gap {hi - lo:.3e}",
        residual=float(hi - lo), iterations=max_iter)


def spectral_radius(net: Network, rtol: float = 1e-12, max_iter: int = 100_000) -> float:
    """Perron root of ``a``, computed blockwise over strongly connected components."""
    if net.n == 0:
        return 0.0
    ncomp, labels = _scc_labels(net)
    rho = 0.0
    for c in range(ncomp):
        idx = np.nonzero(labels == c)[0]
        rho = max(rho, _perron_root(net.a[np.ix_(idx, idx)], rtol, max_iter))
    return max(rho, 0.0)


def decay_rate(net: Network) -> float:
    """Modulus governing transient decay: rho(A) if below 1, else the
    largest eigenvalue modulus other than the unit eigenvalue."""
    rho = net.rho
    if rho < 1 - 1e-12:
        return rho
    mods = np.sort(np.abs(np.linalg.eigvals(net.a)))[::-1]
    rest = mods[1:] if len(mods) > 1 else np.array([0.0])
    return float(rest[0])


def relabel(net: Network, perm: Sequence[int]) -> Network:
    """Network with node ``v`` renamed to ``perm[v]``."""
    p = np.asarray(perm)
    a = np.empty_like(net.a)
    a[np.ix_(p, p)] = net.a
    return Network.from_matrix(a)


def union_mask(nodes) -> int:
    return reduce(lambda acc, v: acc | (1 << v), nodes, 0)
