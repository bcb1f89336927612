"""Separating vertex cutsets between source vertices and a target.

Vertex sets are handled internally as integer bitmasks so that exhaustive
enumeration on desk-scale graphs stays cheap.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from itertools import combinations
from typing import Iterable, Optional

from .errors import NoCutExists, NotSevered, OverlapError, TooLarge
from .model import Network, union_mask

MAX_EXHAUSTIVE_N = 24


@dataclass(frozen=True)
class SeparationCertificate:
    cutset: frozenset[int]
    target: int
    sources: frozenset[int]
    target_partition: frozenset[int]
    severed: bool

    def to_json(self) -> dict:
        """1-based ids, matching the external certificate format."""
        return {
            "cutset": sorted(v + 1 for v in self.cutset),
            "severed": self.severed,
            "Z": sorted(v + 1 for v in self.target_partition),
        }


def _reach(net: Network, start: int, blocked: int) -> int:
    """Bitmask of vertices reachable from ``start`` without entering ``blocked``."""
    out = net.out_masks
    seen = start & ~blocked
    frontier = seen
    while frontier:
        nxt = 0
        f = frontier
        while f:
            low = f & -f
            nxt |= out[low.bit_length() - 1]
            f ^= low
        nxt &= ~seen & ~blocked
        seen |= nxt
        frontier = nxt
    return seen


def _members(mask: int) -> list[int]:
    out = []
    while mask:
        low = mask & -mask
        out.append(low.bit_length() - 1)
        mask ^= low
    return out


def _check_ids(net: Network, nodes: Iterable[int]) -> None:
    for v in nodes:
        if not 0 <= v < net.n:
            raise IndexError(f"node id {v} out of range for n={net.n}")


def _unreachable_partition(net: Network, sources: frozenset[int], cutset: frozenset[int]) -> frozenset[int]:
    reached = _reach(net, union_mask(sources), union_mask(cutset))
    everything = (1 << net.n) - 1
    return frozenset(_members(everything & ~reached & ~union_mask(cutset)))


def validate_cutset(net: Network, sources, target: int, cutset) -> SeparationCertificate:
    """Check that ``cutset`` severs every path from ``sources`` to ``target``.

    The target partition is every vertex outside the cutset that the sources
    cannot reach once the cutset is deleted.  Its rows of ``a`` only have
    support on the partition itself and on the cutset.
    """
    sources = frozenset(sources)
    cutset = frozenset(cutset)
    _check_ids(net, sources | cutset | {target})
    if target in sources:
        raise OverlapError("target is also a source")
    if not cutset:
        raise OverlapError("cutset is empty")
    if cutset & sources or target in cutset:
        raise OverlapError("cutset must exclude sources and target")
    z = _unreachable_partition(net, sources, cutset)
    severed = target in z
    return SeparationCertificate(cutset, target, sources, z if severed else frozenset(), severed)


def target_partition(net: Network, cutset, target: int, sources) -> frozenset[int]:
    cert = validate_cutset(net, sources, target, cutset)
    if not cert.severed:
        raise NotSevered(
            f"cutset {sorted(v + 1 for v in cert.cutset)} does not separate "
            f"target {target + 1}")
    return cert.target_partition


def _relevant(net: Network, sources: frozenset[int], target: int) -> int:
    """Vertices lying on some source->target walk that avoids both endpoints
    except at its ends; minimal cutsets are drawn only from these."""
    src = union_mask(sources)
    tmask = 1 << target
    fwd = 0
    for s in sources:
        for l in net.successors[s]:
            fwd |= _reach(net, 1 << l, src | tmask)
    rev = 0
    preds = net.predecessors
    # reverse reachability from the target's in-neighbours
    stack = [j for j in preds[target] if not (src | tmask) >> j & 1]
    seen = 0
    for j in stack:
        seen |= 1 << j
    while stack:
        v = stack.pop()
        rev |= 1 << v
        for j in preds[v]:
            bit = 1 << j
            if not seen & bit and not (src | tmask) & bit:
                seen |= bit
                stack.append(j)
    return fwd & rev


def enumerate_minimal_cutsets(net: Network, sources, target: int,
                              limit: Optional[int] = None) -> list[frozenset[int]]:
    """All inclusion-minimal separating cutsets, sorted lexicographically.

    Enumeration runs by increasing cardinality, so a severing set with no
    previously found cutset inside it is minimal.  With ``limit`` the search
    stops after that many cutsets (smallest first) and the result is sorted.
    """
    sources = frozenset(sources)
    _check_ids(net, sources | {target})
    if target in sources:
        raise OverlapError("target is also a source")
    if net.n > MAX_EXHAUSTIVE_N and limit is None:
        raise TooLarge(f"exhaustive enumeration is capped at n={MAX_EXHAUSTIVE_N}")
    if limit is not None and limit <= 0:
        return []
    src = union_mask(sources)
    tmask = 1 << target
    if any(target in net.successors[s] for s in sources):
        return []
    candidates = _members(_relevant(net, sources, target))
    found: list[int] = []
    for size in range(1, len(candidates) + 1):
        for combo in combinations(candidates, size):
            mask = union_mask(combo)
            if any(f & mask == f for f in found):
                continue
            if not _reach(net, src, mask) & tmask:
                found.append(mask)
                if limit is not None and len(found) >= limit:
                    return sorted((frozenset(_members(m)) for m in found), key=sorted)
    return sorted((frozenset(_members(m)) for m in found), key=sorted)


def min_vertex_cut(net: Network, sources, target: int) -> frozenset[int]:
    """Minimum-cardinality separating cutset by max-flow on the split digraph.

    Each vertex ``v`` outside sources and target becomes ``v_in -> v_out``
    with unit capacity; original edges get unbounded capacity.  Augmenting
    paths are found breadth-first (Edmonds-Karp).
    """
    sources = frozenset(sources)
    _check_ids(net, sources | {target})
    if target in sources:
        raise OverlapError("target is also a source")
    if any(target in net.successors[s] for s in sources):
        raise NoCutExists("a source is directly adjacent to the target")
    n = net.n
    big = n + 1
    # node 2v = v_in, 2v+1 = v_out; super source = 2n
    sink = 2 * target
    root = 2 * n
    cap: dict[tuple[int, int], int] = {}
    adj: dict[int, set[int]] = {u: set() for u in range(2 * n + 1)}

    def add(u, w, c):
        cap[(u, w)] = cap.get((u, w), 0) + c
        cap.setdefault((w, u), 0)
        adj[u].add(w)
        adj[w].add(u)

    for v in range(n):
        if v in sources or v == target:
            add(2 * v, 2 * v + 1, big)
        else:
            add(2 * v, 2 * v + 1, 1)
    for j, l in net.edges():
        if j != l:
            add(2 * j + 1, 2 * l, big)
    for s in sources:
        add(root, 2 * s, big)

    def bfs():
        parent = {root: None}
        queue = deque([root])
        while queue:
            u = queue.popleft()
            for w in adj[u]:
                if w not in parent and cap[(u, w)] > 0:
                    parent[w] = u
                    if w == sink:
                        return parent
                    queue.append(w)
        return parent

    while True:
        parent = bfs()
        if sink not in parent:
            break
        w = sink
        while parent[w] is not None:
            u = parent[w]
            cap[(u, w)] -= 1
            cap[(w, u)] += 1
            w = u
    reached = parent
    cut = frozenset(v for v in range(n)
                    if 2 * v in reached and 2 * v + 1 not in reached)
    return cut

