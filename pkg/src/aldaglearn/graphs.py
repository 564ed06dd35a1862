"""DAGs, partially directed graphs, topological orders and linear extensions.

Vertices are the integers ``0 .. p-1``; an edge ``(j, i)`` means ``j -> i``.
Variable orders are tuples listing vertices from first to last.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass
from itertools import combinations
from typing import Iterable

from .errors import CycleError, TooManyOrdersError

VariableOrder = tuple[int, ...]

DEFAULT_ORDER_CAP = 100_000


def _has_cycle(p: int, edges: Iterable[tuple[int, int]]) -> bool:
    children: list[list[int]] = [[] for _ in range(p)]
    indeg = [0] * p
    for j, i in edges:
        children[j].append(i)
        indeg[i] += 1
    stack = [v for v in range(p) if indeg[v] == 0]
    seen = 0
    while stack:
        v = stack.pop()
        seen += 1
        for w in children[v]:
            indeg[w] -= 1
            if indeg[w] == 0:
                stack.append(w)
    return seen != p


@dataclass(frozen=True)
class Dag:
    p: int
    edges: frozenset[tuple[int, int]]

    def __init__(self, p: int, edges: Iterable[tuple[int, int]] = ()):
        edges = frozenset((int(j), int(i)) for j, i in edges)
        for j, i in edges:
            if j == i:
                raise ValueError(f"self-loop on vertex {j}")
            if not (0 <= j < p and 0 <= i < p):
                raise ValueError(f"edge ({j}, {i}) outside 0..{p - 1}")
        if _has_cycle(p, edges):
            raise CycleError("edge set contains a directed cycle")
        object.__setattr__(self, "p", int(p))
        object.__setattr__(self, "edges", edges)

    def parents(self, i: int) -> tuple[int, ...]:
        return tuple(sorted(j for j, c in self.edges if c == i))

    def children(self, j: int) -> tuple[int, ...]:
        return tuple(sorted(c for pa, c in self.edges if pa == j))

    def adjacent(self, a: int, b: int) -> bool:
        return (a, b) in self.edges or (b, a) in self.edges

    def max_indegree(self) -> int:
        return max((len(self.parents(i)) for i in range(self.p)), default=0)

    def v_structures(self) -> frozenset[tuple[int, int, int]]:
        """Unshielded colliders ``(a, c, b)`` with ``a < b``."""
        out = set()
        for c in range(self.p):
            for a, b in combinations(self.parents(c), 2):
                if not self.adjacent(a, b):
                    out.add((a, c, b))
        return frozenset(out)

    def skeleton(self) -> frozenset[frozenset[int]]:
        return frozenset(frozenset(e) for e in self.edges)


@dataclass(frozen=True)
class MixedGraph:
    """Graph with directed and undirected edges (e.g. a CPDAG)."""

    p: int
    directed: frozenset[tuple[int, int]]
    undirected: frozenset[frozenset[int]]

    def __init__(self, p, directed=(), undirected=()):
        directed = frozenset((int(j), int(i)) for j, i in directed)
        undirected = frozenset(frozenset((int(a), int(b))) for a, b in undirected)
        pairs = {frozenset(e) for e in directed}
        if len(pairs) != len(directed):
            raise ValueError("an edge is directed both ways")
        if pairs & undirected:
            raise ValueError("directed and undirected edges overlap")
        if any(len(e) != 2 for e in undirected):
            raise ValueError("undirected self-loop")
        if _has_cycle(p, directed):
            raise CycleError("directed part contains a cycle")
        object.__setattr__(self, "p", int(p))
        object.__setattr__(self, "directed", directed)
        object.__setattr__(self, "undirected", undirected)

    def skeleton(self) -> frozenset[frozenset[int]]:
        return frozenset(frozenset(e) for e in self.directed) | self.undirected


def topological_order(g: Dag) -> VariableOrder:
    """Kahn's algorithm, always emitting the smallest available vertex."""
    indeg = [0] * g.p
    children: list[list[int]] = [[] for _ in range(g.p)]
    for j, i in g.edges:
        indeg[i] += 1
        children[j].append(i)
    heap = [v for v in range(g.p) if indeg[v] == 0]
    heapq.heapify(heap)
    order = []
    while heap:
        v = heapq.heappop(heap)
        order.append(v)
        for w in children[v]:
            indeg[w] -= 1
            if indeg[w] == 0:
                heapq.heappush(heap, w)
    if len(order) != g.p:
        raise CycleError("graph is not acyclic")
    return tuple(order)


def is_consistent(order: VariableOrder, constraints: Iterable[tuple[int, int]]) -> bool:
    pos = {v: k for k, v in enumerate(order)}
    return all(pos[j] < pos[i] for j, i in constraints)


def linear_extensions(
    partial: Iterable[tuple[int, int]], p: int, cap: int = DEFAULT_ORDER_CAP
) -> list[VariableOrder]:
    """All total orders of ``range(p)`` consistent with ``partial``, lexicographically.

    Raises ``TooManyOrdersError`` as soon as more than ``cap`` orders exist.
    """
    partial = set(partial)
    if _has_cycle(p, partial):
        raise CycleError("constraints contain a cycle")
    preds = [0] * p
    for j, i in partial:
        preds[i] |= 1 << j
    out: list[VariableOrder] = []
    prefix: list[int] = []

    def extend(placed: int) -> None:
        if len(prefix) == p:
            if len(out) >= cap:
                raise TooManyOrdersError(cap)
            out.append(tuple(prefix))
            return
        for v in range(p):
            if not placed >> v & 1 and preds[v] & ~placed == 0:
                prefix.append(v)
                extend(placed | 1 << v)
                prefix.pop()

    extend(0)
    return out


def _order_edges(g: Dag) -> list[tuple[int, int]]:
    """Chickering's edge ordering: ascending by child rank, descending by parent rank."""
    rank = {v: k for k, v in enumerate(topological_order(g))}
    return sorted(g.edges, key=lambda e: (rank[e[1]], -rank[e[0]]))


def cpdag_of(g: Dag) -> MixedGraph:
    """Completed PDAG of the Markov equivalence class of ``g``.

    Compelled edges stay directed, reversible ones become undirected
    (Chickering 1995, label-edges procedure).
    """
    ordered = _order_edges(g)
    label: dict[tuple[int, int], str] = {}
    parents = {i: set(g.parents(i)) for i in range(g.p)}
    for x, y in ordered:
        if (x, y) in label:
            continue
        done = False
        for w in sorted(parents[x]):
            if label.get((w, x)) != "compelled":
                continue
            if w not in parents[y]:
                for z in parents[y]:
                    label[(z, y)] = "compelled"
                done = True
                break
            label[(w, y)] = "compelled"
        if done:
            continue
        verdict = (
            "compelled"
            if any(z != x and z not in parents[x] for z in parents[y])
            else "reversible"
        )
        for z in parents[y]:
            label.setdefault((z, y), verdict)
    directed = [e for e, lab in label.items() if lab == "compelled"]
    undirected = [e for e, lab in label.items() if lab == "reversible"]
    return MixedGraph(g.p, directed, undirected)


def directed_core(m: MixedGraph) -> frozenset[tuple[int, int]]:
    return m.directed


def dag_from_order_and_skeleton(order: VariableOrder, skeleton) -> Dag:
    """Orient every skeleton edge along ``order``."""
    pos = {v: k for k, v in enumerate(order)}
    edges = []
    for e in skeleton:
        a, b = sorted(e)
        edges.append((a, b) if pos[a] < pos[b] else (b, a))
    return Dag(len(order), edges)


def apply_meek_rules(
    p: int, directed: set[tuple[int, int]], undirected: set[frozenset[int]]
) -> tuple[set[tuple[int, int]], set[frozenset[int]]]:
    """Close a partially directed graph under Meek's rules R1-R3.

    Each round computes every orientation implied by the current graph and
    applies those that do not conflict, so the result does not depend on
    the labelling of the vertices.
    """
    directed = set(directed)
    undirected = set(undirected)

    def adj(a, b):
        return (a, b) in directed or (b, a) in directed or frozenset((a, b)) in undirected

    while True:
        wanted: set[tuple[int, int]] = set()
        for e in undirected:
            a, b = tuple(e)
            for x, y in ((a, b), (b, a)):
                # R1: z -> x - y, z and y nonadjacent
                if any((z, x) in directed and not adj(z, y) for z in range(p) if z != y):
                    wanted.add((x, y))
                    continue
                # R2: x -> z -> y
                if any((x, z) in directed and (z, y) in directed for z in range(p)):
                    wanted.add((x, y))
                    continue
                # R3: x - z1 -> y, x - z2 -> y, z1 and z2 nonadjacent
                zs = [
                    z for z in range(p)
                    if frozenset((x, z)) in undirected and (z, y) in directed
                ]
                if any(not adj(z1, z2) for z1, z2 in combinations(zs, 2)):
                    wanted.add((x, y))
        applied = False
        for x, y in sorted(wanted):
            if (y, x) in wanted:
                continue
            undirected.discard(frozenset((x, y)))
            directed.add((x, y))
            applied = True
        if not applied:
            return directed, undirected
