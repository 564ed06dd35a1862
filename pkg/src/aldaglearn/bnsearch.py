"""Auxiliary Bayesian-network learners used to restrict the order search.

Two learners are provided: a score-based tabu search over DAGs (BIC) and
the constraint-based PC-stable algorithm with a G-squared test.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations
from typing import Sequence

import numpy as np
from scipy.stats import chi2

from .dataset import CategoricalDataset, joint_counts
from .graphs import Dag, MixedGraph, _has_cycle, apply_meek_rules
from .stagedtree import counts_loglik

TABU_TENURE = 10
DEFAULT_ALPHA = 0.05
DEFAULT_MAX_SEPSET = 3


def family_counts(data: CategoricalDataset, child: int, parents: Sequence[int]) -> np.ndarray:
    """Counts reshaped to (parent configurations, child levels)."""
    parents = tuple(parents)
    table = joint_counts(data, (*parents, child))
    return table.reshape(-1, data.cards[child])


def family_bic(data: CategoricalDataset, child: int, parents: Sequence[int]) -> float:
    parents = tuple(sorted(parents))
    key = ("family_bic", child, parents)
    score = data._cache.get(key)
    if score is None:
        cards = data.cards
        n_par = math.prod(cards[j] for j in parents)
        d = (cards[child] - 1) * n_par
        ll = counts_loglik(family_counts(data, child, parents))
        score = -2.0 * ll + d * math.log(data.n_rows)
        data._cache[key] = score
    return score


def dag_bic(g: Dag, data: CategoricalDataset) -> float:
    """BIC = -2 loglik + d ln N of the DAG's multinomial model (lower is better)."""
    return float(sum(family_bic(data, i, g.parents(i)) for i in range(g.p)))


def _reaches(children: dict[int, set[int]], src: int, dst: int) -> bool:
    stack, seen = [src], {src}
    while stack:
        v = stack.pop()
        if v == dst:
            return True
        for w in children[v]:
            if w not in seen:
                seen.add(w)
                stack.append(w)
    return False


def tabu_learn_dag(
    data: CategoricalDataset,
    k: int,
    tenure: int = TABU_TENURE,
    max_noimprove: int | None = None,
) -> Dag:
    """Tabu search over DAGs with in-degree at most ``k``, minimising BIC.

    Each iteration applies the best admissible move (add, delete or reverse
    one edge), even if it worsens the score; the inverses of the last
    ``tenure`` moves are forbidden. Search stops after ``max_noimprove``
    (default ``100 * p``) iterations without a new best network, which is
    returned. Ties are broken by the lexicographic move key
    ``(kind, j, i)`` with kind ordered add < delete < reverse.
    """
    if k < 1:
        raise ValueError("k must be at least 1")
    p = data.p
    if max_noimprove is None:
        max_noimprove = 100 * p
    parents: dict[int, set[int]] = {i: set() for i in range(p)}
    children: dict[int, set[int]] = {i: set() for i in range(p)}
    score = {i: family_bic(data, i, ()) for i in range(p)}
    current = sum(score.values())
    best_score, best_edges = current, frozenset()
    tabu: list[tuple[str, int, int]] = []
    stale = 0
    kind_rank = {"add": 0, "delete": 1, "reverse": 2}

    while stale < max_noimprove:
        best_move, best_key = None, None
        for j in range(p):
            for i in range(p):
                if i == j:
                    continue
                if j in parents[i]:
                    cand = [("delete", j, i), ("reverse", j, i)]
                elif i not in parents[j]:
                    cand = [("add", j, i)]
                else:
                    continue
                for move in cand:
                    if move in tabu:
                        continue
                    kind = move[0]
                    if kind == "add":
                        if len(parents[i]) >= k or _reaches(children, i, j):
                            continue
                        delta = family_bic(data, i, parents[i] | {j}) - score[i]
                    elif kind == "delete":
                        delta = family_bic(data, i, parents[i] - {j}) - score[i]
                    else:
                        if len(parents[j]) >= k:
                            continue
                        children[j].discard(i)
                        cyclic = _reaches(children, j, i)
                        children[j].add(i)
                        if cyclic:
                            continue
                        delta = (
                            family_bic(data, i, parents[i] - {j}) - score[i]
                            + family_bic(data, j, parents[j] | {i}) - score[j]
                        )
                    # rounding makes mirror-image moves tie exactly
                    key = (round(delta, 8), kind_rank[kind], j, i)
                    if best_move is None or key < best_key:
                        best_move, best_key = move, key
        if best_move is None:
            break
        kind, j, i = best_move
        if kind == "add":
            parents[i].add(j)
            children[j].add(i)
            inverse = ("delete", j, i)
        elif kind == "delete":
            parents[i].discard(j)
            children[j].discard(i)
            inverse = ("add", j, i)
        else:
            parents[i].discard(j)
            children[j].discard(i)
            parents[j].add(i)
            children[i].add(j)
            inverse = ("reverse", i, j)
        for v in {i, j}:
            score[v] = family_bic(data, v, parents[v])
        current = sum(score[v] for v in range(p))
        tabu.append(inverse)
        if len(tabu) > tenure:
            tabu.pop(0)
        if current < best_score - 1e-9 * max(1.0, abs(best_score)):
            best_score = current
            best_edges = frozenset((j, c) for c in range(p) for j in parents[c])
            stale = 0
        else:
            stale += 1
    return Dag(p, best_edges)


@dataclass(frozen=True)
class CiTestResult:
    statistic: float
    dof: int
    p_value: float
    independent: bool


def g2_test(
    data: CategoricalDataset, a: int, b: int, c: Sequence[int] = (), alpha: float = DEFAULT_ALPHA
) -> CiTestResult:
    """G-squared test of X_a independent of X_b given X_c.

    Degrees of freedom count only strata of ``c`` with positive total.
    """
    c = tuple(c)
    if a == b or a in c or b in c:
        raise ValueError("a, b and c must be disjoint")
    cards = data.cards
    table = joint_counts(data, (*c, a, b)).reshape(-1, cards[a], cards[b]).astype(float)
    n_z = table.sum(axis=(1, 2))
    expected = (
        table.sum(axis=2, keepdims=True)
        * table.sum(axis=1, keepdims=True)
        / np.where(n_z > 0, n_z, 1.0)[:, None, None]
    )
    mask = table > 0
    stat = 2.0 * float((table[mask] * np.log(table[mask] / expected[mask])).sum())
    stat = max(stat, 0.0)
    dof = int((n_z > 0).sum()) * (cards[a] - 1) * (cards[b] - 1)
    if dof == 0:
        return CiTestResult(stat, 0, 1.0, True)
    p_value = float(chi2.sf(stat, dof))
    return CiTestResult(stat, dof, p_value, p_value > alpha)


def pc_stable(
    data: CategoricalDataset,
    alpha: float = DEFAULT_ALPHA,
    max_sepset: int = DEFAULT_MAX_SEPSET,
) -> MixedGraph:
    """PC-stable with G-squared tests.

    The skeleton phase freezes adjacencies at the start of every level, so
    edge removals do not depend on the variable labelling. All separating
    sets found at the removal level are kept; an unshielded triple
    ``a - z - b`` becomes a collider when ``z`` lies in none of them.
    Conflicting collider orientations leave the edge undirected, then
    Meek's rules are applied to closure.
    """
    if not 0 < alpha < 1:
        raise ValueError("alpha must lie in (0, 1)")
    p = data.p
    adj = {v: set(range(p)) - {v} for v in range(p)}
    sepsets: dict[frozenset[int], list[frozenset[int]]] = {}
    level = 0
    while level <= max_sepset:
        frozen = {v: set(adj[v]) for v in range(p)}
        if not any(len(frozen[x] - {y}) >= level for x in range(p) for y in frozen[x]):
            break
        removed = []
        for x in range(p):
            for y in sorted(frozen[x]):
                if y < x:
                    continue
                found = []
                conds = set()
                for base in (frozen[x] - {y}, frozen[y] - {x}):
                    for s in combinations(sorted(base), level):
                        conds.add(frozenset(s))
                for s in sorted(conds, key=sorted):
                    if g2_test(data, x, y, sorted(s), alpha).independent:
                        found.append(s)
                if found:
                    removed.append((x, y))
                    sepsets[frozenset((x, y))] = found
        for x, y in removed:
            adj[x].discard(y)
            adj[y].discard(x)
        level += 1

    votes: dict[tuple[int, int], int] = {}
    for z in range(p):
        for a, b in combinations(sorted(adj[z]), 2):
            if b in adj[a]:
                continue
            if all(z not in s for s in sepsets.get(frozenset((a, b)), [frozenset()])):
                votes[(a, z)] = votes.get((a, z), 0) + 1
                votes[(b, z)] = votes.get((b, z), 0) + 1
    directed = {e for e in votes if (e[1], e[0]) not in votes}
    undirected = {
        frozenset((x, y)) for x in range(p) for y in adj[x]
        if x < y and (x, y) not in directed and (y, x) not in directed
    }
    directed, undirected = apply_meek_rules(p, directed, undirected)
    if _has_cycle(p, directed):
        directed, undirected = _break_cycles(p, directed, undirected)
    return MixedGraph(p, directed, undirected)


def _break_cycles(p, directed, undirected):
    """Turn every directed edge inside a strongly connected component undirected."""
    reach = np.eye(p, dtype=bool)
    for j, i in directed:
        reach[j, i] = True
    for m in range(p):
        reach |= reach[:, [m]] & reach[[m], :]
    bad = {(j, i) for j, i in directed if reach[i, j]}
    return set(directed) - bad, set(undirected) | {frozenset(e) for e in bad}
