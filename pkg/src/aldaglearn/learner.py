"""Structure learning of k-parents staged trees.

For a fixed variable order, parents are chosen greedily by conditional
mutual information, the resulting DAG is turned into a saturated staged
tree, and stages are then joined by backward hill climbing on the BIC.
Order-free strategies run that pipeline over a set of candidate orders and
keep the best-scoring tree.
"""

from __future__ import annotations

import enum
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from itertools import permutations
from typing import Sequence

import numpy as np
from scipy.special import xlogy

from .bnsearch import DEFAULT_ALPHA, DEFAULT_MAX_SEPSET, pc_stable, tabu_learn_dag
from .dataset import CategoricalDataset
from .errors import TooManyOrdersError
from .graphs import (
    DEFAULT_ORDER_CAP,
    Dag,
    VariableOrder,
    cpdag_of,
    directed_core,
    linear_extensions,
    topological_order,
)
from .infotheo import conditional_mutual_information
from .stagedtree import (
    FittedStages,
    LevelStaging,
    StagedTree,
    bic,
    canonical_stages,
    fit,
    level_cell_counts,
    stage_counts,
    tree_from_dag,
)

ALL_ORDERS_LIMIT = 7

# a merge must lower the BIC by more than this to count as an improvement
_MIN_IMPROVEMENT = 1e-9


class StrategyKind(str, enum.Enum):
    FIXED_CMI = "cmi"
    ORD1 = "ord1"
    ORD2 = "ord2"
    ORD3 = "ord3"
    ALL = "all"


@dataclass(frozen=True)
class Strategy:
    kind: StrategyKind
    k: int
    fixed_order: VariableOrder | None = None
    alpha: float = DEFAULT_ALPHA
    max_sepset: int = DEFAULT_MAX_SEPSET
    order_cap: int = DEFAULT_ORDER_CAP
    all_limit: int = ALL_ORDERS_LIMIT

    def __post_init__(self):
        object.__setattr__(self, "kind", StrategyKind(self.kind))
        if self.k < 1:
            raise ValueError("k must be at least 1")
        if self.fixed_order is not None:
            if self.kind is not StrategyKind.FIXED_CMI:
                raise ValueError("a fixed order only applies to the cmi strategy")
            object.__setattr__(self, "fixed_order", tuple(self.fixed_order))


@dataclass(eq=False)
class LearnResult:
    tree: StagedTree
    fit: FittedStages
    bic: float
    order_used: VariableOrder
    orders_evaluated: int
    wall_time: float = 0.0
    initial_tree: StagedTree | None = None
    initial_bic: float | None = None
    merges: list[tuple[int, int, int, float]] = field(default_factory=list)
    aux_dag: Dag | None = None

    def same_model(self, other: "LearnResult") -> bool:
        """Equality on everything except timing."""
        return (
            self.tree == other.tree
            and self.bic == other.bic
            and self.order_used == other.order_used
            and self.orders_evaluated == other.orders_evaluated
            and self.merges == other.merges
        )


def cmi_select_parents(
    data: CategoricalDataset, order: VariableOrder, i: int, k: int
) -> tuple[int, ...]:
    """Parents of the variable at position ``i`` (0-based) of ``order``.

    With ``i <= k`` every predecessor is a parent. Otherwise ``k`` parents
    are added one at a time, each maximising the CMI with the child given
    those already chosen; ties go to the lowest variable index. Returned in
    selection order.
    """
    child = order[i]
    preds = tuple(order[:i])
    if i <= k:
        return preds
    key = ("cmi_parents", child, frozenset(preds), k)
    cached = data._cache.get(key)
    if cached is not None:
        return cached
    chosen: list[int] = []
    for _ in range(k):
        best = min(
            (v for v in preds if v not in chosen),
            key=lambda v: (-round(conditional_mutual_information(data, child, v, chosen), 12), v),
        )
        chosen.append(best)
    data._cache[key] = tuple(chosen)
    return tuple(chosen)


def init_tree(data: CategoricalDataset, order: VariableOrder, k: int) -> StagedTree:
    """Saturated k-parents staged tree with CMI-selected parents."""
    order = tuple(order)
    edges = [
        (j, order[i]) for i in range(len(order)) for j in cmi_select_parents(data, order, i, k)
    ]
    return tree_from_dag(Dag(len(order), edges), order, data.cards)


def _stage_logliks(counts: np.ndarray) -> np.ndarray:
    counts = counts.astype(float)
    return xlogy(counts, counts).sum(axis=-1) - xlogy(counts.sum(axis=-1), counts.sum(axis=-1))


def climb_level(
    cells: np.ndarray, stage_of: Sequence[int], n_stages: int, log_n: float
) -> tuple[tuple[int, ...], int, list[tuple[int, int, float]]]:
    """Greedy best-merge search on one level.

    Returns the final canonical staging, its number of stages and the
    accepted merges as ``(s1, s2, bic_change)`` in the id space current at
    the time of each merge.
    """
    stage_of = canonical_stages(stage_of)
    penalty = (cells.shape[1] - 1) * log_n
    merges = []
    while n_stages > 1:
        s = stage_counts(cells, stage_of, n_stages)
        single = _stage_logliks(s)
        pooled = _stage_logliks(s[:, None, :] + s[None, :, :])
        delta = -2.0 * (pooled - single[:, None] - single[None, :]) - penalty
        delta[np.tril_indices(n_stages)] = np.inf
        flat = int(np.argmin(delta))
        s1, s2 = divmod(flat, n_stages)
        change = float(delta[s1, s2])
        if not change < -_MIN_IMPROVEMENT:
            break
        stage_of = canonical_stages([s1 if x == s2 else x for x in stage_of])
        n_stages -= 1
        merges.append((s1, s2, change))
    return stage_of, n_stages, merges


def _climb_cached(data: CategoricalDataset, level: LevelStaging):
    key = ("climb", level.variable, level.context_vars, level.stage_of)
    hit = data._cache.get(key)
    if hit is None:
        cells = level_cell_counts(data, level)
        hit = climb_level(cells, level.stage_of, level.n_stages, math.log(data.n_rows))
        data._cache[key] = hit
    return hit


def backward_hill_climb(tree: StagedTree, data: CategoricalDataset) -> LearnResult:
    """Join stages while the BIC strictly decreases.

    Levels contribute separately to the BIC, so each level is climbed on
    its own; within a level the merge with the largest decrease is taken,
    ties going to the lexicographically smallest stage pair.
    """
    start = time.perf_counter()
    levels = []
    merges = []
    for pos, lev in enumerate(tree.levels):
        stages, n_stages, level_merges = _climb_cached(data, lev)
        levels.append(LevelStaging(lev.variable, lev.context_vars, stages, n_stages))
        merges.extend((pos, s1, s2, d) for s1, s2, d in level_merges)
    final = StagedTree(tree.order, tree.cards, tuple(levels))
    fitted = fit(final, data)
    return LearnResult(
        tree=final,
        fit=fitted,
        bic=bic(final, fitted, data.n_rows),
        order_used=tree.order,
        orders_evaluated=1,
        wall_time=time.perf_counter() - start,
        initial_tree=tree,
        initial_bic=bic(tree, fit(tree, data), data.n_rows),
        merges=merges,
    )


def fit_order(data: CategoricalDataset, order: VariableOrder, k: int) -> LearnResult:
    """CMI parent selection and hill climbing for one order."""
    return backward_hill_climb(init_tree(data, order, k), data)


def candidate_orders(
    data: CategoricalDataset, strategy: Strategy
) -> tuple[list[VariableOrder], Dag | None]:
    """Orders a strategy searches over, with the auxiliary DAG if one is learned."""
    p = data.p
    kind = strategy.kind
    if kind is StrategyKind.FIXED_CMI:
        order = strategy.fixed_order or tuple(range(p))
        if sorted(order) != list(range(p)):
            raise ValueError("fixed order must be a permutation of the variables")
        return [tuple(order)], None
    if kind is StrategyKind.ALL:
        if p > strategy.all_limit:
            raise TooManyOrdersError(
                strategy.all_limit,
                f"the all-orders strategy is limited to {strategy.all_limit} variables "
                f"(got {p}, i.e. {math.factorial(p)} orders); use ord1, ord2 or ord3",
            )
        if math.factorial(p) > strategy.order_cap:
            raise TooManyOrdersError(strategy.order_cap)
        return list(permutations(range(p))), None
    if kind is StrategyKind.ORD3:
        constraints = directed_core(pc_stable(data, strategy.alpha, strategy.max_sepset))
        return linear_extensions(constraints, p, strategy.order_cap), None
    dag = tabu_learn_dag(data, strategy.k)
    if kind is StrategyKind.ORD1:
        constraints = dag.edges
    else:
        constraints = directed_core(cpdag_of(dag))
    return linear_extensions(constraints, p, strategy.order_cap), dag


def _fit_orders(args):
    data, orders, k = args
    return [fit_order(data, o, k) for o in orders]


def learn(data: CategoricalDataset, strategy: Strategy, jobs: int = 1) -> LearnResult:
    """Run a strategy and return the minimum-BIC tree over its orders.

    Ties are resolved in favour of the lexicographically smallest order.
    The result does not depend on ``jobs``.
    """
    start = time.perf_counter()
    orders, aux = candidate_orders(data, strategy)
    orders = sorted(set(orders))
    if jobs > 1 and len(orders) > 1:
        chunks = [orders[c::jobs] for c in range(jobs)]
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            parts = list(pool.map(_fit_orders, [(data, ch, strategy.k) for ch in chunks]))
        by_order = {r.order_used: r for part in parts for r in part}
        results = [by_order[o] for o in orders]
    else:
        results = [fit_order(data, o, strategy.k) for o in orders]
    best = results[0]
    for r in results[1:]:
        if r.bic < best.bic:
            best = r
    best.orders_evaluated = len(orders)
    best.aux_dag = aux
    best.wall_time = time.perf_counter() - start
    return best


def lv_pipeline(data: CategoricalDataset, k: int) -> LearnResult:
    """Baseline: tabu DAG, its topological order and parents, then hill climbing."""
    start = time.perf_counter()
    dag = tabu_learn_dag(data, k)
    order = topological_order(dag)
    result = backward_hill_climb(tree_from_dag(dag, order, data.cards), data)
    result.aux_dag = dag
    result.wall_time = time.perf_counter() - start
    return result
