"""Random staged-tree generation, ancestral sampling and the evaluation grid.

Every grid cell draws from its own ``numpy`` generator seeded by
``(seed, config index, repetition)``, so results do not depend on how cells
are scheduled across workers.
"""

from __future__ import annotations

import csv
import io
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from itertools import combinations
from typing import Iterable, Sequence

import numpy as np

from .aldag import tree_to_aldag
from .bnsearch import dag_bic, tabu_learn_dag
from .dataset import CategoricalDataset
from .graphs import VariableOrder, topological_order
from .learner import Strategy, learn, lv_pipeline
from .stagedtree import LevelStaging, StagedTree

CSV_SCHEMA = "aldaglearn-sim/1"
ESTIMATORS = ("dag", "lv", "cmi", "ord1", "ord2", "ord3", "all")
CSV_COLUMNS = (
    "config", "p", "k", "t", "n", "rep", "estimator", "k_learn", "status",
    "bic", "kendall_tau", "kendall_tau_norm", "n_edges_total", "n_edges_nontotal",
    "order", "true_order",
)


@dataclass(frozen=True)
class SimConfig:
    p: int
    k: int
    t: int
    n: int
    reps: int = 20
    seed: int = 0
    cards: tuple[int, ...] | None = None

    def __post_init__(self):
        if self.p < 1 or self.k < 1 or self.t < 1 or self.reps < 1:
            raise ValueError("p, k, t and reps must all be at least 1")
        if self.n < 0:
            raise ValueError("n must be nonnegative")
        cards = (2,) * self.p if self.cards is None else tuple(int(c) for c in self.cards)
        if len(cards) != self.p:
            raise ValueError("one cardinality per variable is required")
        object.__setattr__(self, "cards", cards)


@dataclass(frozen=True, eq=False)
class SimModel:
    """A staged tree together with the stage distributions that generate data."""

    tree: StagedTree
    probs: tuple[np.ndarray, ...]

    def same_as(self, other: "SimModel") -> bool:
        return self.tree == other.tree and all(
            np.array_equal(a, b) for a, b in zip(self.probs, other.probs)
        )


def random_staged_tree(config: SimConfig, rng: np.random.Generator) -> SimModel:
    """Random k-parents staged tree in the identity order.

    The variable at position ``i`` gets ``min(k, i)`` predecessors drawn
    uniformly as context, a uniformly random surjection of its context
    cells onto ``min(t, cells)`` stages, and flat-Dirichlet stage
    distributions.
    """
    cards = config.cards
    levels = []
    probs = []
    for i in range(config.p):
        ctx = tuple(sorted(int(v) for v in rng.choice(i, size=min(config.k, i), replace=False)))
        n_cells = math.prod(cards[v] for v in ctx)
        n_stages = min(config.t, n_cells)
        while True:
            assignment = rng.integers(n_stages, size=n_cells)
            if np.unique(assignment).size == n_stages:
                break
        levels.append(LevelStaging.from_assignment(i, ctx, assignment.tolist()))
        probs.append(rng.dirichlet(np.ones(cards[i]), size=n_stages))
    tree = StagedTree(tuple(range(config.p)), cards, tuple(levels))
    return SimModel(tree, tuple(probs))


def sample_dataset(model: SimModel, n: int, rng: np.random.Generator, names=None) -> CategoricalDataset:
    """Draw ``n`` rows by ancestral sampling along the tree order."""
    tree = model.tree
    codes = np.zeros((n, tree.p), dtype=np.int64)
    for lev, probs in zip(tree.levels, model.probs):
        shape = tuple(tree.cards[v] for v in lev.context_vars)
        if shape:
            cell = np.ravel_multi_index(tuple(codes[:, v] for v in lev.context_vars), shape)
        else:
            cell = np.zeros(n, dtype=np.int64)
        stage = np.asarray(lev.stage_of, dtype=np.int64)[cell]
        cum = np.cumsum(probs, axis=1)[stage]
        u = rng.random(n)
        x = (u[:, None] >= cum).sum(axis=1)
        codes[:, lev.variable] = np.minimum(x, tree.cards[lev.variable] - 1)
    return CategoricalDataset.from_codes(codes, cards=tree.cards, names=names)


def kendall_tau(a: Sequence[int], b: Sequence[int]) -> int:
    """Number of pairs ordered differently by the two permutations."""
    if len(a) != len(b) or sorted(a) != sorted(b):
        raise ValueError("orders must be permutations of the same items")
    pos_a = {v: k for k, v in enumerate(a)}
    pos_b = {v: k for k, v in enumerate(b)}
    return sum(
        1 for u, v in combinations(a, 2)
        if (pos_a[u] - pos_a[v]) * (pos_b[u] - pos_b[v]) < 0
    )


def run_estimator(name: str, data: CategoricalDataset, k: int):
    """Fit one estimator; returns ``(bic, order, (n_total, n_nontotal))``."""
    if name == "dag":
        g = tabu_learn_dag(data, k)
        return dag_bic(g, data), topological_order(g), (len(g.edges), 0)
    if name == "lv":
        res = lv_pipeline(data, k)
    elif name in ESTIMATORS:
        res = learn(data, Strategy(name, k))
    else:
        raise ValueError(f"unknown estimator {name!r}")
    return res.bic, res.order_used, tree_to_aldag(res.tree).total_nontotal()


def _run_cell(args) -> list[dict]:
    cfg_index, cfg, rep, estimators, k_learn = args
    rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, cfg_index, rep]))
    model = random_staged_tree(cfg, rng)
    raw = sample_dataset(model, cfg.n, rng)
    perm = rng.permutation(cfg.p)
    data = raw.select_columns(perm.tolist())
    inverse = np.argsort(perm)
    true_order: VariableOrder = tuple(int(inverse[v]) for v in model.tree.order)
    rows = []
    for k in k_learn or (cfg.k,):
        for name in estimators:
            row = {
                "config": cfg_index, "p": cfg.p, "k": cfg.k, "t": cfg.t, "n": cfg.n,
                "rep": rep, "estimator": name, "k_learn": k, "true_order": true_order,
            }
            start = time.perf_counter()
            try:
                score, order, (n_total, n_nontotal) = run_estimator(name, data, k)
            except Exception as exc:  # noqa: BLE001 - recorded per row, grid continues
                row.update(status=f"failed:{type(exc).__name__}", bic=math.nan,
                           kendall_tau=-1, kendall_tau_norm=math.nan,
                           n_edges_total=-1, n_edges_nontotal=-1, order=())
            else:
                tau = kendall_tau(order, true_order)
                pairs = cfg.p * (cfg.p - 1) // 2
                row.update(status="ok", bic=score, kendall_tau=tau,
                           kendall_tau_norm=tau / pairs if pairs else 0.0,
                           n_edges_total=n_total, n_edges_nontotal=n_nontotal,
                           order=tuple(order))
            row["wall_time"] = time.perf_counter() - start
            rows.append(row)
    return rows


def run_grid(
    grid: Iterable[SimConfig],
    estimators: Sequence[str],
    k_learn: Sequence[int] | None = None,
    jobs: int = 1,
) -> list[dict]:
    """Evaluate every estimator on every (config, repetition) cell.

    Rows come back in grid order: config, repetition, learning k,
    estimator. ``k_learn`` defaults to each config's own ``k``.
    """
    grid = list(grid)
    if not grid:
        raise ValueError("grid must not be empty")
    for name in estimators:
        if name not in ESTIMATORS:
            raise ValueError(f"unknown estimator {name!r}")
    cells = [
        (ci, cfg, rep, tuple(estimators), tuple(k_learn) if k_learn else None)
        for ci, cfg in enumerate(grid)
        for rep in range(cfg.reps)
    ]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            parts = list(pool.map(_run_cell, cells))
    else:
        parts = [_run_cell(c) for c in cells]
    return [row for part in parts for row in part]


def _fmt(value) -> str:
    if isinstance(value, tuple):
        return " ".join(str(v) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def results_to_csv(rows: Sequence[dict]) -> str:
    """Deterministic CSV of the result rows (timings excluded)."""
    buf = io.StringIO()
    buf.write(f"# schema: {CSV_SCHEMA}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for row in rows:
        writer.writerow([_fmt(row[c]) for c in CSV_COLUMNS])
    return buf.getvalue()


def timings_to_csv(rows: Sequence[dict]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(("config", "rep", "estimator", "k_learn", "wall_time"))
    for row in rows:
        writer.writerow((row["config"], row["rep"], row["estimator"], row["k_learn"],
                         f"{row['wall_time']:.6f}"))
    return buf.getvalue()


def read_results_csv(text: str) -> list[dict]:
    lines = [ln for ln in text.splitlines() if not ln.startswith("#")]
    return list(csv.DictReader(lines))
