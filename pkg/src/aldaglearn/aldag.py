"""Conversion of staged trees to asymmetry-labeled DAGs (ALDAGs), plus DOT export.

Labels are read from the staging alone, never from fitted probabilities:
two cells share a distribution exactly when they share a stage.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from itertools import combinations, product
from typing import Sequence

import numpy as np

from .graphs import Dag, VariableOrder
from .stagedtree import LevelStaging, StagedTree


class EdgeLabel(str, enum.Enum):
    CONTEXT = "context"
    PARTIAL = "partial"
    CONTEXT_PARTIAL = "context_partial"
    LOCAL = "local"
    TOTAL = "total"


EDGE_COLORS = {
    EdgeLabel.CONTEXT: "red",
    EdgeLabel.PARTIAL: "blue",
    EdgeLabel.CONTEXT_PARTIAL: "violet",
    EdgeLabel.LOCAL: "green",
    EdgeLabel.TOTAL: "black",
}

# fill colours for stages in dependence-subtree drawings
STAGE_PALETTE = (
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b",
    "#e377c2", "#7f7f7f", "#bcbd22", "#17becf", "#aec7e8", "#ffbb78",
)


@dataclass(frozen=True)
class Aldag:
    dag: Dag
    labels: dict
    order: VariableOrder
    names: tuple[str, ...] | None = None

    def __post_init__(self):
        if set(self.labels) != set(self.dag.edges):
            raise ValueError("labels must cover exactly the DAG's edges")
        pos = {v: k for k, v in enumerate(self.order)}
        if any(pos[j] > pos[i] for j, i in self.dag.edges):
            raise ValueError("DAG is not consistent with the order")

    def label_counts(self) -> dict[str, int]:
        counts = {lab.value: 0 for lab in EdgeLabel}
        for lab in self.labels.values():
            counts[lab.value] += 1
        return counts

    def total_nontotal(self) -> tuple[int, int]:
        n_total = sum(1 for lab in self.labels.values() if lab is EdgeLabel.TOTAL)
        return n_total, len(self.labels) - n_total


def _reduce_level(level: LevelStaging, cards: Sequence[int]) -> tuple[tuple[int, ...], np.ndarray]:
    """Drop context variables the staging is invariant to.

    Returns the surviving context variables (in tree order) and the stage
    array over them.
    """
    arr = level.stage_array(cards)
    keep = []
    for axis, var in enumerate(level.context_vars):
        first = np.take(arr, [0], axis=axis)
        if not np.array_equal(arr, np.broadcast_to(first, arr.shape)):
            keep.append(axis)
    index = tuple(slice(None) if ax in keep else 0 for ax in range(arr.ndim))
    return tuple(level.context_vars[ax] for ax in keep), arr[index]


def extract_parents(tree: StagedTree) -> list[tuple[int, ...]]:
    """Minimal parent set of each level, indexed by tree position."""
    return [_reduce_level(lev, tree.cards)[0] for lev in tree.levels]


def reduced_staging(tree: StagedTree, variable: int) -> tuple[tuple[int, ...], np.ndarray]:
    """Parents of ``variable`` and its stage array over their configurations."""
    return _reduce_level(tree.levels[tree.level_of(variable)], tree.cards)


def _label_from_array(stages: np.ndarray, axis: int) -> EdgeLabel:
    card_j = stages.shape[axis]
    rows = np.moveaxis(stages, axis, -1).reshape(-1, card_j)
    context = partial = False
    for row in rows:
        distinct = len(set(row.tolist()))
        if distinct == 1:
            context = True
        elif card_j > 2 and distinct < card_j:
            partial = True
    if context and partial:
        return EdgeLabel.CONTEXT_PARTIAL
    if context:
        return EdgeLabel.CONTEXT
    if partial:
        return EdgeLabel.PARTIAL
    cells = [(c, x, int(rows[c, x])) for c in range(rows.shape[0]) for x in range(card_j)]
    for (_, x1, s1), (_, x2, s2) in combinations(cells, 2):
        if s1 == s2 and x1 != x2:
            return EdgeLabel.LOCAL
    return EdgeLabel.TOTAL


def label_edge(tree: StagedTree, j: int, i: int) -> EdgeLabel:
    """Dependence class of the edge ``j -> i`` of the tree's ALDAG.

    ``context``: within some configuration of the other parents the stage
    does not depend on ``x_j``. ``partial``: within some configuration it is
    constant on a proper subset of at least two values of ``x_j`` (only
    possible for more than two levels). ``local``: neither, but two cells
    with different ``x_j`` share a stage. ``total`` otherwise.
    """
    parents, stages = reduced_staging(tree, i)
    if j not in parents:
        raise ValueError(f"{j} is not a parent of {i} in the tree's ALDAG")
    return _label_from_array(stages, parents.index(j))


def tree_to_aldag(tree: StagedTree, names: Sequence[str] | None = None) -> Aldag:
    edges = []
    labels = {}
    for lev in tree.levels:
        parents, stages = _reduce_level(lev, tree.cards)
        for axis, j in enumerate(parents):
            edges.append((j, lev.variable))
            labels[(j, lev.variable)] = _label_from_array(stages, axis)
    return Aldag(Dag(tree.p, edges), labels, tree.order, tuple(names) if names else None)


@dataclass(frozen=True)
class DependenceSubtree:
    """Staged subtree over one variable's parents, in tree order.

    Node ``()`` is the root; a node is a tuple of parent values of some
    prefix length. Leaf-level nodes (full parent configurations) carry the
    variable's stage as their colour class.
    """

    variable: int
    parents: tuple[int, ...]
    parent_cards: tuple[int, ...]
    stage_of: tuple[int, ...]

    def nodes(self) -> list[tuple[int, ...]]:
        out = [()]
        for depth in range(1, len(self.parents) + 1):
            out.extend(product(*(range(c) for c in self.parent_cards[:depth])))
        return out

    def leaves(self) -> list[tuple[int, ...]]:
        return list(product(*(range(c) for c in self.parent_cards)))

    def color_of(self, leaf: tuple[int, ...]) -> int:
        if not self.parents:
            return self.stage_of[0]
        return self.stage_of[int(np.ravel_multi_index(leaf, self.parent_cards))]

    @property
    def n_colors(self) -> int:
        return len(set(self.stage_of))


def dependence_subtree(tree: StagedTree, variable: int) -> DependenceSubtree:
    parents, stages = reduced_staging(tree, variable)
    return DependenceSubtree(
        variable,
        parents,
        tuple(tree.cards[j] for j in parents),
        tuple(int(s) for s in stages.ravel()),
    )


def _quote(s: str) -> str:
    return '"' + str(s).replace("\\", "\\\\").replace('"', '\\"') + '"'


def to_dot(a: Aldag, names: Sequence[str] | None = None) -> str:
    """DOT digraph with one coloured, labelled edge per ALDAG edge."""
    names = list(names or a.names or [f"X{v + 1}" for v in range(a.dag.p)])
    lines = ["digraph ALDAG {"]
    for v in a.order:
        lines.append(f"  {_quote(names[v])};")
    pos = {v: k for k, v in enumerate(a.order)}
    for j, i in sorted(a.dag.edges, key=lambda e: (pos[e[0]], pos[e[1]])):
        lab = a.labels[(j, i)]
        lines.append(
            f"  {_quote(names[j])} -> {_quote(names[i])} "
            f'[color={EDGE_COLORS[lab]}, label="{lab.value}"];'
        )
    lines.append("}")
    return "\n".join(lines) + "\n"


def subtree_to_dot(sub: DependenceSubtree, names: Sequence[str], levels=None) -> str:
    """DOT drawing of a dependence subtree; leaf-level nodes filled by stage.

    ``levels`` optionally gives level names per variable for edge labels.
    """
    def node_id(node):
        return "n" + "_".join(["r", *map(str, node)])

    title = f"subtree of {names[sub.variable]}"
    lines = [f"digraph {_quote(title)} {{", "  rankdir=LR;"]
    for node in sub.nodes():
        attrs = ["shape=circle", 'label=""']
        if len(node) == len(sub.parents):
            color = STAGE_PALETTE[sub.color_of(node) % len(STAGE_PALETTE)]
            attrs += ["style=filled", f'fillcolor="{color}"']
        lines.append(f"  {node_id(node)} [{', '.join(attrs)}];")
    for node in sub.nodes()[1:]:
        var = sub.parents[len(node) - 1]
        value = node[-1]
        text = levels[var][value] if levels else str(value)
        lines.append(
            f"  {node_id(node[:-1])} -> {node_id(node)} "
            f"[label={_quote(f'{names[var]}={text}')}];"
        )
    lines.append("}")
    return "\n".join(lines) + "\n"

