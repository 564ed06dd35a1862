"""Staged trees over a variable order, with ML fitting and BIC scoring.

Each level stores its staging over a *reduced* context: the product space
of ``context_vars`` (a subset of the preceding variables) rather than the
full prefix space. Predecessors outside ``context_vars`` cannot change a
vertex's stage, so both views describe the same model.

Stage ids at a level run over ``0 .. n_stages - 1``. Stagings built here are
kept in canonical form: ids numbered by first appearance in row-major
context order.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .dataset import CategoricalDataset, joint_counts
from .errors import InvalidMergeError, OrderMismatchError
from .graphs import Dag, VariableOrder

SCHEMA_VERSION = 1


def canonical_stages(assignment: Sequence) -> tuple[int, ...]:
    """Relabel stages (any hashable labels) as ints by order of first appearance."""
    relabel: dict = {}
    return tuple(relabel.setdefault(s, len(relabel)) for s in assignment)


@dataclass(frozen=True)
class LevelStaging:
    variable: int
    context_vars: tuple[int, ...]
    stage_of: tuple[int, ...]
    n_stages: int

    def __post_init__(self):
        object.__setattr__(self, "context_vars", tuple(int(v) for v in self.context_vars))
        object.__setattr__(self, "stage_of", tuple(int(s) for s in self.stage_of))
        if set(self.stage_of) != set(range(self.n_stages)):
            raise ValueError(
                f"stage ids of variable {self.variable} must cover 0..{self.n_stages - 1}"
            )

    @classmethod
    def from_assignment(cls, variable, context_vars, assignment) -> "LevelStaging":
        stages = canonical_stages(assignment)
        return cls(variable, tuple(context_vars), stages, len(set(stages)))

    def stage_array(self, cards: Sequence[int]) -> np.ndarray:
        """Stage ids as an array with one axis per context variable."""
        shape = tuple(cards[v] for v in self.context_vars)
        return np.asarray(self.stage_of, dtype=np.int64).reshape(shape)


@dataclass(frozen=True)
class StagedTree:
    order: VariableOrder
    cards: tuple[int, ...]
    levels: tuple[LevelStaging, ...]

    def __post_init__(self):
        order = tuple(int(v) for v in self.order)
        object.__setattr__(self, "order", order)
        object.__setattr__(self, "cards", tuple(int(c) for c in self.cards))
        object.__setattr__(self, "levels", tuple(self.levels))
        if sorted(order) != list(range(len(self.cards))):
            raise ValueError("order must be a permutation of the variables")
        if len(self.levels) != len(order):
            raise ValueError("one level per variable is required")
        seen: set[int] = set()
        for v, lev in zip(order, self.levels):
            if lev.variable != v:
                raise ValueError(f"level for {lev.variable} found where {v} expected")
            if not set(lev.context_vars) <= seen:
                raise ValueError(f"context of variable {v} contains non-predecessors")
            if len(set(lev.context_vars)) != len(lev.context_vars):
                raise ValueError(f"duplicate context variables for {v}")
            n_cells = math.prod(self.cards[c] for c in lev.context_vars)
            if len(lev.stage_of) != n_cells:
                raise ValueError(f"staging of variable {v} must have {n_cells} cells")
            seen.add(v)

    @property
    def p(self) -> int:
        return len(self.order)

    def level_of(self, variable: int) -> int:
        return self.order.index(variable)

    def n_params(self) -> int:
        return sum(lev.n_stages * (self.cards[lev.variable] - 1) for lev in self.levels)

    def with_level(self, position: int, level: LevelStaging) -> "StagedTree":
        levels = list(self.levels)
        levels[position] = level
        return StagedTree(self.order, self.cards, tuple(levels))


@dataclass(frozen=True, eq=False)
class FittedStages:
    """Per level, an (n_stages, card) count matrix and its row-normalised MLE.

    Stages that received no rows have NaN probabilities.
    """

    counts: tuple[np.ndarray, ...]
    probs: tuple[np.ndarray, ...]
    n: int

    def undefined_stages(self, position: int) -> list[int]:
        return [int(s) for s in np.flatnonzero(self.counts[position].sum(axis=1) == 0)]


def tree_from_dag(g: Dag, order: VariableOrder, cards: Sequence[int]) -> StagedTree:
    """Saturated staged tree embedding exactly the DAG's independences."""
    order = tuple(order)
    pos = {v: k for k, v in enumerate(order)}
    if len(order) != g.p or any(pos[j] > pos[i] for j, i in g.edges):
        raise OrderMismatchError(f"{order} is not a topological order of the DAG")
    levels = []
    for v in order:
        ctx = tuple(sorted(g.parents(v), key=pos.__getitem__))
        n_cells = math.prod(cards[c] for c in ctx)
        levels.append(LevelStaging(v, ctx, tuple(range(n_cells)), n_cells))
    return StagedTree(order, tuple(cards), tuple(levels))


def level_cell_counts(data: CategoricalDataset, level: LevelStaging) -> np.ndarray:
    """(context cells, child levels) counts in row-major context order."""
    table = joint_counts(data, (*level.context_vars, level.variable))
    return table.reshape(-1, data.cards[level.variable])


def stage_counts(cell_counts: np.ndarray, stage_of: Sequence[int], n_stages: int) -> np.ndarray:
    out = np.zeros((n_stages, cell_counts.shape[1]), dtype=np.int64)
    np.add.at(out, np.asarray(stage_of, dtype=np.int64), cell_counts)
    return out


def _normalise(counts: np.ndarray) -> np.ndarray:
    totals = counts.sum(axis=1, keepdims=True).astype(float)
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.where(totals > 0, counts / totals, np.nan)


def fit(tree: StagedTree, data: CategoricalDataset) -> FittedStages:
    if data.cards != tree.cards:
        raise ValueError("dataset cardinalities do not match the tree")
    counts = tuple(
        stage_counts(level_cell_counts(data, lev), lev.stage_of, lev.n_stages)
        for lev in tree.levels
    )
    return FittedStages(counts, tuple(_normalise(c) for c in counts), data.n_rows)


def counts_loglik(counts: np.ndarray) -> float:
    """sum n(s, x) ln p(x | s) for one level, with 0 ln 0 = 0."""
    counts = np.asarray(counts, dtype=float)
    totals = counts.sum(axis=1, keepdims=True)
    mask = counts > 0
    ratio = np.divide(counts, totals, out=np.ones_like(counts), where=mask)
    return float((counts[mask] * np.log(ratio[mask])).sum())


def log_likelihood(fitted: FittedStages) -> float:
    return float(sum(counts_loglik(c) for c in fitted.counts))


def bic(tree: StagedTree, fitted: FittedStages, n: int) -> float:
    """-2 loglik + d ln n with d = sum over levels of n_stages * (card - 1)."""
    if n < 1:
        raise ValueError("n must be positive")
    return -2.0 * log_likelihood(fitted) + tree.n_params() * math.log(n)


def score(tree: StagedTree, data: CategoricalDataset) -> float:
    """BIC of ``tree`` fitted to ``data``."""
    return bic(tree, fit(tree, data), data.n_rows)


def merge_stages(tree: StagedTree, level: int, s1: int, s2: int) -> StagedTree:
    """Join stage ``s2`` into ``s1`` at position ``level``.

    The result is renumbered canonically, so the ids of surviving stages
    may change.
    """
    lev = tree.levels[level]
    if s1 == s2 or not (0 <= s1 < lev.n_stages and 0 <= s2 < lev.n_stages):
        raise InvalidMergeError(
            f"cannot merge stages {s1} and {s2} at level {level} ({lev.n_stages} stages)"
        )
    merged = [s1 if s == s2 else s for s in lev.stage_of]
    return tree.with_level(
        level, LevelStaging.from_assignment(lev.variable, lev.context_vars, merged)
    )


def route(tree: StagedTree, row: Sequence[int]) -> list[int]:
    """Stage visited at every level by one data row."""
    out = []
    for lev in tree.levels:
        shape = tuple(tree.cards[v] for v in lev.context_vars)
        cell = int(np.ravel_multi_index(tuple(row[v] for v in lev.context_vars), shape)) if shape else 0
        out.append(lev.stage_of[cell])
    return out


# --- JSON -------------------------------------------------------------------

MODEL_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["schema_version", "order", "cards", "levels"],
    "properties": {
        "schema_version": {"const": SCHEMA_VERSION},
        "names": {"type": "array", "items": {"type": "string"}},
        "order": {"type": "array", "items": {"type": "integer", "minimum": 0}},
        "cards": {"type": "array", "items": {"type": "integer", "minimum": 1}},
        "levels": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["variable", "context_vars", "stage_of", "n_stages"],
                "properties": {
                    "variable": {"type": "integer", "minimum": 0},
                    "context_vars": {"type": "array", "items": {"type": "integer"}},
                    "stage_of": {"type": "array", "items": {"type": "integer", "minimum": 0}},
                    "n_stages": {"type": "integer", "minimum": 1},
                    "probs": {
                        "type": "array",
                        "items": {
                            "anyOf": [
                                {"type": "null"},
                                {"type": "array", "items": {"type": "number"}},
                            ]
                        },
                    },
                },
            },
        },
    },
}


def tree_to_dict(tree: StagedTree, fitted: FittedStages | None = None, names=None, **extra) -> dict:
    levels = []
    for k, lev in enumerate(tree.levels):
        entry = {
            "variable": lev.variable,
            "context_vars": list(lev.context_vars),
            "stage_of": list(lev.stage_of),
            "n_stages": lev.n_stages,
        }
        if fitted is not None:
            entry["probs"] = [
                None if np.isnan(row).any() else [float(x) for x in row]
                for row in fitted.probs[k]
            ]
        levels.append(entry)
    out = {"schema_version": SCHEMA_VERSION}
    if names is not None:
        out["names"] = list(names)
    out.update(order=list(tree.order), cards=list(tree.cards), levels=levels)
    out.update(extra)
    return out


def tree_from_dict(d: dict) -> tuple[StagedTree, list[np.ndarray] | None]:
    """Inverse of ``tree_to_dict``; also returns stage probabilities if stored."""
    cards = tuple(d["cards"])
    levels = tuple(
        LevelStaging(e["variable"], tuple(e["context_vars"]), tuple(e["stage_of"]), e["n_stages"])
        for e in d["levels"]
    )
    tree = StagedTree(tuple(d["order"]), cards, levels)
    probs = None
    if all("probs" in e for e in d["levels"]):
        probs = []
        for e in d["levels"]:
            card = cards[e["variable"]]
            probs.append(
                np.array(
                    [[np.nan] * card if row is None else row for row in e["probs"]], dtype=float
                )
            )
    return tree, probs


def validate_model_dict(d: dict) -> None:
    import jsonschema

    jsonschema.validate(d, MODEL_SCHEMA)
    tree_from_dict(d)


def dumps(d: dict) -> str:
    return json.dumps(d, indent=2, sort_keys=False) + "\n"
