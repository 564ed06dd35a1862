"""Learning sparse staged trees and asymmetry-labeled DAGs from categorical data."""

__version__ = "0.1.0"

from .aldag import (
    Aldag,
    DependenceSubtree,
    EdgeLabel,
    dependence_subtree,
    extract_parents,
    label_edge,
    to_dot,
    tree_to_aldag,
)
from .bnsearch import dag_bic, g2_test, pc_stable, tabu_learn_dag
from .dataset import (
    CategoricalDataset,
    VariableMeta,
    equal_frequency_discretize,
    joint_counts,
    load_csv,
)
from .graphs import Dag, MixedGraph, cpdag_of, directed_core, linear_extensions, topological_order
from .infotheo import conditional_mutual_information, empirical_entropy
from .learner import (
    LearnResult,
    Strategy,
    StrategyKind,
    backward_hill_climb,
    cmi_select_parents,
    init_tree,
    learn,
    lv_pipeline,
)
from .sim import SimConfig, kendall_tau, random_staged_tree, run_grid, sample_dataset
from .stagedtree import (
    FittedStages,
    LevelStaging,
    StagedTree,
    bic,
    fit,
    log_likelihood,
    merge_stages,
    tree_from_dag,
)

__all__ = [
    "Aldag", "DependenceSubtree", "EdgeLabel", "dependence_subtree", "extract_parents",
    "label_edge", "to_dot", "tree_to_aldag",
    "dag_bic", "g2_test", "pc_stable", "tabu_learn_dag",
    "CategoricalDataset", "VariableMeta", "equal_frequency_discretize", "joint_counts",
    "load_csv",
    "Dag", "MixedGraph", "cpdag_of", "directed_core", "linear_extensions", "topological_order",
    "conditional_mutual_information", "empirical_entropy",
    "LearnResult", "Strategy", "StrategyKind", "backward_hill_climb", "cmi_select_parents",
    "init_tree", "learn", "lv_pipeline",
    "SimConfig", "kendall_tau", "random_staged_tree", "run_grid", "sample_dataset",
    "FittedStages", "LevelStaging", "StagedTree", "bic", "fit", "log_likelihood",
    "merge_stages", "tree_from_dag",
]
