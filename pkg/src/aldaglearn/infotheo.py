"""Plug-in (empirical) entropy and conditional mutual information, in nats."""

from __future__ import annotations

from typing import Iterable

import numpy as np

from .dataset import CategoricalDataset, joint_counts


_ZERO_TOL = 1e-12


def _entropy_of_counts(counts: np.ndarray) -> float:
    counts = np.asarray(counts, dtype=float).ravel()
    n = counts.sum()
    nz = counts[counts > 0]
    # sum n log n form keeps 0 ln 0 = 0 and is stable for large n
    return float(np.log(n) - (nz * np.log(nz)).sum() / n)


def empirical_entropy(data: CategoricalDataset, vars: Iterable[int]) -> float:
    """Joint entropy of ``vars`` under the empirical distribution."""
    key = tuple(sorted(int(v) for v in vars))
    cache_key = ("H", key)
    h = data._cache.get(cache_key)
    if h is None:
        if data.n_rows < 1:
            raise ValueError("entropy of an empty dataset is undefined")
        h = _entropy_of_counts(joint_counts(data, key)) if key else 0.0
        data._cache[cache_key] = h
    return h


def conditional_mutual_information(
    data: CategoricalDataset, a: int, b: int, c: Iterable[int] = ()
) -> float:
    """I(X_a; X_b | X_c) from empirical frequencies.

    Computed as H(a,c) + H(b,c) - H(a,b,c) - H(c). Values within rounding
    noise of zero are returned as exactly 0.0.
    """
    c = tuple(int(v) for v in c)
    if a == b or a in c or b in c:
        raise ValueError("a, b and c must be disjoint")
    value = (
        empirical_entropy(data, (a, *c))
        + empirical_entropy(data, (b, *c))
        - empirical_entropy(data, (a, b, *c))
        - empirical_entropy(data, c)
    )
    return 0.0 if value < _ZERO_TOL else value
