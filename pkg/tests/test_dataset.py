import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from aldaglearn.dataset import (
    CategoricalDataset,
    discretize_numeric_columns,
    encode_columns,
    equal_frequency_discretize,
    joint_counts,
    load_csv,
)
from aldaglearn.errors import DegenerateBinsError, EmptyDataError, MissingValueError, ParseError

from conftest import random_dataset


def write(tmp_path, text, name="d.csv"):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return path


def test_load_csv_direct_encoding(tmp_path):
    data = load_csv(write(tmp_path, "A,B\na,b\na,c\n"))
    assert data.n_rows == 2
    assert data.cards == (1, 2)
    assert data.codes.tolist() == [[0, 0], [0, 1]]
    assert data.names == ("A", "B")


def test_load_csv_matches_hand_built_table(tmp_path):
    text = "u,v,w\nyes,lo,off\nno,lo,on\nno,hi,on\nyes,hi,off\n"
    data = load_csv(write(tmp_path, text))
    # independent oracle: per-column first-appearance dictionaries
    rows = [line.split(",") for line in text.strip().splitlines()[1:]]
    expected = []
    maps = [{}, {}, {}]
    for row in rows:
        expected.append([maps[j].setdefault(s, len(maps[j])) for j, s in enumerate(row)])
    assert data.codes.tolist() == expected
    assert data.codes.tolist() == [[0, 0, 0], [1, 0, 1], [1, 1, 1], [0, 1, 0]]


def test_ternary_likert_recoding(tmp_path):
    # five-point answers recoded to three levels before loading
    recode = {1: "disagree", 2: "disagree", 3: "neither", 4: "agree", 5: "agree"}
    answers = [1, 3, 5, 2, 4, 3]
    text = "Fear\n" + "\n".join(recode[a] for a in answers) + "\n"
    data = load_csv(write(tmp_path, text))
    assert data.cards == (3,)
    assert data.variables[0].levels == ("disagree", "neither", "agree")


def test_load_csv_options(tmp_path):
    data = load_csv(write(tmp_path, "a;b\nc;d\n"), delimiter=";", has_header=False)
    assert data.names == ("X1", "X2")
    assert data.n_rows == 2


@pytest.mark.parametrize(
    "text, error",
    [
        ("A,B\na,b\na\n", ParseError),
        ("A,B\na,\n", MissingValueError),
        ("A,B\n", EmptyDataError),
    ],
)
def test_load_csv_errors(tmp_path, text, error):
    with pytest.raises(error):
        load_csv(write(tmp_path, text))


def test_decode_round_trip(tmp_path):
    text = "A,B,C\nx,1,q\ny,2,q\nx,3,r\n"
    data = load_csv(write(tmp_path, text))
    assert data.decode() == [line.split(",") for line in text.strip().splitlines()[1:]]


def test_discretize_median_split():
    assert equal_frequency_discretize([1, 2, 3, 4, 5, 6], 2).tolist() == [0, 0, 0, 1, 1, 1]


def test_discretize_left_closed_ties():
    # median of (1,1,1,2) is 1; values <= 1 fall in the first bin
    assert equal_frequency_discretize([1, 1, 1, 2], 2).tolist() == [0, 0, 0, 1]


def test_discretize_age_dichotomy():
    ages = [19, 23, 25, 31, 34, 40, 45, 52, 60, 67]
    bins = equal_frequency_discretize(ages, 2)
    assert np.bincount(bins).tolist() == [5, 5]


def test_discretize_degenerate():
    with pytest.raises(DegenerateBinsError):
        equal_frequency_discretize([1, 1, 1], 2)


@given(st.lists(st.integers(0, 30), min_size=4, max_size=60), st.integers(2, 4))
def test_discretize_bin_balance(values, bins):
    if len(set(values)) < bins:
        return
    idx = equal_frequency_discretize(values, bins)
    bounds = np.quantile(values, np.arange(1, bins) / bins)
    for v, b in zip(values, idx):
        # smallest bin whose upper boundary is >= v
        assert b == sum(1 for q in bounds if q < v)


def test_discretize_numeric_columns():
    data = encode_columns(["age", "sex"], [[str(a), s] for a, s in
                                         zip([20, 30, 40, 50], ["m", "f", "m", "f"])])
    out = discretize_numeric_columns(data, 2)
    assert out.variables[0].levels == ("q1", "q2")
    assert out.codes[:, 0].tolist() == [0, 0, 1, 1]
    assert out.variables[1].levels == ("m", "f")
    # levels follow bin order, not first appearance
    desc = encode_columns(["age"], [["50"], ["40"], ["30"], ["20"]])
    out = discretize_numeric_columns(desc, 2)
    assert out.variables[0].levels == ("q1", "q2")
    assert out.codes[:, 0].tolist() == [1, 1, 0, 0]


def test_joint_counts_empty_vars():
    data = CategoricalDataset.from_codes([[0, 1], [1, 1], [1, 0]])
    table = joint_counts(data, ())
    assert table.shape == () and int(table) == 3


def test_joint_counts_uniform():
    data = CategoricalDataset.from_codes([[0, 0], [0, 1], [1, 0], [1, 1]])
    assert joint_counts(data, (0, 1)).tolist() == [[1, 1], [1, 1]]


def test_joint_counts_brute_force():
    rng = np.random.default_rng(3)
    data = random_dataset(rng, 50, (2, 3, 2))
    table = joint_counts(data, (2, 0, 1))
    oracle = np.zeros((2, 2, 3), dtype=int)
    for x2 in range(2):
        for x0 in range(2):
            for x1 in range(3):
                oracle[x2, x0, x1] = sum(
                    1 for r in data.codes.tolist() if (r[2], r[0], r[1]) == (x2, x0, x1)
                )
    assert np.array_equal(table, oracle)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000), st.integers(1, 40))
def test_joint_counts_marginal_consistency(seed, n):
    rng = np.random.default_rng(seed)
    data = random_dataset(rng, n, (2, 3, 2, 2))
    full = joint_counts(data, (0, 1, 3))
    assert full.sum() == n
    assert np.array_equal(full.sum(axis=1), joint_counts(data, (0, 3)))
    assert np.array_equal(full.sum(axis=(0, 2)), joint_counts(data, (1,)))
