import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from coral_ordinal.core import RankSpec
from coral_ordinal.data import (
    Dataset,
    DataFormatError,
    SplitPlan,
    Standardizer,
    generate_synthetic,
    load_csv,
    normalize,
    split,
    write_csv,
)


def _dataset(n, d=2, K=3, seed=0):
    rng = np.random.default_rng(seed)
    return Dataset(rng.normal(size=(n, d)), rng.integers(1, K + 1, size=n), RankSpec.from_k(K))


@pytest.mark.parametrize(
    "text,match",
    [
        ("1.0,2.0,1\n1.0,2\n", "line 2: expected 3 columns"),
        ("1.0,abc,1\n", "line 1, column 2"),
        ("1.0,2.0,x\n", "line 1, column 3"),
        ("1.0,2.0,1.5\n", "line 1, column 3"),
        ("1.0,2.0,4\n", "line 1: label 4"),
        ("1.0,nan,1\n", "non-finite"),
        ("7\n", "line 1"),
        ("\n\n", "no examples"),
    ],
)
def test_csv_errors_name_the_location(tmp_path, text, match):
    p = tmp_path / "d.csv"
    p.write_text(text)
    with pytest.raises(DataFormatError, match=match):
        load_csv(p, 3)


def test_csv_header_and_blank_lines(tmp_path):
    p = tmp_path / "d.csv"
    p.write_text("a,b,rank\n\n1,2,3\n 4 , 5 , 1 \n")
    ds = load_csv(p, 3, header=True)
    assert ds.features.tolist() == [[1.0, 2.0], [4.0, 5.0]]
    assert ds.labels.tolist() == [3, 1]


def test_csv_round_trip_is_exact(tmp_path):
    ds = generate_synthetic(1, 40, 3, 4)
    write_csv(ds, tmp_path / "s.csv", header=True)
    back = load_csv(tmp_path / "s.csv", 4, header=True)
    np.testing.assert_array_equal(back.features, ds.features)
    np.testing.assert_array_equal(back.labels, ds.labels)
    assert not list(tmp_path.glob("*.tmp"))


@settings(max_examples=60)
@given(st.integers(3, 400), st.integers(0, 10**6))
def test_split_is_an_exact_partition(n, seed):
    ds = Dataset(np.arange(n, dtype=float)[:, None], np.ones(n, dtype=int), RankSpec.from_k(2))
    plan = SplitPlan(0.6, 0.2, 0.2, seed=seed)
    try:
        sizes = plan.sizes(n)
    except ValueError:
        return
    parts = split(ds, plan)
    ids = [p.features[:, 0].astype(int).tolist() for p in parts]
    assert [len(i) for i in ids] == list(sizes)
    merged = sorted(sum(ids, []))
    assert merged == list(range(n))


def test_default_plan_sizes():
    assert SplitPlan().sizes(2000) == (1400, 200, 400)


@pytest.mark.parametrize("fr", [(0.5, 0.5, 0.0), (0.7, 0.2, 0.2), (-0.1, 0.6, 0.5)])
def test_bad_split_fractions(fr):
    with pytest.raises(ValueError):
        SplitPlan(*fr)


def test_normalization_uses_train_statistics_only():
    tr = _dataset(50, seed=1)
    te = Dataset(tr.features[:5] + 100.0, tr.labels[:5], tr.spec)
    (ntr, nte), std = normalize(tr, te)
    mu, sd = tr.features.mean(axis=0), tr.features.std(axis=0)
    np.testing.assert_allclose(ntr.features.mean(axis=0), 0.0, atol=1e-14)
    np.testing.assert_allclose(ntr.features.std(axis=0), 1.0, rtol=1e-14)
    np.testing.assert_allclose(nte.features, (te.features - mu) / sd, rtol=1e-14)
    # refitting on a test set with different statistics would change nothing here
    (_, nte2), _ = normalize(tr, Dataset(te.features * 3, te.labels, te.spec))
    np.testing.assert_allclose(nte2.features, (te.features * 3 - mu) / sd, rtol=1e-14)


def test_population_variance_convention():
    std = Standardizer.fit(np.array([[0.0], [2.0], [4.0]]))
    # population sd of {0, 2, 4} is sqrt(8/3), not 2
    assert std.scale[0] == pytest.approx(np.sqrt(8 / 3), rel=1e-15)
    assert Standardizer.from_dict(std.to_dict()).transform([[4.0]])[0, 0] == std.transform([[4.0]])[0, 0]


def test_constant_feature_warns_once_per_fit():
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        Standardizer.fit(np.array([[1.0, 2.0], [1.0, 3.0]]))
    assert len(caught) == 1 and "[0]" in str(caught[0].message)


def test_synthetic_postconditions_at_benchmark_size():
    ds = generate_synthetic(0, 2000, 4, 6, 0.1)
    assert (ds.N, ds.d, ds.K) == (2000, 4, 6)
    assert sorted(set(ds.labels.tolist())) == [1, 2, 3, 4, 5, 6]
    Y = ds.extended_targets()
    assert np.all((Y.min(axis=0) == 0) & (Y.max(axis=0) == 1))
    assert np.all(np.abs(ds.features) <= 1.0)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10**6), st.integers(2, 8), st.integers(1, 6), st.floats(0.0, 2.0))
def test_synthetic_postconditions_hold_for_every_accepted_output(seed, K, d, noise):
    ds = generate_synthetic(seed, 10 * K, d, K, noise)
    assert np.unique(ds.labels).size == K
    Y = ds.extended_targets()
    assert np.all(Y.min(axis=0) == 0) and np.all(Y.max(axis=0) == 1)


def test_synthetic_seeds_differ():
    a = generate_synthetic(0, 100, 2, 3)
    b = generate_synthetic(1, 100, 2, 3)
    assert not np.array_equal(a.features, b.features)


@pytest.mark.parametrize("kw", [{"N": 29}, {"K": 1}, {"d": 0}, {"noise_sd": -1.0}])
def test_synthetic_argument_checks(kw):
    args = {"seed": 0, "N": 30, "d": 2, "K": 3, "noise_sd": 0.1, **kw}
    with pytest.raises(ValueError):
        generate_synthetic(**args)


def test_dataset_validation():
    spec = RankSpec.from_k(3)
    with pytest.raises(ValueError):
        Dataset(np.zeros((2, 1)), [1, 4], spec)
    with pytest.raises(ValueError):
        Dataset(np.zeros((2, 1)), [1], spec)
    with pytest.raises(ValueError):
        Dataset(np.array([[np.inf], [0.0]]), [1, 2], spec)
    ds = Dataset(np.zeros((2, 1)), [1, 2], spec)
    with pytest.raises(ValueError):
        ds.features[0, 0] = 1.0
