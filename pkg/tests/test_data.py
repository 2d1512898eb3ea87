import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lightyear.data import (
    CsvSchema,
    DatasetError,
    LabelError,
    LabeledDataset,
    MissingFileError,
    NegativeLabelError,
    NonNumericFeatureError,
    PartitionConfig,
    PartitionError,
    RaggedRowError,
    gen_gaussian_task,
    load_csv,
    partition,
    partition_dirichlet,
    partition_feature_shift,
    shift_group,
    split_three_way,
)
from lightyear.nn import ModelSpec, OptimHyper, OptimizerState, init_params, train_local
from lightyear.metrics import accuracy


def test_balanced_classes():
    data = gen_gaussian_task(3, 4, 300, 2.0, seed=0)
    assert list(data.class_counts()) == [100, 100, 100]


def test_task_is_deterministic():
    a = gen_gaussian_task(4, 3, 50, 1.0, seed=9)
    b = gen_gaussian_task(4, 3, 50, 1.0, seed=9)
    assert np.array_equal(a.features, b.features) and np.array_equal(a.labels, b.labels)


def test_well_separated_task_is_learnable():
    data = gen_gaussian_task(3, 2, 600, 10.0, seed=1)
    train, _, test = split_three_way(data, seed=0)
    p = init_params(ModelSpec((2, 3)), 0)
    opt = OptimizerState.fresh(p.spec, OptimHyper(learning_rate=0.01, momentum=0.9, weight_decay=0.0))
    for epoch in range(10):
        p, opt = train_local(p, opt, train, seed=epoch)
    assert accuracy(p, test) > 0.95


def multiset(datasets):
    return sorted(i for d in datasets for i in d.index.tolist())


@given(st.integers(0, 10_000), st.sampled_from([0.1, 0.5, 5.0]))
@settings(max_examples=25, deadline=None)
def test_dirichlet_is_a_partition(seed, alpha):
    data = gen_gaussian_task(5, 3, 400, 1.0, seed=seed)
    shards = partition_dirichlet(data, PartitionConfig(n_clients=6, dirichlet_alpha=alpha), seed)
    assert multiset(shards) == list(range(data.n))
    assert min(s.n for s in shards) >= 10


def test_huge_alpha_matches_global_histogram():
    data = gen_gaussian_task(4, 3, 4000, 1.0, seed=0)
    shards = partition_dirichlet(data, PartitionConfig(n_clients=8, dirichlet_alpha=1e6), seed=0)
    for s in shards:
        assert np.abs(s.class_counts() / s.n - 0.25).max() < 0.05


def test_small_alpha_produces_dominant_class():
    # observed max class share at alpha=0.1 across seeds 0..9 is well above 0.6
    data = gen_gaussian_task(10, 10, 4000, 1.0, seed=0)
    for seed in range(10):
        shards = partition_dirichlet(data, PartitionConfig(n_clients=8, dirichlet_alpha=0.1), seed)
        assert max(s.class_counts().max() / s.n for s in shards) > 0.6


def test_dirichlet_gives_up_when_shards_cannot_fill():
    data = gen_gaussian_task(2, 2, 30, 1.0, seed=0)
    with pytest.raises(PartitionError):
        partition_dirichlet(data, PartitionConfig(n_clients=4), seed=0)


def test_feature_shift_groups():
    assert shift_group(5) == [3, 4]
    data = gen_gaussian_task(3, 4, 500, 1.0, seed=0)
    cfg = PartitionConfig(n_clients=5, strategy="feature_shift_groups", group_rotation_deg=0.0, group_shift=0.0)
    shards = partition_feature_shift(data, cfg, seed=0)
    assert multiset(shards) == list(range(data.n))
    a = np.concatenate([shards[i].features for i in (0, 1, 2)])
    b = np.concatenate([shards[i].features for i in (3, 4)])
    se = np.sqrt(a.var(axis=0) / len(a) + b.var(axis=0) / len(b))
    assert np.all(np.abs(a.mean(axis=0) - b.mean(axis=0)) < 3 * se)


def test_rotation_by_180_flips_first_axis():
    n = 400
    features = np.zeros((n, 3))
    features[:, 0] = 1.0
    data = LabeledDataset(features, np.zeros(n, dtype=int), 2)
    cfg = PartitionConfig(n_clients=5, strategy="feature_shift_groups", group_rotation_deg=180.0)
    shards = partition(data, cfg, seed=1)
    for i in shift_group(5):
        assert np.allclose(shards[i].features.mean(axis=0), [-1.0, 0.0, 0.0], atol=1e-12)
    assert np.allclose(shards[0].features.mean(axis=0), [1.0, 0.0, 0.0])


@pytest.mark.parametrize("n,sizes", [(100, (70, 15, 15)), (101, (71, 15, 15))])
def test_split_sizes(n, sizes):
    data = gen_gaussian_task(2, 2, n, 1.0, seed=0)
    parts = split_three_way(data, (0.7, 0.15, 0.15), seed=0)
    assert tuple(p.n for p in parts) == sizes
    assert multiset(parts) == list(range(n))


def test_split_rejects_bad_fractions():
    data = gen_gaussian_task(2, 2, 100, 1.0, seed=0)
    with pytest.raises(ValueError):
        split_three_way(data, (0.5, 0.3, 0.3))


def test_partition_config_validation():
    with pytest.raises(ValueError):
        PartitionConfig(strategy="by_zip_code")
    with pytest.raises(ValueError):
        PartitionConfig(dirichlet_alpha=0.0)


def write(tmp_path, text, name="d.csv"):
    p = tmp_path / name
    p.write_text(text, encoding="utf-8")
    return p


def test_csv_roundtrip(tmp_path):
    p = write(tmp_path, "x1,x2,y\n0.5,1,0\n-2,3e-1,1\n1.0,2.0,1\n")
    d = load_csv(p, CsvSchema("y"))
    assert d.n == 3 and d.d == 2 and d.n_classes == 2
    assert np.allclose(d.features[1], [-2.0, 0.3])


def test_csv_sparse_labels(tmp_path):
    p = write(tmp_path, "a,label\n1,0\n2,2\n3,0\n")
    assert load_csv(p, CsvSchema("label")).n_classes == 3


def test_csv_column_selection(tmp_path):
    p = write(tmp_path, "a,b,c,y\n1,2,3,0\n4,5,6,1\n")
    d = load_csv(p, CsvSchema("y", ("c", "a")))
    assert np.array_equal(d.features, [[3, 1], [6, 4]])


@pytest.mark.parametrize(
    "text,err,line",
    [
        ("a,y\n1,0\n2\n", RaggedRowError, ":3:"),
        ("a,y\n1,0\nfoo,1\n", NonNumericFeatureError, ":3:"),
        ("a,y\n1,zero\n", LabelError, ":2:"),
        ("a,y\n1,1.5\n", LabelError, ":2:"),
        ("a,y\n1,-1\n", NegativeLabelError, ":2:"),
    ],
)
def test_csv_errors_name_line(tmp_path, text, err, line):
    with pytest.raises(err, match=line):
        load_csv(write(tmp_path, text), CsvSchema("y"))


def test_csv_missing_file_and_column(tmp_path):
    with pytest.raises(MissingFileError):
        load_csv(tmp_path / "nope.csv", CsvSchema("y"))
    with pytest.raises(DatasetError, match="label column"):
        load_csv(write(tmp_path, "a,b\n1,2\n"), CsvSchema("y"))
