import numpy as np
import pytest

import aepl


@pytest.fixture(scope="module")
def zero_noise():
    return aepl.generate_synthetic(classes=5, dim=8, per_class=20, spread=0.0, text_noise=0.0, seed=3)


def test_dataset_round_trip(tmp_path):
    ds = aepl.generate_synthetic(classes=4, dim=6, per_class=10, seed=2)
    assert (ds.n, ds.d, ds.c) == (40, 6, 4)
    path = tmp_path / "d.aepl"
    aepl.save_dataset(ds, str(path))
    back = aepl.load_dataset(str(path))
    assert back == ds
    np.testing.assert_array_equal(back.image_embeds, ds.image_embeds)
    assert ds.image_embeds.dtype == np.float32
    assert len(ds.train_indices()) + len(ds.test_indices()) == ds.n


def test_dataset_from_arrays():
    images = np.eye(3, dtype=np.float32)
    ds = aepl.Dataset(images, [0, 1, 2], images, ["a", "b", "c"], [0, 0, 1])
    assert ds.test_indices() == [2]
    with pytest.raises(aepl.DomainError):
        aepl.Dataset(images, [0, 1, 5], images, ["a", "b", "c"], [0, 0, 1])


def test_format_errors(tmp_path):
    path = tmp_path / "bad.aepl"
    path.write_bytes(b"NOPE" + bytes(20))
    with pytest.raises(aepl.FormatError):
        aepl.load_dataset(str(path))
    with pytest.raises(aepl.IoError):
        aepl.load_dataset(str(tmp_path / "missing.aepl"))
    assert issubclass(aepl.FormatError, aepl.Error)


def test_class_probs():
    w = np.array([[1.0, 0.0], [0.0, 1.0]])
    p = aepl.class_probs(w, [1.0, 0.0], tau=1.0)
    assert p[0] == pytest.approx(1 / (1 + np.exp(-1)), rel=1e-12)
    assert sum(p) == pytest.approx(1.0, abs=1e-12)


def test_kmeans_and_ari():
    rng = np.random.default_rng(0)
    x = np.vstack([rng.normal(c, 0.05, size=(10, 2)) for c in ([5, 0], [0, 5], [-5, -5])])
    truth = np.repeat([0, 1, 2], 10)
    res = aepl.kmeans(x, 3, metric="euclidean", seed=1)
    assert res["centroids"].shape == (3, 2)
    assert all(b <= a for a, b in zip(res["inertia_history"], res["inertia_history"][1:]))
    assert aepl.adjusted_rand_index(res["assignments"].tolist(), truth.tolist()) == 1.0
    assert aepl.adjusted_rand_index([0, 0, 1, 1], [0, 1, 0, 1]) == pytest.approx(-0.5)
    with pytest.raises(aepl.DomainError):
        aepl.kmeans(x, 3, metric="manhattan")


def test_selective_querying_saturates(zero_noise):
    reports = aepl.run_experiment(zero_noise, {"method": "cb_sq", "rounds": 3}, seed=1)
    assert [r["consumed"] for r in reports] == [5, 0, 0]
    assert all(r["accuracy"] == 1.0 for r in reports)
    assert all(r["pseudo_correct"] == 1.0 for r in reports)


def test_run_is_deterministic(zero_noise):
    cfg = {"method": "random", "rounds": 2, "train": {"epochs": 20}}
    a = aepl.run_experiment(zero_noise, cfg, seed=4)
    b = aepl.run_experiment(zero_noise, cfg, seed=4)
    strip = lambda rs: [{k: v for k, v in r.items() if k != "wall_time_s"} for r in rs]
    assert strip(a) == strip(b)


def test_bad_config(zero_noise):
    with pytest.raises(aepl.DomainError):
        aepl.run_experiment(zero_noise, {"methdo": "cb"})
    with pytest.raises(aepl.DomainError):
        aepl.run_experiment(zero_noise, {"rounds": 1000})


def test_suite(zero_noise):
    rows, summary = aepl.run_suite(
        zero_noise, {"method": ["random", "cb"], "rounds": 2, "seeds": [1, 2]}, jobs=2
    )
    assert len(rows) == 2 * 2 * 2
    assert {r["method"] for r in rows} == {"random", "cb"}
    assert summary.startswith("method,guidance")
    assert len(summary.strip().splitlines()) == 1 + 2 * 2
