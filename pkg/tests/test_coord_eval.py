import threading

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hybridcd.coord_eval import build_cache, cache_nbytes, perturbed_loss
from hybridcd.model import Dataset, NetworkParams, generate_dataset, init_params, loss

from conftest import random_instance


def rebuilt_loss(params, data, r, j, delta):
    """Oracle: edit one coordinate and run the full forward pass."""
    W = params.W.copy()
    W[r, j] += delta
    return loss(NetworkParams(W, params.A), data)


def test_cache_zero_weights(backend):
    data = generate_dataset(4, 3, 0)
    params = NetworkParams(np.zeros((2, 3)), [0.5, -0.5])
    cache = build_cache(params, data, backend)
    assert np.all(cache.Z == 0) and np.all(cache.preds == 0)
    assert cache.base_loss == pytest.approx(0.5 * np.sum(data.labels ** 2), rel=1e-15)


def test_cache_matches_model_loss(rng, backend):
    for _ in range(10):
        params, data = random_instance(rng, 10, 20, 15)
        cache = build_cache(params, data, backend)
        assert cache.base_loss == pytest.approx(loss(params, data), rel=1e-12)
        rebuilt = params.scale * (params.A @ np.maximum(cache.Z, 0.0))
        np.testing.assert_allclose(rebuilt, cache.preds, rtol=1e-12)
        np.testing.assert_array_equal(cache.residuals, cache.preds - data.labels)


def test_cache_single_preactivation():
    params = NetworkParams([[0.3, -1.2, 2.0]], [1.0])
    data = Dataset([[0.5, 0.25, -0.75]], [0.1])
    cache = build_cache(params, data)
    assert cache.Z.shape == (1, 1)
    assert cache.Z[0, 0] == pytest.approx(0.3 * 0.5 + -1.2 * 0.25 + 2.0 * -0.75, rel=1e-15)


def test_cache_nbytes():
    params, data = init_params(7, 3, 0), generate_dataset(5, 3, 0)
    assert build_cache(params, data).nbytes == 8 * (7 * 5 + 2 * 5 + 1) == cache_nbytes(7, 5)


def test_cache_dimension_mismatch():
    with pytest.raises(ValueError):
        build_cache(init_params(2, 3, 0), generate_dataset(2, 4, 0))


def test_zero_delta_is_exact(rng, backend):
    params, data = random_instance(rng, 10, 20, 15)
    cache = build_cache(params, data, backend)
    for r in range(15):
        for j in range(0, 20, 3):
            assert perturbed_loss(cache, params, data, r, j, 0.0, backend) == cache.base_loss


def test_unused_feature_leaves_loss(backend):
    X = generate_dataset(5, 4, 1).features.copy()
    X[:, 2] = 0.0
    data = Dataset(X, generate_dataset(5, 4, 2).labels)
    params = init_params(3, 4, 3)
    cache = build_cache(params, data, backend)
    for delta in (-100.0, -0.5, 1e-9, 3.0, 1e6):
        assert perturbed_loss(cache, params, data, 1, 2, delta, backend) == cache.base_loss


def test_matches_rebuild_tiny(rng, backend):
    for _ in range(50):
        params, data = random_instance(rng, 2, 3, 2)
        cache = build_cache(params, data, backend)
        r, j = int(rng.integers(2)), int(rng.integers(3))
        delta = float(rng.normal(scale=2.0))
        want = rebuilt_loss(params, data, r, j, delta)
        assert perturbed_loss(cache, params, data, r, j, delta, backend) == pytest.approx(want, rel=1e-10)


def test_index_and_delta_validation():
    params, data = init_params(3, 4, 0), generate_dataset(2, 4, 0)
    cache = build_cache(params, data)
    for r, j in [(-1, 0), (3, 0), (0, -1), (0, 4)]:
        with pytest.raises(ValueError):
            perturbed_loss(cache, params, data, r, j, 0.1)
    with pytest.raises(ValueError):
        perturbed_loss(cache, params, data, 0, 0, float("nan"))


@settings(max_examples=200, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n=st.integers(1, 8), p=st.integers(1, 8),
       m=st.integers(1, 8), delta=st.floats(-50, 50), data_=st.data())
def test_incremental_equals_full(seed, n, p, m, delta, data_):
    params, data = init_params(m, p, seed), generate_dataset(n, p, seed + 1)
    r = data_.draw(st.integers(0, m - 1))
    j = data_.draw(st.integers(0, p - 1))
    cache = build_cache(params, data)
    full = rebuilt_loss(params, data, r, j, delta)
    assert abs(perturbed_loss(cache, params, data, r, j, delta) - full) <= 1e-10 * (1 + full)


def test_cache_not_mutated(rng, backend):
    params, data = random_instance(rng, 10, 8, 6)
    cache = build_cache(params, data, backend)
    before = [cache.Z.copy(), cache.preds.copy(), cache.residuals.copy(), cache.base_loss]
    for _ in range(200):
        perturbed_loss(cache, params, data, int(rng.integers(6)), int(rng.integers(8)),
                       float(rng.normal()), backend)
    assert cache.Z.tobytes() == before[0].tobytes()
    assert cache.preds.tobytes() == before[1].tobytes()
    assert cache.residuals.tobytes() == before[2].tobytes()
    assert cache.base_loss == before[3]
    assert not cache.Z.flags.writeable


def test_concurrent_readers_match_serial(rng, backend):
    params, data = random_instance(rng, 10, 8, 6)
    cache = build_cache(params, data, backend)
    probes = [(int(rng.integers(6)), int(rng.integers(8)), float(rng.normal())) for _ in range(400)]
    serial = [perturbed_loss(cache, params, data, r, j, d, backend) for r, j, d in probes]
    results = [None] * len(probes)

    def worker(start):
        for k in range(start, len(probes), 4):
            results[k] = perturbed_loss(cache, params, data, *probes[k], backend)

    threads = [threading.Thread(target=worker, args=(s,)) for s in range(4)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert results == serial
