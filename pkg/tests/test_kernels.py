import math

from hypothesis import given, settings, strategies as st
import numpy as np
import pytest

from kernel_sum_bounds.kernels import (Dataset, KernelSpec, eval_kernel, gram, labeled_gram,
                                       predict, radius_squared, sum_matrices, trace)

SPECS = [KernelSpec.rbf(0.7), KernelSpec.rbf(3.0), KernelSpec.linear(),
         KernelSpec.polynomial(2, 1.0), KernelSpec.polynomial(3, 0.5), KernelSpec.cosine()]


def test_eval_kernel_examples():
    assert eval_kernel(KernelSpec.linear(), [1, 2], [3, 4]) == 11
    assert eval_kernel(KernelSpec.rbf(0.3), [1.5, -2], [1.5, -2]) == 1
    assert eval_kernel(KernelSpec.cosine(), [1, 0], [0, 1]) == 0
    assert eval_kernel(KernelSpec.polynomial(2, 1.0), [1, 2], [3, 4]) == 144
    # exp(-|x - x'|^2 / (2 s^2)) with |x - x'|^2 = 2, s = 1
    assert eval_kernel(KernelSpec.rbf(1.0), [0, 0], [1, 1]) == pytest.approx(math.exp(-1))


def test_cosine_zero_vector():
    assert eval_kernel(KernelSpec.cosine(), [0, 0], [1, 2]) == 0.0


def test_eval_kernel_dimension_mismatch():
    with pytest.raises(ValueError):
        eval_kernel(KernelSpec.linear(), [1, 2], [1, 2, 3])


@pytest.mark.parametrize("kwargs", [
    {"family": "sigmoid"},
    {"family": "rbf"},
    {"family": "rbf", "bandwidth": -1.0},
    {"family": "linear", "bandwidth": 1.0},
    {"family": "polynomial", "degree": 0, "offset": 1.0},
    {"family": "polynomial", "degree": 2, "offset": -1.0},
])
def test_invalid_specs(kwargs):
    with pytest.raises(ValueError):
        KernelSpec(**kwargs)


def test_spec_dict_round_trip():
    for spec in SPECS:
        assert KernelSpec.from_dict(spec.to_dict()) == spec
    assert KernelSpec.from_dict({"family": "rbf", "bandwidth": 3.5}) == KernelSpec.rbf(3.5)
    assert KernelSpec.from_dict({"family": "polynomial"}) == KernelSpec.polynomial(2, 1.0)
    with pytest.raises(ValueError):
        KernelSpec.from_dict({"family": "linear", "width": 2})


def test_dataset_validation():
    with pytest.raises(ValueError):
        Dataset([[0.0], [1.0]], [1, 0])
    with pytest.raises(ValueError):
        Dataset([[0.0], [1.0]], [1])
    with pytest.raises(ValueError):
        Dataset([[np.nan]], [1])
    data = Dataset([[0.0, 1.0]], [1])
    assert (data.n, data.d) == (1, 2)
    with pytest.raises(ValueError):
        data.points[0, 0] = 5.0


def test_labeled_gram_examples():
    data = Dataset([[0.0], [1.0]], [1, -1])
    K = np.array([[1.0, 0.5], [0.5, 1.0]])
    assert np.array_equal(K * np.outer(data.labels, data.labels), [[1, -0.5], [-0.5, 1]])
    single = Dataset([[2.0, 1.0]], [-1])
    assert np.array_equal(labeled_gram(KernelSpec.linear(), single), [[5.0]])
    twins = Dataset([[0.3, 0.4], [0.3, 0.4]], [1, 1])
    assert np.array_equal(labeled_gram(KernelSpec.rbf(2.0), twins), np.ones((2, 2)))


def test_gram_matches_pointwise(rng):
    pts = rng.normal(size=(7, 3))
    pts[2] = 0.0
    data = Dataset(pts, np.ones(7))
    for spec in SPECS:
        K = gram(spec, data)
        slow = np.array([[eval_kernel(spec, a, b) for b in pts] for a in pts])
        np.testing.assert_allclose(K, slow, rtol=1e-12, atol=1e-12)
        assert np.array_equal(K, K.T)


def test_labeled_gram_psd_and_all_positive_labels(rng):
    for _ in range(20):
        n = int(rng.integers(2, 51))
        pts = rng.normal(size=(n, 4))
        y = rng.choice([-1.0, 1.0], size=n)
        data = Dataset(pts, y)
        mats = []
        for spec in SPECS:
            L = labeled_gram(spec, data)
            scale = max(1.0, np.abs(L).max())
            assert np.linalg.eigvalsh(L).min() >= -1e-10 * scale * n
            mats.append(L)
            assert trace(L) <= n * radius_squared([spec], data) * (1 + 1e-12)
            plus = labeled_gram(spec, Dataset(pts, np.ones(n)))
            assert np.array_equal(plus, gram(spec, data))
        S = sum_matrices(mats)
        assert np.linalg.eigvalsh(S).min() >= -1e-10 * np.abs(S).max() * n


def test_sum_matrices_examples():
    assert np.array_equal(sum_matrices([[[1.0]], [[2.0]]]), [[3.0]])
    I = np.eye(2)
    assert np.array_equal(sum_matrices([I]), I)
    assert np.array_equal(sum_matrices([I, np.ones((2, 2))]), [[2, 1], [1, 2]])
    with pytest.raises(ValueError):
        sum_matrices([])
    with pytest.raises(ValueError):
        sum_matrices([np.eye(2), np.eye(3)])


def test_trace_examples():
    assert trace([[1, -0.5], [-0.5, 1]]) == 2
    assert trace(np.eye(5)) == 5
    A, B = np.diag([1.0, 2.0]), np.diag([3.0, 4.0])
    assert trace(sum_matrices([A, B])) == trace(A) + trace(B)


def test_radius_squared_examples():
    data = Dataset([[1.0, 0.0], [3.0, 0.0]], [1, -1])
    assert radius_squared([KernelSpec.rbf(1.0), KernelSpec.rbf(5.0)], data) == 1
    assert radius_squared([KernelSpec.linear()], data) == 9
    assert radius_squared([KernelSpec.cosine()], data) == 1


def test_predict_examples():
    one = Dataset([[2.0]], [1])
    assert predict(one, [1.0], [KernelSpec.linear()], [3.0]) == 6
    assert predict(one, [0.0], [KernelSpec.linear()], [3.0]) == 0
    neg = Dataset([[0.5, 0.5]], [-1])
    assert predict(neg, [1.0], [KernelSpec.rbf(1.0)], [0.5, 0.5]) == -1
    with pytest.raises(ValueError):
        predict(one, [-1.0], [KernelSpec.linear()], [3.0])


finite = st.floats(-1e3, 1e3, allow_nan=False)


@settings(max_examples=200, deadline=None)
@given(st.lists(finite, min_size=3, max_size=3), st.lists(finite, min_size=3, max_size=3),
       st.floats(0.01, 100))
def test_kernel_ranges(x, x2, bandwidth):
    c = eval_kernel(KernelSpec.cosine(), x, x2)
    assert -1.0 <= c <= 1.0
    r = eval_kernel(KernelSpec.rbf(bandwidth), x, x2)
    assert 0.0 <= r <= 1.0
