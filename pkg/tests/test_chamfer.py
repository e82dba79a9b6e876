import numpy as np
import pytest

from cloudmatch import PointCloud, ValidationError, chamfer_distance


def chamfer_oracle(p1, p2, squared=False):
    d = np.sqrt(((p1[:, None, :] - p2[None, :, :]) ** 2).sum(axis=2))
    a = d.min(axis=1)
    b = d.min(axis=0)
    if squared:
        a, b = a * a, b * b
    return 0.5 * (a.mean() + b.mean())


def test_identity_is_zero():
    rng = np.random.default_rng(0)
    s = PointCloud(rng.random((37, 3)))
    assert chamfer_distance(s, s) == 0.0


def test_hand_cases():
    assert chamfer_distance([[0, 0, 0]], [[1, 0, 0]]) == 1.0
    # 1/2 * ((0 + 2)/2 + 0) = 0.5
    assert chamfer_distance([[0, 0, 0], [2, 0, 0]], [[0, 0, 0]]) == 0.5


def test_symmetry_and_oracle_on_random_pairs():
    rng = np.random.default_rng(1)
    for _ in range(100):
        n, m = rng.integers(1, 200, size=2)
        a = rng.random((n, 3))
        b = rng.random((m, 3))
        cd = chamfer_distance(a, b)
        assert abs(cd - chamfer_distance(b, a)) <= 1e-12
        assert abs(cd - chamfer_oracle(a, b)) <= 1e-12
        assert cd >= 0.0


def test_translation_invariance():
    rng = np.random.default_rng(2)
    a = rng.random((80, 3))
    b = rng.random((60, 3))
    base = chamfer_distance(a, b)
    for _ in range(10):
        t = rng.normal(size=3)
        assert abs(chamfer_distance(a + t, b + t) - base) <= 1e-9


def test_squared_variant():
    rng = np.random.default_rng(3)
    a = rng.random((30, 3))
    b = rng.random((40, 3))
    sq = chamfer_distance(a, b, squared=True)
    assert abs(sq - chamfer_oracle(a, b, squared=True)) <= 1e-12
    assert sq != chamfer_distance(a, b)


def test_empty_cloud_rejected():
    with pytest.raises(ValidationError):
        chamfer_distance(np.empty((0, 3)), [[0, 0, 0]])
