import numpy as np
import pytest

from cloudmatch import (
    LabeledPointCloud,
    MdsConfig,
    PointCloud,
    ValidationError,
    default_sigma,
    density_profile,
    fps_sample,
    gen_two_density,
    mds_sample,
    pds_sample,
)


def collinear(xs):
    return np.array([[x, 0.0, 0.0] for x in xs])


def mds_oracle_step(pts, selected, sigma):
    dens = np.zeros(len(pts))
    for j in selected:
        dens += np.exp(-((pts - pts[j]) ** 2).sum(axis=1) / (2 * sigma**2))
    dens[list(selected)] = np.inf
    return int(np.argmin(dens))


def test_mds_hand_case():
    res = mds_sample(collinear([0, 1, 2]), 2, MdsConfig(sigma=1.0, first_point=0))
    assert res.indices.tolist() == [0, 2]


def test_mds_base_case_and_exhaustion():
    pts = collinear([0, 1, 2, 3])
    assert mds_sample(pts, 1, MdsConfig(sigma=1.0)).indices.tolist() == [0]
    full = mds_sample(pts, 4, MdsConfig(sigma=1.0))
    assert sorted(full.indices.tolist()) == [0, 1, 2, 3]


def test_mds_matches_greedy_oracle_stepwise():
    rng = np.random.default_rng(0)
    for trial in range(10):
        n = int(rng.integers(5, 300))
        if trial % 2 == 0:
            pts = rng.random((n, 3))
        else:
            pts = rng.integers(0, 4, size=(n, 3)).astype(float)  # tie-rich
        sigma = 0.3
        m = int(rng.integers(2, n + 1))
        res = mds_sample(pts, m, MdsConfig(sigma=sigma, first_point=0))
        selected = [0]
        for i in range(1, m):
            expect = mds_oracle_step(pts, selected, sigma)
            assert res.indices[i] == expect
            selected.append(expect)


def test_mds_validation():
    pts = collinear([0, 1])
    with pytest.raises(ValidationError):
        mds_sample(pts, 0)
    with pytest.raises(ValidationError):
        mds_sample(pts, 3)
    with pytest.raises(ValidationError):
        mds_sample(pts, 1, MdsConfig(sigma=-1.0))
    with pytest.raises(ValidationError):
        mds_sample(pts, 1, MdsConfig(first_point=5))


def test_fps_hand_cases():
    pts = collinear([0, 1, 2, 10])
    assert fps_sample(pts, 2, first_point=0).indices.tolist() == [0, 3]
    assert fps_sample(pts, 3, first_point=0).indices.tolist() == [0, 3, 2]
    assert sorted(fps_sample(pts, 4).indices.tolist()) == [0, 1, 2, 3]


def test_pds_exhaustion_and_determinism():
    cloud = gen_two_density(50, 100, seed=1)
    full = pds_sample(cloud, 150, seed=2)
    assert sorted(full.indices.tolist()) == list(range(150))
    r1 = pds_sample(cloud, 60, seed=3)
    r2 = pds_sample(cloud, 60, seed=3)
    assert np.array_equal(r1.indices, r2.indices)
    assert r1.radius == r2.radius


def test_pds_separation_brute_force():
    cloud = gen_two_density(100, 200, seed=4)
    res = pds_sample(cloud, 120, seed=5)
    assert len(res) == 120
    sel = cloud.points[res.indices]
    d = np.sqrt(((sel[:, None, :] - sel[None, :, :]) ** 2).sum(axis=2))
    np.fill_diagonal(d, np.inf)
    assert d.min() >= res.radius


def test_pds_with_duplicates():
    pts = np.zeros((10, 3))
    pts[5:] = 1.0
    res = pds_sample(pts, 7, seed=0)
    assert len(set(res.indices.tolist())) == 7


def test_all_samplers_return_distinct_valid_indices():
    rng = np.random.default_rng(6)
    pts = rng.random((80, 3))
    for res in (
        mds_sample(pts, 30, MdsConfig(sigma=0.1)),
        fps_sample(pts, 30),
        pds_sample(pts, 30, seed=1),
    ):
        idx = res.indices
        assert len(idx) == 30
        assert len(set(idx.tolist())) == 30
        assert idx.min() >= 0 and idx.max() < 80


def test_density_profile_hand_cases():
    sigma = 0.4
    single = density_profile(collinear([1.0]), [0], sigma)
    assert single.tolist() == [0.0]
    pts = collinear([0.0, sigma * np.sqrt(2.0)])
    pair = density_profile(pts, [0, 1], sigma)
    assert np.abs(pair - np.exp(-1.0)).max() <= 1e-12


def test_density_profile_grid_symmetry():
    xs, ys = np.meshgrid(np.arange(5.0), np.arange(5.0))
    pts = np.column_stack([xs.ravel(), ys.ravel(), np.zeros(25)])
    dens = density_profile(pts, np.arange(25), sigma=1.0)
    # symmetry orbits of the 5x5 grid share a density value
    def at(r, c):
        return dens[5 * r + c]

    for orbit in ([(1, 1), (1, 3), (3, 1), (3, 3)], [(1, 2), (2, 1), (2, 3), (3, 2)]):
        vals = [at(r, c) for r, c in orbit]
        assert np.ptp(vals) <= 1e-9


def test_mds_labels_ride_along():
    cloud = LabeledPointCloud(
        gen_two_density(20, 40, seed=7).points, [0] * 20 + [1] * 40
    )
    res = mds_sample(cloud, 30, MdsConfig(sigma=0.1))
    # selection refers to source indices, so labels stay paired by index
    assert cloud.labels[res.indices].shape == (30,)


def test_default_sigma_positive():
    assert default_sigma(gen_two_density(20, 20, seed=0)) > 0
    assert default_sigma(np.zeros((5, 3))) == 1.0
    assert default_sigma(PointCloud([[0, 0, 0]])) == 1.0


def test_mds_uniformity_beats_random_subsample():
    # density CV of MDS below uniform-random subsampling, averaged over seeds
    wins = 0
    seeds = range(12)
    for seed in seeds:
        cloud = gen_two_density(200, 400, seed=seed)
        res = mds_sample(cloud, 400, MdsConfig(sigma=0.05))
        rng = np.random.default_rng(seed + 10_000)
        rand_idx = rng.choice(600, size=400, replace=False)
        d_mds = density_profile(cloud, res, 0.05)
        d_rand = density_profile(cloud, rand_idx, 0.05)
        if d_mds.std() / d_mds.mean() < d_rand.std() / d_rand.mean():
            wins += 1
    assert wins == len(list(seeds))
