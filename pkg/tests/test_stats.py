"""Tests for random streams and empirical-distribution helpers."""

import numpy as np
import pytest

from random_billiards.stats import (
    EmpiricalDistribution,
    RandomStream,
    ks_distance,
    make_stream,
    sample_cosine_direction,
    sample_gaussian,
    tv_distance,
)


def test_stream_reproducible():
    a = make_stream(42).uniforms(100)
    b = make_stream(42).uniforms(100)
    assert np.array_equal(a, b)


def test_stream_seed_sensitivity():
    a = make_stream(1).uniforms(50)
    b = make_stream(2).uniforms(50)
    assert not np.array_equal(a, b)


def test_fork_independent_of_parent_position():
    # the child stream must not depend on how much the parent consumed
    parent1 = make_stream(7)
    child_before = parent1.fork(3).uniforms(10)
    parent2 = make_stream(7)
    parent2.uniforms(1000)
    child_after = parent2.fork(3).uniforms(10)
    assert np.array_equal(child_before, child_after)


def test_fork_children_distinct():
    parent = make_stream(7)
    seen = [tuple(parent.fork(k).uniforms(4)) for k in range(20)]
    assert len(set(seen)) == 20


def test_nested_forks_distinct():
    s = make_stream(0)
    a = s.fork(0).fork(1).uniforms(5)
    b = s.fork(1).fork(0).uniforms(5)
    assert not np.array_equal(a, b)


def test_stream_seed_validation():
    with pytest.raises(ValueError):
        RandomStream(-1)
    with pytest.raises(ValueError):
        RandomStream(2**64)
    with pytest.raises(ValueError):
        make_stream(3).fork(-1)


def test_uniforms_range():
    u = make_stream(5).uniforms(10000)
    assert u.shape == (10000,)
    assert np.all((u >= 0.0) & (u < 1.0))


def test_gaussian_moments():
    x = sample_gaussian(make_stream(11), 2.0, 3.0, size=200_000)
    assert abs(x.mean() - 2.0) < 0.03
    assert abs(x.std() - 3.0) < 0.03


def test_gaussian_zero_stddev():
    assert sample_gaussian(make_stream(0), 1.5, 0.0) == 1.5
    arr = sample_gaussian(make_stream(0), -2.0, 0.0, size=4)
    assert np.all(arr == -2.0)
    with pytest.raises(ValueError):
        sample_gaussian(make_stream(0), 0.0, -1.0)


def test_gaussian_scalar_matches_vector_law():
    s = make_stream(9)
    xs = np.array([sample_gaussian(s, 0.0, 1.0) for _ in range(20000)])
    from scipy.special import ndtr

    assert ks_distance(xs, ndtr) < 0.012


def test_cosine_direction_planar():
    s = make_stream(13)
    vecs = np.array([sample_cosine_direction(s, 1) for _ in range(40000)])
    norms = np.linalg.norm(vecs, axis=1)
    assert np.allclose(norms, 1.0, atol=1e-12)
    assert np.all(vecs[:, -1] > 0)
    # sin(theta) = first component is uniform on (-1, 1) under the cosine law
    assert ks_distance(vecs[:, 0], lambda t: 0.5 * (np.asarray(t) + 1.0)) < 0.012


def test_cosine_direction_spatial():
    s = make_stream(14)
    vecs = np.array([sample_cosine_direction(s, 2) for _ in range(40000)])
    assert np.allclose(np.linalg.norm(vecs, axis=1), 1.0, atol=1e-12)
    assert np.all(vecs[:, -1] > 0)
    # sin^2(theta) uniform on (0, 1); E[cos theta] = 2/3
    sin2 = vecs[:, 0] ** 2 + vecs[:, 1] ** 2
    assert ks_distance(sin2, lambda t: np.asarray(t)) < 0.012
    assert abs(vecs[:, -1].mean() - 2.0 / 3.0) < 0.005
    with pytest.raises(ValueError):
        sample_cosine_direction(s, 3)


def test_empirical_normalizes():
    d = EmpiricalDistribution([0.0, 1.0, 2.0], [3.0, 1.0])
    assert np.allclose(d.masses, [0.75, 0.25])


def test_empirical_validation():
    with pytest.raises(ValueError):
        EmpiricalDistribution([0.0, 0.0, 1.0], [1.0, 1.0])
    with pytest.raises(ValueError):
        EmpiricalDistribution([0.0, 1.0], [-1.0])
    with pytest.raises(ValueError):
        EmpiricalDistribution([0.0, 1.0], [0.0])
    with pytest.raises(ValueError):
        EmpiricalDistribution([0.0, 1.0], [1.0, 2.0])


def test_from_samples_clips_to_end_bins():
    d = EmpiricalDistribution.from_samples([-5.0, 0.5, 1.5, 99.0], [0.0, 1.0, 2.0])
    assert np.allclose(d.masses, [0.5, 0.5])


def test_from_density_midpoint():
    d = EmpiricalDistribution.from_density(lambda x: 2.0 * x, np.linspace(0, 1, 201))
    mids = 0.5 * (d.edges[:-1] + d.edges[1:])
    assert np.allclose(d.masses, 2.0 * mids * 0.005 / (2.0 * mids * 0.005).sum())


def test_tv_distance():
    p = EmpiricalDistribution([0, 1, 2], [1.0, 0.0])
    q = EmpiricalDistribution([0, 1, 2], [0.0, 1.0])
    assert tv_distance(p, q) == 1.0
    assert tv_distance(p, p) == 0.0
    r = EmpiricalDistribution([0, 1, 3], [1.0, 0.0])
    with pytest.raises(ValueError):
        tv_distance(p, r)


def test_ks_distance_exact_small_case():
    # two samples at the quartiles of U(0,1): max gap is at the second point
    stat = ks_distance([0.25, 0.75], lambda t: np.asarray(t))
    assert abs(stat - 0.25) < 1e-12


def test_ks_distance_rejects_bad_cdf():
    with pytest.raises(ValueError):
        ks_distance([0.1, 0.2], lambda t: -np.asarray(t))
    with pytest.raises(ValueError):
        ks_distance([], lambda t: np.asarray(t))


def test_ks_distance_seeded_uniform_loop():
    for seed in range(5):
        u = make_stream(seed).uniforms(5000)
        assert ks_distance(u, lambda t: np.clip(np.asarray(t), 0, 1)) < 0.03
