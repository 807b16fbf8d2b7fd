import math

import numpy as np
import pytest

from rieszforge.geometry import (
    Circle,
    Configuration,
    FlatTorus,
    Sphere2,
    SphericalShell,
    UnitCube,
    equally_spaced_circle,
    triangular_lattice_torus,
)

from conftest import min_image

ALL_MANIFOLDS = [
    Circle(1.0),
    Circle(2.5),
    Sphere2(1.0),
    Sphere2(0.7),
    SphericalShell(0.55, 1.0),
    UnitCube(1),
    UnitCube(2),
    UnitCube(3),
    FlatTorus((1.0, 1.0)),
    FlatTorus((0.5, 2.0, 1.0)),
]


@pytest.mark.parametrize("man", ALL_MANIFOLDS, ids=lambda m: repr(m))
def test_samples_live_on_the_manifold(man):
    cfg = man.sample_uniform(200, seed=1)
    assert cfg.n == 200
    assert cfg.points.shape == (200, man.ambient_dim)
    assert cfg.intrinsic_dim == man.intrinsic_dim
    assert np.max(man.membership_violation(cfg.points)) < 1e-12


@pytest.mark.parametrize("man", ALL_MANIFOLDS, ids=lambda m: repr(m))
def test_sampling_is_deterministic_per_seed(man):
    a = man.sample_uniform(64, seed=42).points
    b = man.sample_uniform(64, seed=42).points
    c = man.sample_uniform(64, seed=43).points
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)


@pytest.mark.parametrize("man", ALL_MANIFOLDS, ids=lambda m: repr(m))
def test_sampling_is_nested_across_sizes(man):
    # the first m points of a larger draw equal the size-m draw, which is
    # what makes Monte Carlo covering estimates monotone in the sample count
    small = man.sample_uniform(37, seed=5).points
    large = man.sample_uniform(300, seed=5).points
    assert np.array_equal(small, large[:37])


def test_measures_and_diameters():
    assert Circle(1.0).hausdorff_measure == pytest.approx(2.0 * math.pi, rel=1e-15)
    assert Circle(2.0).diameter == pytest.approx(4.0)
    assert Sphere2(1.0).hausdorff_measure == pytest.approx(4.0 * math.pi, rel=1e-15)
    assert Sphere2(3.0).diameter == pytest.approx(6.0)
    shell = SphericalShell(0.55, 1.0)
    assert shell.hausdorff_measure == pytest.approx(
        4.0 / 3.0 * math.pi * (1.0 - 0.55**3), rel=1e-15
    )
    assert shell.diameter == pytest.approx(2.0)
    assert UnitCube(3).hausdorff_measure == 1.0
    assert UnitCube(3).diameter == pytest.approx(math.sqrt(3.0))
    torus = FlatTorus((0.5, 2.0))
    assert torus.hausdorff_measure == pytest.approx(1.0)


@pytest.mark.parametrize("man", ALL_MANIFOLDS, ids=lambda m: repr(m))
def test_diameter_dominates_sampled_distances(man):
    pts = man.sample_uniform(150, seed=0).points
    d = min_image(pts[:, None, :] - pts[None, :, :], man.periodic_box)
    dist = np.sqrt((d * d).sum(axis=-1))
    assert float(dist.max()) <= man.diameter + 1e-12


@pytest.mark.parametrize("man", ALL_MANIFOLDS, ids=lambda m: repr(m))
def test_projection_lands_on_the_manifold_and_is_idempotent(man):
    rng = np.random.default_rng(7)
    cloud = rng.normal(scale=1.3, size=(100, man.ambient_dim))
    proj = man.project(cloud)
    assert np.max(man.membership_violation(proj)) < 1e-12
    again = man.project(proj)
    assert np.allclose(proj, again, rtol=0.0, atol=1e-14)


def test_tangent_projection_is_orthogonal_on_curved_manifolds():
    for man in (Circle(1.0), Sphere2(1.0)):
        cfg = man.sample_uniform(50, seed=3)
        g = np.random.default_rng(4).normal(size=cfg.points.shape)
        tg = man.tangent_project(cfg.points, g)
        dots = (tg * cfg.points).sum(axis=1)
        assert np.max(np.abs(dots)) < 1e-12 * man.radius
        # projecting twice changes nothing
        assert np.allclose(man.tangent_project(cfg.points, tg), tg, atol=1e-14)


def test_tangent_projection_is_identity_in_full_dimensional_interiors():
    shell = SphericalShell(0.55, 1.0)
    cube = UnitCube(2)
    rng = np.random.default_rng(9)
    inner = shell.sample_uniform(40, seed=2).points
    keep = (np.linalg.norm(inner, axis=1) > 0.6) & (np.linalg.norm(inner, axis=1) < 0.95)
    inner = inner[keep]
    g = rng.normal(size=inner.shape)
    assert np.array_equal(shell.tangent_project(inner, g), g)
    mid = 0.25 + 0.5 * rng.random((40, 2))
    g2 = rng.normal(size=mid.shape)
    assert np.array_equal(cube.tangent_project(mid, g2), g2)


def test_constructor_validation():
    with pytest.raises(ValueError):
        Circle(0.0)
    with pytest.raises(ValueError):
        Sphere2(-1.0)
    with pytest.raises(ValueError):
        SphericalShell(1.0, 0.55)
    with pytest.raises(ValueError):
        UnitCube(4)
    with pytest.raises(ValueError):
        FlatTorus((1.0, -2.0))


def test_equally_spaced_circle_geometry():
    for n in (4, 9, 128):
        cfg = equally_spaced_circle(n)
        assert cfg.n == n
        assert np.allclose(np.linalg.norm(cfg.points, axis=1), 1.0, atol=1e-15)
        d = cfg.points[:, None, :] - cfg.points[None, :, :]
        dist = np.sqrt((d * d).sum(axis=-1))
        dist[np.diag_indices(n)] = np.inf
        assert float(dist.min()) == pytest.approx(2.0 * math.sin(math.pi / n), rel=1e-14)


def test_equally_spaced_circle_respects_radius():
    cfg = equally_spaced_circle(10, radius=2.5)
    assert np.allclose(np.linalg.norm(cfg.points, axis=1), 2.5, atol=1e-14)


def test_triangular_lattice_torus_closes_exactly():
    for m in (2, 4, 16):
        torus, cfg = triangular_lattice_torus(m)
        assert cfg.n == 2 * m * m
        sides = np.asarray(torus.periodic_box)
        assert float(np.prod(sides)) == pytest.approx(1.0, rel=1e-14)
        assert sides[1] / sides[0] == pytest.approx(math.sqrt(3.0), rel=1e-14)
        a = 3.0 ** (-0.25) / m
        d = min_image(cfg.points[:, None, :] - cfg.points[None, :, :], sides)
        dist = np.sqrt((d * d).sum(axis=-1))
        dist[np.diag_indices(cfg.n)] = np.inf
        assert float(dist.min()) == pytest.approx(a, rel=1e-12)
        if m >= 3:
            # six nearest neighbors per site, the signature of a triangular
            # lattice (at m=2 the two in-row neighbors are one wrapped point)
            near = (dist <= a * (1.0 + 1e-9)).sum(axis=1)
            assert np.all(near == 6)


def test_triangular_lattice_rejects_bad_size():
    with pytest.raises(ValueError):
        triangular_lattice_torus(0)


def test_configuration_basics():
    pts = np.zeros((5, 3))
    pts[:, 0] = np.arange(5.0)
    cfg = Configuration(pts, 2)
    assert cfg.n == 5
    assert cfg.intrinsic_dim == 2
