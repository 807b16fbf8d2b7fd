import math

import numpy as np
import pytest
import sympy
from scipy.integrate import quad

from rieszforge.geometry import Circle, Sphere2
from rieszforge.weights import (
    ConstRadius,
    HardCutoff,
    LogRadius,
    PairRadius,
    PolyCutoff,
    RieszParams,
    UniformDensity,
    ZPolyDensity,
)


def _sympy_poly_profile(k):
    """Independent derivative oracle for (1 - t^2)^k via symbolic calculus."""
    t = sympy.Symbol("t", positive=True)
    phi = (1 - t**2) ** k
    fns = [sympy.lambdify(t, sympy.diff(phi, t, order), "numpy") for order in range(3)]
    return fns


@pytest.mark.parametrize("k", [1, 2, 3, 5])
def test_poly_cutoff_matches_symbolic_derivatives(k):
    cut = PolyCutoff(k)
    phi_o, d1_o, d2_o = _sympy_poly_profile(k)
    t = np.linspace(0.01, 0.999, 211)
    phi, d1, d2 = cut.evaluate(t)
    assert np.allclose(phi, phi_o(t), rtol=1e-13, atol=1e-13)
    assert np.allclose(d1, d1_o(t), rtol=1e-13, atol=1e-13)
    assert np.allclose(d2, np.broadcast_to(d2_o(t), t.shape), rtol=1e-12, atol=1e-12)


def test_poly_cutoff_vanishes_beyond_one():
    cut = PolyCutoff(3)
    t = np.array([1.0, 1.0 + 1e-12, 2.0, 50.0])
    phi, d1, d2 = cut.evaluate(t)
    assert np.all(phi == 0.0)
    assert np.all(d1 == 0.0)
    assert np.all(d2 == 0.0)


def test_poly_cutoff_is_smooth_at_the_edge_for_k3():
    # value, slope and curvature all shrink like powers of (1 - t), so the
    # Hessian of the truncated kernel stays continuous across the cutoff
    cut = PolyCutoff(3)
    eps = 1e-6
    phi, d1, d2 = cut.evaluate(np.array([1.0 - eps]))
    assert abs(float(phi[0])) < 1e-16
    assert abs(float(d1[0])) < 1e-10
    assert abs(float(d2[0])) < 1e-4


def test_poly_cutoff_tends_to_one_at_zero():
    for k in (1, 3, 6):
        phi, _, _ = PolyCutoff(k).evaluate(np.array([1e-9]))
        assert float(phi[0]) == pytest.approx(1.0, abs=1e-8)


def test_hard_cutoff_is_the_closed_indicator():
    cut = HardCutoff()
    phi, d1, d2 = cut.evaluate(np.array([0.3, 1.0, 1.0 + 1e-15, 7.0]))
    assert phi.tolist() == [1.0, 1.0, 0.0, 0.0]
    assert np.all(d1 == 0.0) and np.all(d2 == 0.0)


def test_cutoff_argument_must_be_positive():
    for cut in (HardCutoff(), PolyCutoff(3)):
        with pytest.raises(ValueError):
            cut.evaluate(np.array([0.0, 0.5]))


def test_poly_cutoff_order_validation_and_smoothness_flag():
    with pytest.raises(ValueError):
        PolyCutoff(0)
    assert not PolyCutoff(1).has_smooth_hessian
    assert not PolyCutoff(2).has_smooth_hessian
    assert PolyCutoff(3).has_smooth_hessian
    assert not HardCutoff().has_smooth_hessian


def test_radius_schedules_follow_their_formulas():
    log = LogRadius(0.25, 3)
    assert log.value(500000) == pytest.approx(
        0.25 * math.log(500000) * 500000 ** (-1.0 / 3.0), rel=1e-15
    )
    assert log.sup_value(100) == log.value(100)
    const = ConstRadius(2.0, 2)
    assert const.value(10000) == pytest.approx(2.0 * 10000 ** (-0.5), rel=1e-15)
    assert const.diagnostic_only
    assert not log.diagnostic_only


def test_radius_schedule_validation():
    with pytest.raises(ValueError):
        LogRadius(0.0, 2)
    with pytest.raises(ValueError):
        ConstRadius(-1.0, 2)
    with pytest.raises(ValueError):
        LogRadius(1.0, 4)
    with pytest.raises(ValueError):
        LogRadius(1.0, 2).value(1)


def test_pair_radius_schedule():
    fn = lambda xi, xj, n: 0.1 + 0.05 * (xi[..., 0] + xj[..., 0]) ** 2
    sched = PairRadius(fn, lambda n: 0.4, 2)
    xi = np.array([[0.5, 0.0], [-0.5, 0.2]])
    xj = np.array([[-0.5, 0.1], [0.5, 0.0]])
    vals = sched.pair_values(xi, xj, 100)
    assert vals.shape == (2,)
    assert vals[0] == pytest.approx(0.1)
    # symmetric inputs swapped give the same radii
    assert np.allclose(sched.pair_values(xj, xi, 100), vals)
    assert sched.sup_value(100) == 0.4
    with pytest.raises(ValueError):
        sched.value(100)
    bad = PairRadius(lambda xi, xj, n: -1.0, lambda n: 1.0, 2)
    with pytest.raises(ValueError):
        bad.pair_values(xi, xj, 100)


def test_uniform_density_integrates_to_one():
    for man in (Circle(1.0), Sphere2(2.0)):
        dens = UniformDensity(man)
        assert dens.sigma_min == dens.sigma_max
        assert dens.sigma_min * man.hausdorff_measure == pytest.approx(1.0, rel=1e-15)
        pts = man.sample_uniform(10, seed=0).points
        assert np.all(dens.sigma(pts) == dens.sigma_min)
        assert np.all(dens.grad_sigma(pts) == 0.0)
        assert np.all(dens.hess_sigma(pts) == 0.0)


@pytest.mark.parametrize("a,b,radius", [(1.0, 1.0, 1.0), (2.0, -1.5, 1.0), (1.0, 3.0, 0.5)])
def test_zpoly_density_normalization_by_quadrature(a, b, radius):
    man = Sphere2(radius)
    dens = ZPolyDensity(man, a, b)
    # Archimedes: surface measure of the band [z, z+dz] is 2 pi R dz
    integral, err = quad(
        lambda z: float(dens.sigma(np.array([0.0, 0.0, z]))) * 2.0 * math.pi * radius,
        -radius,
        radius,
    )
    assert err < 1e-10
    assert integral == pytest.approx(1.0, abs=1e-12)


def test_zpoly_density_matches_the_stated_formula():
    # the target profile 3 (1 + z^2) / (16 pi) on the unit sphere
    dens = ZPolyDensity(Sphere2(1.0), 1.0, 1.0)
    for z in (-1.0, -0.3, 0.0, 0.8):
        x = np.array([math.sqrt(max(0.0, 1.0 - z * z)), 0.0, z])
        assert float(dens.sigma(x)) == pytest.approx(
            3.0 * (1.0 + z * z) / (16.0 * math.pi), rel=1e-14
        )
    assert dens.sigma_min == pytest.approx(3.0 / (16.0 * math.pi))
    assert dens.sigma_max == pytest.approx(6.0 / (16.0 * math.pi))


def test_zpoly_density_derivatives_match_finite_differences():
    dens = ZPolyDensity(Sphere2(1.0), 1.0, 2.0)
    rng = np.random.default_rng(11)
    x = rng.normal(size=(6, 3))
    h = 1e-6
    for p in x:
        g = dens.grad_sigma(p)
        hess = dens.hess_sigma(p)
        for axis in range(3):
            e = np.zeros(3)
            e[axis] = h
            fd = (float(dens.sigma(p + e)) - float(dens.sigma(p - e))) / (2 * h)
            assert fd == pytest.approx(float(g[axis]), abs=1e-8)
            fd_g = (dens.grad_sigma(p + e) - dens.grad_sigma(p - e)) / (2 * h)
            assert np.allclose(fd_g, hess[axis], atol=1e-8)


def test_zpoly_density_validation():
    with pytest.raises(ValueError):
        ZPolyDensity(Sphere2(1.0), 0.0, 1.0)
    with pytest.raises(ValueError):
        ZPolyDensity(Sphere2(1.0), 1.0, -1.0)
    with pytest.raises(ValueError):
        ZPolyDensity(Circle(1.0), 1.0, 1.0)


def test_riesz_params_weight_exponent_and_pair_weight():
    man = Sphere2(1.0)
    dens = ZPolyDensity(man, 1.0, 1.0)
    params = RieszParams(
        s=3.5, dim=2, radius=LogRadius(1.0, 2), density=dens, weight_mode="density"
    )
    assert params.weight_exponent == pytest.approx(3.5 / 4.0)
    pts = man.sample_uniform(20, seed=1).points
    w = params.pair_weight(pts[:10], pts[10:])
    direct = (dens.sigma(pts[:10]) * dens.sigma(pts[10:])) ** (-3.5 / 4.0)
    assert np.allclose(w, direct, rtol=1e-15)
    unit = RieszParams(s=3.5, dim=2, radius=LogRadius(1.0, 2))
    assert np.all(unit.pair_weight(pts[:10], pts[10:]) == 1.0)
    assert unit.log_weight_gradient(pts) is None


def test_log_weight_gradient_matches_finite_differences():
    man = Sphere2(1.0)
    dens = ZPolyDensity(man, 1.0, 1.0)
    params = RieszParams(
        s=4.0, dim=2, radius=LogRadius(1.0, 2), density=dens, weight_mode="density"
    )
    pts = man.sample_uniform(5, seed=2).points
    v = params.log_weight_gradient(pts)
    h = 1e-6
    y = np.array([0.1, -0.4, 0.9])  # arbitrary partner; v must not depend on it
    for i, p in enumerate(pts):
        for axis in range(3):
            e = np.zeros(3)
            e[axis] = h
            wp = params.pair_weight((p + e)[None], y[None]).item()
            wm = params.pair_weight((p - e)[None], y[None]).item()
            w0 = params.pair_weight(p[None], y[None]).item()
            fd = (wp - wm) / (2 * h * w0)
            assert fd == pytest.approx(float(v[i, axis]), abs=2e-6)


def test_riesz_params_validation_messages():
    with pytest.raises(ValueError, match="hypersingular regime required"):
        RieszParams(s=1.5, dim=2, radius=LogRadius(1.0, 2))
    with pytest.raises(ValueError, match="hypersingular regime required"):
        RieszParams(s=2.0, dim=2, radius=LogRadius(1.0, 2))
    with pytest.raises(ValueError):
        RieszParams(s=3.0, dim=2, radius=LogRadius(1.0, 2), weight_mode="other")
    with pytest.raises(ValueError):
        RieszParams(s=3.0, dim=2, radius=LogRadius(1.0, 2), weight_mode="density")
    with pytest.raises(ValueError):
        RieszParams(s=3.0, dim=2, radius=LogRadius(1.0, 3))
