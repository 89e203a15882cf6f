import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import special_ortho_group

from geokernel import (DegenerateGradient, KernelSpec, NonDifferentiableKernel, ZeroReference,
                       curvatures, frames, implied_normal, level_stats, normals, orient_frame,
                       signature_model, weingarten)
from geokernel import interpolant, testbeds
from geokernel.geometry import SurfaceFrame

L1 = KernelSpec.laplace(1.0)
G1 = KernelSpec.gauss(1.0)


def circle(m):
    t = 2 * np.pi * np.arange(m) / m
    return np.column_stack([np.cos(t), np.sin(t)])


@pytest.fixture(scope="module")
def sphere_model():
    return signature_model(L1, testbeds.fibonacci_sphere(512), 0.0)


# ----------------------------------------------------------- signature model

def test_single_center_signature():
    sig = signature_model(G1, [[0.5, -0.2]], 0.0)
    x = np.array([1.0, 0.3])
    assert interpolant.predict(sig, [x])[0] == pytest.approx(
        np.exp(-0.5 * np.sum((x - [0.5, -0.2]) ** 2)), rel=1e-15)


def test_circle_signature_interpolates_ones():
    sig = signature_model(L1, circle(64), 0.0)
    assert np.max(np.abs(interpolant.predict(sig, circle(64)) - 1.0)) <= 1e-8


def test_regression_shrinks_mean_level():
    X = circle(64)
    stats = level_stats(signature_model(L1, X, 0.1), X)
    assert 0.0 < stats.mean_level < 1.0
    assert stats.residual_rms > 0
    assert stats.min_level <= stats.mean_level <= stats.max_level


def test_level_stats_exact_fit():
    X = circle(32)
    stats = level_stats(signature_model(L1, X, 0.0), X)
    assert stats.mean_level == pytest.approx(1.0, abs=1e-8)
    assert stats.residual_rms <= 1e-8
    one = level_stats(signature_model(G1, [[0.0, 0.0]], 0.0), [[0.0, 0.0]])
    assert one.mean_level == pytest.approx(1.0, abs=1e-15)


# -------------------------------------------------------------------- normals

def test_circle_normals_are_radial_and_outward():
    X = circle(64)
    sig = signature_model(L1, X, 0.0)
    nu, gn = normals(sig, X)
    angles = np.arccos(np.clip(np.einsum("ij,ij->i", nu, X), -1, 1))
    assert np.all(angles <= 1e-2)
    assert np.all(np.einsum("ij,ij->i", nu, X) > 0)
    np.testing.assert_allclose(np.linalg.norm(nu, axis=1), 1.0, atol=1e-12)
    assert np.all(gn > 0)


def test_single_center_normal_points_away():
    sig = signature_model(G1, [[0.0, 0.0, 0.0]], 0.0)
    nu, gn = implied_normal(sig, [0.7, 0.0, 0.0])
    np.testing.assert_allclose(nu, [1.0, 0.0, 0.0], atol=1e-15)
    assert gn == pytest.approx(0.7 * np.exp(-0.245), rel=1e-14)


@pytest.mark.parametrize("spec", [L1, G1], ids=["laplace", "gauss"])
def test_flat_symmetric_point_is_degenerate(spec):
    X = testbeds.quadratic_patch_grid(1.0, 1.0, 0.5, 16)
    sig = signature_model(spec, X, 1e-10)
    with pytest.raises(DegenerateGradient) as info:
        implied_normal(sig, np.zeros(3))
    assert info.value.grad_norm < 1e-8
    with pytest.raises(DegenerateGradient):
        curvatures(sig, np.zeros(3))
    assert frames(sig, np.zeros((1, 3)))[0] is None
    nu, _ = normals(sig, np.zeros((1, 3)), raise_degenerate=False)
    assert np.all(np.isnan(nu))


def test_tau_grad_threshold_is_configurable():
    sig = signature_model(G1, [[0.0, 0.0]], 0.0)
    x = [1e-3, 0.0]
    implied_normal(sig, x)
    with pytest.raises(DegenerateGradient):
        implied_normal(sig, x, tau_grad=1e-2)


def test_degenerate_error_carries_index():
    X = testbeds.quadratic_patch_grid(1.0, 1.0, 0.5, 16)
    sig = signature_model(L1, X, 1e-10)
    P = np.array([[0.3, 0.1, 0.04], [0.0, 0.0, 0.0]])
    with pytest.raises(DegenerateGradient) as info:
        normals(sig, P)
    assert info.value.index == 1


# ----------------------------------------------------------------- curvature

@pytest.mark.parametrize("spec, tol", [(L1, 2e-2), (G1, 5e-2)], ids=["laplace", "gauss"])
def test_saddle_patch_curvatures(spec, tol):
    X = testbeds.quadratic_patch_grid(1.0, 2.0, 0.5, 16)
    sig = signature_model(spec, X, 1e-10)
    frame = orient_frame(curvatures(sig, np.zeros(3)), [0, 0, 1])
    np.testing.assert_allclose(frame.principal_curvatures, [-2.0, 1.0], rtol=tol)


def test_weingarten_annihilates_the_normal(sphere_model):
    rng = np.random.default_rng(0)
    for x in testbeds.sphere_uniform(10, seed=3) * rng.uniform(0.9, 1.1, (10, 1)):
        W = weingarten(sphere_model, x)
        nu, _ = implied_normal(sphere_model, x)
        _, _, H = interpolant.evaluate_jet(sphere_model, x, 2)
        assert np.linalg.norm(W @ nu) <= 1e-10 * np.linalg.norm(H)


def test_sphere_mean_curvature(sphere_model):
    Q = testbeds.sphere_uniform(16, seed=1)
    for x in Q:
        W = weingarten(sphere_model, x)
        assert abs(abs(np.trace(W) / 2) - 1.0) <= 2e-2


def test_sphere_principal_curvatures(sphere_model):
    for fr in frames(sphere_model, testbeds.sphere_uniform(16, seed=2), raise_degenerate=True):
        k = fr.principal_curvatures
        np.testing.assert_allclose(k, [-1.0, -1.0], rtol=2e-2)
        assert fr.gauss_curvature == pytest.approx(k[0] * k[1], rel=1e-10)
        assert fr.normal @ fr.point > 0


def test_frame_invariants(sphere_model):
    rng = np.random.default_rng(5)
    P = testbeds.sphere_uniform(20, seed=4) * rng.uniform(0.95, 1.05, (20, 1))
    _, g, H = interpolant.evaluate(sphere_model, P, 2)
    for k, fr in enumerate(frames(sphere_model, P, raise_degenerate=True)):
        assert abs(np.linalg.norm(fr.normal) - 1) <= 1e-12
        kappa = fr.principal_curvatures
        assert fr.mean_curvature == pytest.approx(kappa.sum() / 2, abs=1e-10)
        assert fr.gauss_curvature == pytest.approx(np.prod(kappa), rel=1e-10)
        assert np.all(np.diff(kappa) >= 0)
        # symmetric projected operator and its trace
        nu = fr.normal
        Pr = np.eye(3) - np.outer(nu, nu)
        S = Pr @ H[k] @ Pr / np.linalg.norm(g[k])
        assert np.trace(fr.weingarten) == pytest.approx(np.trace(S), rel=1e-9)
        assert np.linalg.norm(S @ nu) <= 1e-10 * np.linalg.norm(H[k])
        w, V = np.linalg.eigh(S)
        assert np.max(np.abs(V.T @ nu)) > 0.9


def test_plain_laplace_refuses_curvature():
    sig = signature_model(KernelSpec.laplace(0.0), circle(16), 0.0)
    normals(sig, [[1.1, 0.0]])
    with pytest.raises(NonDifferentiableKernel):
        curvatures(sig, [1.1, 0.0])
    with pytest.raises(NonDifferentiableKernel):
        weingarten(sig, [1.1, 0.0])


def test_curves_have_one_curvature():
    X = testbeds.curve_sample(testbeds.Ellipse(1.0, 0.5), 64)
    sig = signature_model(L1, X, 0.0)
    for fr, x in zip(frames(sig, X[:8], raise_degenerate=True), X[:8]):
        exact = testbeds.analytic_frame(testbeds.Ellipse(1.0, 0.5), x)
        assert fr.principal_curvatures.shape == (1,)
        assert fr.principal_curvatures[0] == pytest.approx(
            exact.principal_curvatures[0], rel=5e-2)


def test_one_dimensional_clouds_have_no_curvature():
    sig = signature_model(L1, [[0.0], [1.0]], 0.0)
    with pytest.raises(ValueError):
        frames(sig, [[0.5]])


# ---------------------------------------------------------------- orientation

def _frame():
    X = testbeds.quadratic_patch_grid(1.0, 2.0, 0.5, 16)
    return curvatures(signature_model(L1, X, 1e-10), np.zeros(3))


def test_orient_frame_identity_and_flip():
    fr = _frame()
    assert orient_frame(fr, fr.normal) is fr
    flipped = orient_frame(fr, -fr.normal)
    np.testing.assert_array_equal(flipped.normal, -fr.normal)
    np.testing.assert_allclose(flipped.principal_curvatures, np.sort(-fr.principal_curvatures))
    assert flipped.mean_curvature == -fr.mean_curvature
    assert flipped.gauss_curvature == pytest.approx(fr.gauss_curvature * (-1) ** 2)
    np.testing.assert_array_equal(flipped.weingarten, -fr.weingarten)


def test_orient_frame_zero_reference():
    with pytest.raises(ZeroReference):
        orient_frame(_frame(), [0.0, 0.0, 0.0])


def test_orient_frame_gauss_sign_in_odd_codimension_count():
    fr = SurfaceFrame(np.zeros(4), np.array([0, 0, 0, 1.0]), 1.0, np.diag([1.0, 2.0, 3.0, 0.0]),
                      np.array([1.0, 2.0, 3.0]), 2.0, 6.0)
    assert orient_frame(fr, [0, 0, 0, -1]).gauss_curvature == pytest.approx(-6.0)


# -------------------------------------------------------------- rigid motion

@settings(max_examples=10, deadline=None)
@given(seed=st.integers(0, 2**31))
def test_rigid_motion_equivariance(seed):
    rng = np.random.default_rng(seed)
    Q = special_ortho_group.rvs(3, random_state=rng)
    t = rng.normal(size=3)
    X = testbeds.ellipsoid_sample(128, 1.5, 1.0, 0.8, seed=seed % 1000)
    P = testbeds.ellipsoid_sample(4, 1.5, 1.0, 0.8, seed=seed % 1000 + 1)
    a = frames(signature_model(L1, X, 0.0), P, raise_degenerate=True)
    b = frames(signature_model(L1, X @ Q.T + t, 0.0), P @ Q.T + t, raise_degenerate=True)
    for fa, fb in zip(a, b):
        np.testing.assert_allclose(fb.normal, Q @ fa.normal, atol=1e-8)
        np.testing.assert_allclose(fb.principal_curvatures, fa.principal_curvatures, atol=1e-8)
        assert fb.mean_curvature == pytest.approx(fa.mean_curvature, abs=1e-8)
        assert fb.gauss_curvature == pytest.approx(fa.gauss_curvature, abs=1e-8)
