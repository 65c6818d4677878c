import numpy as np

from pytest                      import mark
from pytest                      import raises
from hypothesis                  import given
from hypothesis                  import settings
from hypothesis.strategies       import floats

from finsler_rigidity.errors     import DimensionMismatch
from finsler_rigidity.errors     import NonSmoothPoint
from finsler_rigidity.errors     import StrongConvexityViolation
from finsler_rigidity.structures import build_structure
from finsler_rigidity.structures import linear_change
from finsler_rigidity.tensors    import cartan_tensor
from finsler_rigidity.tensors    import convexity_scan
from finsler_rigidity.tensors    import fundamental_tensor

from .oracles                    import fundamental_tensor_fd


def test_euclidean_fundamental_tensor_is_identity(euclidean):
    result = fundamental_tensor(euclidean, [0.2, -0.4], [3.0, 4.0])
    np.testing.assert_allclose(result.g, np.eye(2), atol=1e-14)
    np.testing.assert_allclose(result.g_inv, np.eye(2), atol=1e-14)


def test_euclidean_cartan_tensor_vanishes(euclidean_3d):
    result = cartan_tensor(euclidean_3d, [0.0, 0.0, 0.0], [[1.0, 2.0, 3.0], [0.0, -1.0, 0.5]])
    assert result.A.shape == (2, 3, 3, 3)
    np.testing.assert_allclose(result.A, 0.0, atol=1e-14)


def test_sphere_metric(sphere):
    x = [1.2, 0.3]
    result = fundamental_tensor(sphere, x, [0.3, -0.8])
    np.testing.assert_allclose(result.g, np.diag([1.0, np.sin(1.2) ** 2]), atol=1e-13)


def test_batched_directions(randers_non_berwald):
    y = np.array([[1.0, 0.0], [0.0, 1.0], [-1.0, 0.5]])
    result = fundamental_tensor(randers_non_berwald, [0.1, 1.0], y)
    assert result.g.shape == (3, 2, 2)
    for k in range(3):
        single = fundamental_tensor(randers_non_berwald, [0.1, 1.0], y[k])
        np.testing.assert_allclose(result.g[k], single.g, atol=1e-14)


@settings(deadline=None, max_examples=20)
@given(floats(min_value=-0.9, max_value=0.9),
       floats(min_value= 0.6, max_value=1.4),
       floats(min_value= 0.0, max_value=2 * np.pi))
def test_randers_tensor_matches_finite_differences(randers_non_berwald, x1, x2, angle):
    fs = randers_non_berwald
    x = np.array([x1, x2])
    y = np.array([np.cos(angle), np.sin(angle)])
    np.testing.assert_allclose(fundamental_tensor(fs, x, y).g, fundamental_tensor_fd(fs, x, y),
                               rtol=1e-6, atol=1e-7)


def test_euler_identity_and_cartan_properties(randers_non_berwald, rng):
    x = np.array([0.3, 0.9])
    y = rng.normal(size=(12, 2))
    g = fundamental_tensor(randers_non_berwald, x, y).g
    F = randers_non_berwald.value(x, y)
    np.testing.assert_allclose(np.einsum('kij,ki,kj->k', g, y, y), F ** 2, rtol=1e-12)

    A = cartan_tensor(randers_non_berwald, x, y).A
    np.testing.assert_allclose(A, np.swapaxes(A, -1, -2), atol=1e-13)
    np.testing.assert_allclose(A, np.swapaxes(A, -3, -1), atol=1e-13)
    np.testing.assert_allclose(np.einsum('kijl,kl->kij', A, y), 0.0, atol=1e-12)
    assert np.max(np.abs(A)) > 1e-3


@mark.parametrize("scale", (0.1, 2.0, 17.0))
def test_fundamental_tensor_is_zero_homogeneous(randers_non_berwald, scale):
    x, y = [0.0, 1.0], np.array([0.4, -0.9])
    g = fundamental_tensor(randers_non_berwald, x, y).g
    np.testing.assert_allclose(fundamental_tensor(randers_non_berwald, x, scale * y).g, g, rtol=1e-12)


def test_convexity_scan_of_euclidean(euclidean):
    scan = convexity_scan(euclidean, [0.0, 0.0], 16)
    np.testing.assert_allclose(scan.min_eigenvalue, 1.0)
    assert scan.samples == 16


def test_convexity_violation_for_a_long_drift():
    fs = build_structure('randers', 2, {'beta': ['1.5', '0']})
    with raises(StrongConvexityViolation) as error:
        convexity_scan(fs, [0.0, 0.0], 32)
    assert error.value.eigenvalue <= 1e-10
    assert error.value.point == [0.0, 0.0]
    assert len(error.value.direction) == 2


def test_near_degenerate_randers_is_barely_convex(randers_near_degenerate):
    scan = convexity_scan(randers_near_degenerate, [0.0, 0.0], 64)
    assert 0.0 < scan.min_eigenvalue < 1e-2


def test_zero_direction_is_rejected(euclidean):
    with raises(NonSmoothPoint):
        fundamental_tensor(euclidean, [0.0, 0.0], [0.0, 0.0])


def test_shape_mismatch_is_rejected(euclidean):
    with raises(DimensionMismatch):
        fundamental_tensor(euclidean, [0.0, 0.0, 0.0], [1.0, 0.0])


def test_linear_change_transforms_g_as_a_tensor(randers_non_berwald):
    P = np.array([[2.0, 0.5], [0.0, 1.0]])
    changed = linear_change(randers_non_berwald, P)
    x, y = np.array([0.2, 1.0]), np.array([0.6, 0.8])
    g = fundamental_tensor(randers_non_berwald, x, y).g
    g_changed = fundamental_tensor(changed, P @ x, P @ y).g
    Q = np.linalg.inv(P)
    np.testing.assert_allclose(g_changed, Q.T @ g @ Q, atol=1e-12)
