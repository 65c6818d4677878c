import numpy as np

from pytest                      import fixture
from pytest                      import mark
from pytest                      import raises

from finsler_rigidity.averaging  import QuadratureScheme
from finsler_rigidity.averaging  import StructureMetricField
from finsler_rigidity.errors     import InsufficientSamples
from finsler_rigidity.errors     import UnsupportedDimension
from finsler_rigidity.holonomy   import GENERAL_LINEAR
from finsler_rigidity.holonomy   import METRIC_PRESERVING
from finsler_rigidity.holonomy   import SPECIAL_LINEAR
from finsler_rigidity.holonomy   import TRIVIAL
from finsler_rigidity.holonomy   import area_scaling
from finsler_rigidity.holonomy   import fit_invariant_form
from finsler_rigidity.holonomy   import holonomy_classify
from finsler_rigidity.holonomy   import holonomy_loops
from finsler_rigidity.holonomy   import holonomy_sample
from finsler_rigidity.holonomy   import loop_product
from finsler_rigidity.holonomy   import real_log
from finsler_rigidity.holonomy   import rotation_angle
from finsler_rigidity.ode        import OdeIntegrator
from finsler_rigidity.transport  import CurveSpec
from finsler_rigidity.transport  import frame_transport

from .oracles                    import invariant_form_grid_search

BASE = np.array([1.2, 0.0])


@fixture(scope='module')
def sphere_levi_civita(sphere):
    return StructureMetricField(sphere).levi_civita()


@fixture(scope='module')
def sphere_sample(sphere, sphere_levi_civita):
    return holonomy_sample(sphere, BASE, (0.2, 0.4), 4, connection=sphere_levi_civita)


def special_linear_matrices():
    A = np.diag([2.0, 0.5])
    B = np.array([[1.0, 0.3], [0.0, 1.0]])
    return [A, B, A @ B, B @ A, A @ A, B @ B]


def test_loops_cycle_through_quadrants():
    loops = holonomy_loops([0.0, 0.0], (0.1, 0.2), 4)
    assert len(loops) == 8
    assert [np.sign(loop.signed_area) for loop in loops[:4]] == [1, -1, 1, -1]
    assert {loop.meta['size'] for loop in loops} == {0.1, 0.2}
    for loop in loops:
        np.testing.assert_allclose(loop.start, [0.0, 0.0])
        np.testing.assert_allclose(loop.end, [0.0, 0.0], atol=1e-15)


def test_sphere_holonomy_preserves_the_metric(sphere_sample):
    result = holonomy_classify(sphere_sample)
    assert result.holonomy_class == METRIC_PRESERVING
    assert result.matrices == 8
    s2 = np.sin(BASE[0]) ** 2
    expected = 2.0 / (1.0 + s2) * np.diag([1.0, s2])
    np.testing.assert_allclose(result.invariant_form, expected, atol=1e-5)
    assert 'not a proof' in result.statement
    assert 'excludes a pure Landsberg surface' in result.statement


def test_invariant_form_agrees_with_grid_search(sphere_sample):
    Q, residual = fit_invariant_form(sphere_sample.matrices)
    best, _ = invariant_form_grid_search(sphere_sample.matrices)
    np.testing.assert_allclose(Q / 2.0, best, atol=2e-3)
    assert residual <= 1e-7


def test_rotation_angle_is_the_enclosed_curvature(sphere, sphere_levi_civita):
    a, b = 0.3, 0.25
    loop = CurveSpec.rectangle(BASE, a, b)
    H = frame_transport(sphere_levi_civita, loop).vectors
    form = np.diag([1.0, np.sin(BASE[0]) ** 2])
    expected = b * (np.cos(BASE[0]) - np.cos(BASE[0] + a))
    assert abs(abs(rotation_angle(H, form)) - expected) <= 1e-6


def test_inverse_loops_undo_each_other(sphere_sample):
    assert sphere_sample.inverse_residual <= 1e-7
    np.testing.assert_allclose(sphere_sample.determinants, 1.0, atol=1e-8)


def test_log_per_area_settles_for_small_loops(sphere, sphere_levi_civita):
    sample = holonomy_sample(sphere, BASE, (0.05, 0.1), 4, connection=sphere_levi_civita)
    scaling = area_scaling(sample)
    assert scaling['sizes'] == [0.05, 0.1]
    assert scaling['relative_change'] <= 0.05


def test_loop_products(sphere_levi_civita):
    first = CurveSpec.rectangle(BASE, 0.2, 0.3)
    second = CurveSpec.rectangle(BASE, -0.3, 0.2)
    joined, product = loop_product(sphere_levi_civita, first, second)
    np.testing.assert_allclose(joined, product, atol=1e-8)


def test_flat_structures_have_trivial_holonomy(randers_berwald):
    sample = holonomy_sample(randers_berwald, None, (0.2, 0.4), 3,
                             integrator=OdeIntegrator('RK4', rk4_steps=20),
                             scheme=QuadratureScheme.trapezoid_2d(16))
    np.testing.assert_allclose(sample.matrices, np.broadcast_to(np.eye(2), sample.matrices.shape), atol=1e-13)
    result = holonomy_classify(sample)
    assert result.holonomy_class == TRIVIAL
    assert result.invariant_form is None
    assert result.residuals['identity'].verdict.value == 'yes'


def test_special_linear_sample():
    result = holonomy_classify(special_linear_matrices())
    assert result.holonomy_class == SPECIAL_LINEAR
    assert 'compatible with a pure Landsberg surface' in result.statement


def test_general_linear_sample():
    result = holonomy_classify(special_linear_matrices() + [np.diag([2.0, 1.0])])
    assert result.holonomy_class == GENERAL_LINEAR
    assert result.residuals['determinant'].verdict.value == 'no'


def test_too_few_matrices():
    with raises(InsufficientSamples):
        holonomy_classify(special_linear_matrices()[:5])


def test_surfaces_only(randers_3d):
    with raises(UnsupportedDimension):
        holonomy_sample(randers_3d)


@mark.parametrize("angle", (0.1, -0.7, 2.0))
def test_rotation_logs(angle):
    R = np.array([[np.cos(angle), -np.sin(angle)], [np.sin(angle), np.cos(angle)]])
    np.testing.assert_allclose(real_log(R), [[0.0, -angle], [angle, 0.0]], atol=1e-12)
    np.testing.assert_allclose(rotation_angle(R, np.eye(2)), angle, atol=1e-12)


def test_sample_report(sphere_sample):
    data = sphere_sample.to_dict()
    assert len(data['loops']) == 8
    assert data['area_scaling']['sizes'] == [0.2, 0.4]
    assert data['ode_stats']['steps'] > 0
