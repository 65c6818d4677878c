import numpy as np

from pytest                      import mark
from pytest                      import raises

from finsler_rigidity.averaging  import AveragedMetricField
from finsler_rigidity.averaging  import ExpressionMetricField
from finsler_rigidity.averaging  import QuadratureScheme
from finsler_rigidity.classify   import InterpolatedStructure
from finsler_rigidity.classify   import StructureClassifier
from finsler_rigidity.classify   import berwald_test
from finsler_rigidity.classify   import christoffel_magnitude
from finsler_rigidity.classify   import indicatrix_nesting
from finsler_rigidity.classify   import interpolated_indicatrix_test
from finsler_rigidity.classify   import landsberg_test
from finsler_rigidity.classify   import rigidity_test
from finsler_rigidity.classify   import sample_loops
from finsler_rigidity.errors     import InsufficientSamples
from finsler_rigidity.holonomy   import METRIC_PRESERVING
from finsler_rigidity.transport  import CurveSpec
from finsler_rigidity.verdicts   import Verdict

SMALL = QuadratureScheme.trapezoid_2d(32)


def test_euclidean_plane(euclidean, fast_numeric):
    report = StructureClassifier(euclidean).classify(**fast_numeric)
    assert report.verdicts == {'interpolation_invariant': 'yes', 'is_berwald': 'yes', 'is_landsberg': 'yes',
                               'rigidity_holds': 'yes', 'holonomy_class': 'trivial'}
    assert report.flags['locally_minkowski_in_chart']
    assert 'other charts' in report.flags['locally_minkowski_note']
    assert not report.flags['pure_landsberg_candidate']
    assert report.consistency['berwald_implies_landsberg']['status'] == 'consistent'
    assert report.consistency['berwald_implies_rigidity']['status'] == 'consistent'
    assert report.consistency['rigidity_failure_implies_not_berwald']['status'] == 'not_applicable'


def test_minkowski_randers(randers_berwald, fast_numeric):
    report = StructureClassifier(randers_berwald).classify(criteria=['berwald', 'interpolation', 'rigidity'],
                                                          **fast_numeric)
    assert report.verdicts['is_berwald'] == 'yes'
    assert report.verdicts['rigidity_holds'] == 'yes'
    assert report.verdicts['interpolation_invariant'] == 'yes'
    assert report.flags['locally_minkowski_in_chart']


def test_non_berwald_randers(randers_non_berwald, fast_numeric):
    report = StructureClassifier(randers_non_berwald).classify(criteria=['berwald', 'landsberg', 'rigidity'],
                                                              **fast_numeric)
    assert report.verdicts == {'is_berwald': 'no', 'is_landsberg': 'no', 'rigidity_holds': 'no'}
    assert report.consistency['rigidity_failure_implies_not_berwald']['status'] == 'consistent'
    assert report.consistency['berwald_implies_landsberg']['status'] == 'not_applicable'
    assert 'locally_minkowski_in_chart' not in report.flags
    assert not report.flags['pure_landsberg_candidate']

    data = report.to_dict()
    assert list(data['verdicts']) == sorted(data['verdicts'])
    assert data['residuals']['is_berwald']['direct']['value'] > 1e-3
    assert data['sampling']['seed'] == 42
    assert len(data['sampling']['points']) == fast_numeric['sample_points']


def test_sphere_patch(sphere, fast_numeric):
    report = StructureClassifier(sphere).classify(**fast_numeric)
    assert report.verdicts['is_berwald'] == 'yes'
    assert report.verdicts['is_landsberg'] == 'yes'
    assert report.verdicts['rigidity_holds'] == 'yes'
    assert report.verdicts['interpolation_invariant'] == 'yes'
    assert report.verdicts['holonomy_class'] == METRIC_PRESERVING
    assert not report.flags['locally_minkowski_in_chart']
    assert not report.flags['pure_landsberg_candidate']
    assert report.residuals['holonomy_class']['inverse_loop'].verdict is Verdict.YES


def test_holonomy_is_skipped_off_surfaces(randers_3d):
    report = StructureClassifier(randers_3d).classify(criteria=['holonomy'])
    assert report.verdicts == {}


def test_berwald_test_in_three_dimensions(randers_3d):
    result = berwald_test(randers_3d, 3, 8, scheme=QuadratureScheme.latlong_3d(6, 12))
    assert result.verdict is Verdict.NO
    assert set(result.residuals) == {'direct', 'averaged'}
    assert result.details['averaged_subtest']


def test_landsberg_test_residual(randers_berwald):
    result = landsberg_test(randers_berwald, 3, 8)
    assert result.verdict is Verdict.YES
    assert result.residuals['landsberg_tensor'].samples == 24


@mark.parametrize("kwargs", ({'colour': 'red'}, {'criteria': ['ricci']}))
def test_unknown_classification_arguments(euclidean, kwargs):
    with raises(ValueError):
        StructureClassifier(euclidean).classify(**kwargs)


def test_too_few_samples(euclidean):
    with raises(InsufficientSamples):
        berwald_test(euclidean, sample_points=2)
    with raises(InsufficientSamples):
        landsberg_test(euclidean, sample_dirs=4)


def test_explicit_points_and_metric(sphere):
    points = [[1.0, 0.0], [1.5, 0.5], [2.0, -0.5]]
    field = ExpressionMetricField(2, [['1', '0'], ['0', 'sin(x1)^2']])
    curves = [CurveSpec.rectangle([1.2, -0.2], 0.3, 0.3)]
    assert berwald_test(sphere, points, 8, scheme=SMALL).verdict is Verdict.YES
    result = rigidity_test(sphere, field, curves, sample_count=8)
    assert result.verdict is Verdict.YES
    assert result.details['metric'] == 'ExpressionMetricField'


def test_rigidity_detects_a_wrong_metric(sphere):
    field = ExpressionMetricField(2, [['1', '0'], ['0', '1']])
    curves = [CurveSpec.rectangle([1.2, -0.2], 0.3, 0.3)]
    assert rigidity_test(sphere, field, curves, sample_count=8).verdict is Verdict.NO


def test_sampled_loops_stay_in_the_chart(randers_non_berwald, rng):
    loops = sample_loops(randers_non_berwald.chart, rng, 5, 2.0)
    assert len(loops) == 5
    for loop in loops:
        loop.check_in_chart(randers_non_berwald.chart)
        assert abs(loop.meta['a'] - 0.8) <= 1e-12


def test_interpolated_structure_end_points(randers_non_berwald):
    field = AveragedMetricField(randers_non_berwald, SMALL)
    x, y = [0.2, 1.0], np.array([[0.6, 0.8], [-1.0, 0.2]])
    start = InterpolatedStructure(randers_non_berwald, field, 0.0)
    end = InterpolatedStructure(randers_non_berwald, field, 1.0)
    middle = InterpolatedStructure(randers_non_berwald, field, 0.5)

    np.testing.assert_allclose(start.value(x, y), randers_non_berwald.value(x, y))
    np.testing.assert_allclose(end.value(x, y), field.norm(x, y), rtol=1e-12)
    np.testing.assert_allclose(middle.value(x, y), 0.5 * (start.value(x, y) + end.value(x, y)), rtol=1e-12)
    np.testing.assert_allclose(middle.jet(x, y, 2).value, middle.value(x, y), rtol=1e-12)
    assert middle.name == 'randers_non_berwald@t=0.5'
    assert middle.describe()['t'] == 0.5


def test_interpolation_parameter_range(randers_non_berwald):
    field = AveragedMetricField(randers_non_berwald, SMALL)
    with raises(ValueError):
        InterpolatedStructure(randers_non_berwald, field, 1.5)
    with raises(ValueError):
        interpolated_indicatrix_test(randers_non_berwald, field, [0.0, -0.1])


def test_interpolation_drifts_for_non_berwald(randers_non_berwald):
    field = AveragedMetricField(randers_non_berwald, SMALL)
    curves = [CurveSpec.rectangle([-0.2, 0.7], 0.3, 0.3)]
    result = interpolated_indicatrix_test(randers_non_berwald, field, [0.0, 0.5, 1.0], curves, sample_count=8)
    assert set(result.residuals) == {'drift_t=0', 'drift_t=0.5', 'drift_t=1'}
    assert result.residuals['drift_t=1'].verdict is Verdict.YES
    assert result.residuals['drift_t=0'].verdict is Verdict.NO
    assert result.verdict is Verdict.NO
    assert result.details['connection'] == 'levi_civita'
    assert [row['t'] for row in result.details['table']] == [0.0, 0.5, 1.0]


def test_minkowski_randers_keeps_every_interpolated_indicatrix(randers_berwald):
    field = AveragedMetricField(randers_berwald, SMALL)
    t_grid = [0.0, 0.25, 0.5, 0.75, 1.0]
    result = interpolated_indicatrix_test(randers_berwald, field, t_grid, loop_count=1, loop_side=0.3,
                                          sample_count=8)
    assert set(result.residuals) == {'drift_t=0', 'drift_t=0.25', 'drift_t=0.5', 'drift_t=0.75', 'drift_t=1'}
    assert all(residual.verdict is Verdict.YES for residual in result.residuals.values())
    assert result.verdict is Verdict.YES
    assert [row['verdict'] for row in result.details['table']] == ['yes'] * 5


def test_indicatrix_nesting(euclidean, randers_non_berwald):
    field = AveragedMetricField(euclidean, SMALL)
    flat = indicatrix_nesting(euclidean, field, np.zeros((2, 2)), [0.0, 1.0], rays=8)
    assert flat.contact_rays == 16
    assert not flat.non_intersecting

    field = AveragedMetricField(randers_non_berwald, SMALL)
    crossing = indicatrix_nesting(randers_non_berwald, field, np.array([[0.0, 1.0]]), [0.0, 0.5, 1.0], rays=64)
    assert crossing.monotone
    assert crossing.rays == 64
    assert crossing.min_gap >= 0.0


def test_christoffel_magnitude(euclidean, sphere, rng):
    directions = rng.normal(size=(8, 2))
    assert christoffel_magnitude(euclidean, np.zeros((1, 2)), directions) == 0.0
    expected = abs(np.cos(1.0) / np.sin(1.0))
    np.testing.assert_allclose(christoffel_magnitude(sphere, np.array([[1.0, 0.0]]), directions), expected)
