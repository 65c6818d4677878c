import json

import numpy as np

from pytest                  import fixture

from finsler_rigidity.config import load_run_config
from finsler_rigidity.report import dumps_report
from finsler_rigidity.runner import EXIT_ASSERTION
from finsler_rigidity.runner import EXIT_ERROR
from finsler_rigidity.runner import EXIT_OK
from finsler_rigidity.runner import FinslerAnalysisRunner

POINTWISE = ['tensors', 'connections', 'geodesic', 'transport', 'average']


@fixture
def runner(registry):
    return FinslerAnalysisRunner(registry)


def config_for(metric, analyses, numeric, tmp_path, **extra):
    raw = {'metric': metric, 'analyses': analyses, 'numeric': numeric,
           'output': {'report': str(tmp_path / 'report.json')}}
    raw.update(extra)
    return load_run_config(raw)


def all_verdicts(residuals):
    return {key: residual.verdict.value for group in residuals.values() for key, residual in group.items()}


def test_pointwise_analyses_of_the_plane(runner, tmp_path, fast_numeric):
    numeric = dict(fast_numeric, geodesic_length=0.5)
    outcome = runner.run(config_for({'preset': 'euclidean_2d'}, POINTWISE, numeric, tmp_path))
    report = outcome.report
    assert outcome.exit_code == EXIT_OK
    assert report['errors'] == []
    assert report['verdicts'] == {}
    assert set(report['residuals']) == {'tensors', 'connections', 'geodesic', 'transport', 'average'}
    assert set(all_verdicts(report['residuals']).values()) == {'yes'}
    assert 'homogeneity' in report['residuals']['tensors']
    np.testing.assert_allclose(report['samples']['geodesic']['end_point'], [0.5, 0.0], atol=1e-12)
    assert report['timings'] == {}
    assert json.loads((tmp_path / 'report.json').read_text())['schema_version'] == '1.0.0'


def test_connection_residuals_of_a_randers_metric(runner, tmp_path, fast_numeric):
    outcome = runner.run(config_for({'preset': 'randers_non_berwald'}, ['connections', 'transport'],
                                    fast_numeric, tmp_path), write=False)
    assert outcome.exit_code == EXIT_OK
    verdicts = all_verdicts(outcome.report['residuals'])
    assert verdicts['torsion'] == 'yes'
    assert verdicts['horizontal_compatibility'] == 'yes'
    assert verdicts['nonlinear_variants'] == 'yes'
    assert verdicts['chern_F_drift'] == 'yes'
    assert not (tmp_path / 'report.json').exists()


def test_failed_assertion(runner, tmp_path, fast_numeric):
    config = config_for({'preset': 'randers_non_berwald'}, ['tensors'], fast_numeric, tmp_path,
                        **{'assert': 'berwald'})
    outcome = runner.run(config, write=False)
    assert outcome.exit_code == EXIT_ASSERTION
    assert outcome.report['verdicts']['is_berwald'] == 'no'
    assert outcome.report['config']['analyses'] == ['tensors', 'classify']


def test_passed_assertion(runner, tmp_path, fast_numeric):
    config = config_for({'preset': 'randers_berwald'}, ['classify'], fast_numeric, tmp_path,
                        **{'assert': 'landsberg'})
    outcome = runner.run(config, write=False)
    assert outcome.exit_code == EXIT_OK
    assert outcome.report['verdicts']['is_landsberg'] == 'yes'


def test_metric_that_is_not_homogeneous(runner, tmp_path, fast_numeric):
    metric = {'family': 'custom', 'dimension': 2, 'expression': 'y1^2 + y2^2'}
    outcome = runner.run(config_for(metric, ['tensors'], fast_numeric, tmp_path))
    assert outcome.exit_code == EXIT_ERROR
    error, = outcome.report['errors']
    assert error['type'] == 'NotHomogeneous'
    assert error['analysis'] == 'metric'
    assert (tmp_path / 'report.json').exists()


def test_unknown_preset(runner, tmp_path, fast_numeric):
    outcome = runner.run(config_for({'preset': 'torus'}, ['tensors'], fast_numeric, tmp_path), write=False)
    assert outcome.exit_code == EXIT_ERROR
    assert outcome.report['errors'][0]['type'] == 'ConfigError'
    assert outcome.report['errors'][0]['location'] == 'metric.preset'
    assert outcome.structure is None


def test_holonomy_needs_a_surface(runner, tmp_path, fast_numeric):
    outcome = runner.run(config_for({'preset': 'euclidean_3d'}, ['holonomy'], fast_numeric, tmp_path), write=False)
    assert outcome.exit_code == EXIT_ERROR
    error, = outcome.report['errors']
    assert error['type'] == 'UnsupportedDimension'
    assert error['analysis'] == 'holonomy'


def test_holonomy_on_its_own(runner, tmp_path, fast_numeric):
    outcome = runner.run(config_for({'preset': 'randers_berwald'}, ['holonomy'], fast_numeric, tmp_path),
                         write=False)
    assert outcome.report['verdicts'] == {'holonomy_class': 'trivial'}
    assert 'inverse_loop' in outcome.report['residuals']['holonomy_class']
    assert outcome.report['samples']['holonomy']['sample']['x'] == [0.0, 0.0]


def test_holonomy_is_folded_into_classification(runner, tmp_path, fast_numeric):
    outcome = runner.run(config_for({'preset': 'euclidean_2d'}, ['classify', 'holonomy'], fast_numeric, tmp_path),
                         write=False)
    assert outcome.report['verdicts']['holonomy_class'] == 'trivial'
    assert outcome.report['samples']['holonomy'] == {'note': 'holonomy reported with the classification'}
    assert outcome.report['samples']['classify']['flags']['locally_minkowski_in_chart']


def test_tensor_csv_and_timings(runner, tmp_path, fast_numeric):
    numeric = dict(fast_numeric, record_timings=True)
    config = config_for({'preset': 'randers_non_berwald'}, ['tensors'], numeric, tmp_path,
                        output={'report': str(tmp_path / 'r.json'), 'csv': str(tmp_path / 'g.csv')})
    outcome = runner.run(config)
    assert set(outcome.report['timings']) == {'tensors'}
    lines = (tmp_path / 'g.csv').read_text().splitlines()
    assert lines[0] == '# metric: randers_non_berwald'
    assert lines[2].startswith('x1,x2,y1,y2,F,g11')
    assert len(lines) == 3 + fast_numeric['sample_points'] * fast_numeric['sample_directions']


def test_run_file_reports_config_errors(runner, tmp_path):
    path = tmp_path / 'bad.json'
    path.write_text(json.dumps({'metric': {'preset': 'euclidean_2d'}, 'numeric': {'foo': 1}}))
    outcome = runner.run_file(str(path))
    assert outcome.exit_code == EXIT_ERROR
    assert outcome.report['errors'][0]['location'] == 'numeric.foo'


def test_run_file_restricts_analyses(runner, write_config, fast_numeric):
    path = write_config({'metric': {'preset': 'euclidean_2d'}, 'analyses': ['tensors', 'average'],
                         'numeric': fast_numeric})
    outcome = runner.run_file(str(path), analyses=['average'])
    assert outcome.report['config']['analyses'] == ['average']


def test_reports_are_reproducible(runner, tmp_path, fast_numeric):
    config = config_for({'preset': 'randers_non_berwald'}, ['tensors', 'average'], fast_numeric, tmp_path)
    first = dumps_report(runner.run(config, write=False).report)
    second = dumps_report(runner.run(config, write=False).report)
    assert first == second
    assert json.loads(first)['config']['numeric']['seed'] == 42


def test_value_errors_become_analysis_errors(runner, tmp_path, fast_numeric, monkeypatch):
    def broken(fs, config):
        raise ValueError('order too low')

    monkeypatch.setitem(runner.analyses, 'tensors', broken)
    outcome = runner.run(config_for({'preset': 'euclidean_2d'}, ['tensors', 'average'], fast_numeric, tmp_path),
                         write=False)
    assert outcome.exit_code == EXIT_ERROR
    error, = outcome.report['errors']
    assert error == {'type': 'ValueError', 'message': 'order too low', 'analysis': 'tensors'}
    assert 'average' in outcome.report['residuals']
