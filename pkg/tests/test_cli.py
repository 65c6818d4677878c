import json

from pytest               import fixture
from pytest               import raises

from finsler_rigidity.cli import main


@fixture(autouse=True)
def clean_environment(monkeypatch):
    monkeypatch.delenv('FINSLER_SEED', raising=False)
    monkeypatch.delenv('FINSLER_OUTPUT_DIR', raising=False)


def test_list_metrics(capsys):
    assert main(['list-metrics']) == 0
    out = capsys.readouterr().out
    assert out.startswith('Metric families:')
    assert '  randers_non_berwald (randers, n=2):' in out


def test_list_metrics_as_json(capsys, tmp_path):
    assert main(['--metrics-dir', str(tmp_path), 'list-metrics', '--json']) == 0
    entries = json.loads(capsys.readouterr().out)
    assert {entry['name'] for entry in entries if entry['kind'] == 'family'} == \
        {'custom', 'euclidean', 'randers', 'riemannian'}
    assert 'bumpy_surface' not in {entry['name'] for entry in entries}


def test_analyze_writes_a_report(capsys, write_config, fast_numeric, tmp_path):
    path = write_config({'metric': {'preset': 'euclidean_2d'}, 'analyses': ['tensors'], 'numeric': fast_numeric})
    assert main(['analyze', str(path)]) == 0
    report = json.loads((tmp_path / 'report.json').read_text())
    assert report['errors'] == []
    assert report['config']['analyses'] == ['tensors']
    assert capsys.readouterr().out == ''


def test_same_seed_gives_identical_reports(write_config, fast_numeric, tmp_path):
    path = write_config({'metric': {'preset': 'randers_non_berwald'}, 'analyses': ['tensors', 'average'],
                         'numeric': fast_numeric})
    out = tmp_path / 'seeded.json'
    assert main(['--seed', '7', '--out', str(out), 'analyze', str(path)]) == 0
    first = out.read_bytes()
    assert main(['--seed', '7', '--out', str(out), 'analyze', str(path)]) == 0
    assert out.read_bytes() == first
    assert json.loads(first)['config']['numeric']['seed'] == 7


def test_classify_prints_verdicts(capsys, write_config, fast_numeric):
    path = write_config({'metric': {'preset': 'randers_berwald'}, 'analyses': ['tensors'], 'numeric': fast_numeric})
    assert main(['classify', str(path)]) == 0
    out = capsys.readouterr().out.splitlines()
    assert 'is_berwald: yes' in out
    assert 'is_landsberg: yes' in out
    assert out == sorted(out)


def test_failed_assertion_exit_code(capsys, write_config, fast_numeric):
    path = write_config({'metric': {'preset': 'randers_non_berwald'}, 'numeric': fast_numeric})
    assert main(['--assert', 'berwald', 'classify', str(path)]) == 2
    assert 'is_berwald: no' in capsys.readouterr().out


def test_config_error_exit_code(capsys, write_config):
    path = write_config({'metric': {'family': 'custom', 'dimension': 2, 'expression': 'sqrt(y1^2 + y3^2)'}})
    assert main(['analyze', str(path)]) == 1
    assert 'error: ConfigError:' in capsys.readouterr().err


def test_holonomy_of_a_three_dimensional_metric(capsys, write_config, fast_numeric):
    path = write_config({'metric': {'preset': 'euclidean_3d'}, 'numeric': fast_numeric})
    assert main(['holonomy', str(path)]) == 1
    assert 'error: UnsupportedDimension:' in capsys.readouterr().err


def test_missing_config_file(capsys, tmp_path):
    assert main(['analyze', str(tmp_path / 'absent.json')]) == 1
    assert 'error: ConfigError:' in capsys.readouterr().err


def test_global_flags_precede_the_command(write_config):
    path = write_config({'metric': {'preset': 'euclidean_2d'}})
    with raises(SystemExit):
        main(['analyze', str(path), '--seed', '7'])
    with raises(SystemExit):
        main(['--assert', 'finsler', 'analyze', str(path)])


def test_classify_flags_a_flat_chart(capsys, write_config, fast_numeric, tmp_path):
    out = tmp_path / 'flat.json'
    path = write_config({'metric': {'preset': 'euclidean_2d'}, 'numeric': fast_numeric})
    assert main(['--out', str(out), 'classify', str(path)]) == 0
    assert 'is_berwald: yes' in capsys.readouterr().out
    report = json.loads(out.read_text())
    assert report['errors'] == []
    assert report['samples']['classify']['flags']['locally_minkowski_in_chart'] is True
