import json

from pytest import fixture

from app    import app


@fixture
def client():
    app.config['TESTING'] = True
    with app.test_client() as client:
        yield client


def test_health_check(client):
    response = client.get('/')
    assert response.status_code == 200
    data = response.get_json()
    assert data['status'] == 'healthy'
    assert 'randers' in data['families']
    assert data['presets'] >= 7


def test_metrics_listing(client):
    entries = client.get('/metrics').get_json()
    assert any(entry['name'] == 'sphere_patch' and entry['kind'] == 'preset' for entry in entries)


def test_analyze(client, fast_numeric):
    response = client.post('/analyze', json={'metric': {'preset': 'euclidean_2d'}, 'analyses': ['tensors'],
                                             'numeric': fast_numeric})
    assert response.status_code == 200
    assert response.headers['X-Exit-Code'] == '0'
    report = json.loads(response.data)
    assert report['errors'] == []
    assert 'tensors' in report['residuals']


def test_analyze_with_failed_assertion(client, fast_numeric):
    response = client.post('/analyze', json={'metric': {'preset': 'randers_non_berwald'}, 'assert': 'berwald',
                                             'numeric': fast_numeric})
    assert response.status_code == 200
    assert response.headers['X-Exit-Code'] == '2'
    assert json.loads(response.data)['verdicts']['is_berwald'] == 'no'


def test_rejected_configurations(client):
    response = client.post('/analyze', data='not json', content_type='application/json')
    assert response.status_code == 400

    response = client.post('/analyze', json={'metric': {'preset': 'euclidean_2d'}, 'colour': 'red'})
    assert response.status_code == 400
    assert response.get_json()['details']['location'] == 'colour'

    response = client.post('/analyze', json={'metric': {'preset': 'torus'}})
    assert response.status_code == 400
    assert response.headers['X-Exit-Code'] == '1'


def test_analysis_errors(client, fast_numeric):
    response = client.post('/analyze', json={'metric': {'family': 'custom', 'dimension': 2,
                                                        'expression': 'y1^2 + y2^2'},
                                             'analyses': ['tensors'], 'numeric': fast_numeric})
    assert response.status_code == 422
    assert json.loads(response.data)['errors'][0]['type'] == 'NotHomogeneous'


def test_unknown_endpoint(client):
    response = client.get('/spectra')
    assert response.status_code == 404
    assert response.get_json() == {'error': 'Endpoint not found'}
