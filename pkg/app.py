"""
Finsler Rigidity API Server
Runs metric analyses and classifications over HTTP
"""

import os
import logging
from flask import Flask, request, jsonify, Response
from flask_cors import CORS
from dotenv import load_dotenv

from finsler_rigidity import __version__
from finsler_rigidity.config import load_run_config
from finsler_rigidity.errors import ConfigError, FinslerError
from finsler_rigidity.registry import MetricRegistry
from finsler_rigidity.report import dumps_report
from finsler_rigidity.runner import FinslerAnalysisRunner

# Load environment variables
load_dotenv()

# Configure logging
logging.basicConfig(level=getattr(logging, os.environ.get('FINSLER_LOG_LEVEL', 'INFO').upper(), logging.INFO))
logger = logging.getLogger(__name__)

# Initialize Flask app
app = Flask(__name__)
app.config['MAX_CONTENT_LENGTH'] = 1024 * 1024  # run configs are small

# Enable CORS
CORS(app, origins=['*'])

registry = MetricRegistry(os.environ.get('FINSLER_METRICS_DIR'))
runner = FinslerAnalysisRunner(registry)

# API Routes

@app.route('/', methods=['GET'])
def health_check():
    """Health check endpoint"""
    return jsonify({
        'status': 'healthy',
        'service': 'Finsler Rigidity API',
        'version': __version__,
        'families': registry.list_families(),
        'presets': len(registry.list_presets())
    })

@app.route('/metrics', methods=['GET'])
def list_metrics():
    """Metric families with parameter docs, then presets"""
    return jsonify(registry.describe())

@app.route('/analyze', methods=['POST'])
def analyze():
    """
    Run a configuration and return its report

    Expected JSON payload, same shape as a run file:
    {
        "metric": {"preset": "randers_non_berwald"},
        "analyses": ["classify"],
        "numeric": {"seed": 7}
    }
    """
    data = request.get_json(silent=True)
    if not isinstance(data, dict):
        return jsonify({'error': 'Request body must be a JSON run configuration'}), 400

    try:
        config = load_run_config(data)
    except ConfigError as e:
        logger.error(f"Rejected configuration: {e}")
        return jsonify({'error': str(e), 'details': e.to_dict()}), 400

    logger.info(f"Analyzing {config.metric} with {config.analyses}")
    try:
        outcome = runner.run(config, write=False)
    except FinslerError as e:
        logger.error(f"Analysis error: {e}")
        return jsonify({'error': str(e), 'details': e.to_dict()}), 422
    except Exception as e:
        logger.error(f"Analysis failed: {e}")
        return jsonify({'error': f'Analysis failed: {str(e)}'}), 500

    errors = outcome.report['errors']
    if errors:
        status = 400 if errors[0].get('type') == 'ConfigError' else 422
    else:
        status = 200
    response = Response(dumps_report(outcome.report), status=status, mimetype='application/json')
    response.headers['X-Exit-Code'] = str(outcome.exit_code)
    return response

# Error handlers
@app.errorhandler(404)
def not_found(error):
    return jsonify({'error': 'Endpoint not found'}), 404

@app.errorhandler(500)
def internal_error(error):
    return jsonify({'error': 'Internal server error'}), 500

if __name__ == '__main__':
    port = int(os.environ.get('FLASK_PORT', 5000))
    debug = os.environ.get('FLASK_DEBUG', 'False').lower() == 'true'

    logger.info(f"Starting Finsler Rigidity API on port {port}")
    logger.info(f"Debug mode: {debug}")

    app.run(host='0.0.0.0', port=port, debug=debug)
