from flask import Flask
from config import config
import logging
import os
from dotenv import load_dotenv

# Carica variabili ambiente da .env
load_dotenv()


def create_app(config_name=None):
    app = Flask(__name__)

    if config_name is None:
        config_name = os.environ.get('FLASK_ENV', 'default')

    app.config.from_object(config[config_name])
    app.json.sort_keys = False

    logging.basicConfig(level=app.config['LOG_LEVEL'],
                        format='%(asctime)s %(levelname)s %(name)s: %(message)s')
    logging.getLogger('app').setLevel(app.config['LOG_LEVEL'])

    # Register blueprints
    from app.api import bp as api_bp
    app.register_blueprint(api_bp, url_prefix='/api')

    # Batch commands: flask casimir eps|curve|compare
    from app.cli import cli
    app.cli.add_command(cli)

    return app
