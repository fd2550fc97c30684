# app/__init__.py
import os
from flask import Flask
from app.config import DevelopmentConfig, ProductionConfig, TestingConfig, configure_logging
from app.models import db
from app.views import runs_blueprint

CONFIGS = {
    'development': DevelopmentConfig,
    'testing': TestingConfig,
    'production': ProductionConfig,
}

def create_app(config_class=None):
    """Creates and configures an instance of the Flask application."""
    app = Flask(__name__)

    # Load configuration from a class
    if config_class is None:
        if os.getenv('FLASK_ENV') == 'production':
            config_class = ProductionConfig
        else:
            config_class = CONFIGS.get(os.getenv('VORTEX_CONFIG', 'development'), DevelopmentConfig)
    app.config.from_object(config_class)

    configure_logging(app.config.get('LOG_LEVEL'))

    db.init_app(app)
    with app.app_context():
        db.create_all()

    app.register_blueprint(runs_blueprint)

    app.logger.info("Flask application created and configured successfully.")
    return app
