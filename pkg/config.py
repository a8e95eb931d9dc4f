import os
from dotenv import load_dotenv

# Carica variabili ambiente
load_dotenv()


def env_int(name, default):
    value = os.environ.get(name)
    if value is None or value.strip() == '':
        return default
    try:
        return int(value)
    except ValueError:
        raise ValueError(f'{name} must be an integer, got "{value}"')


class Config:
    # Output e logging
    OUTPUT_DIR = os.environ.get('CASIMIR_OUTPUT_DIR') or 'output'
    LOG_LEVEL = (os.environ.get('CASIMIR_LOG_LEVEL') or 'INFO').upper()

    # Limiti di calcolo
    MAX_GRID_POINTS = env_int('CASIMIR_MAX_GRID_POINTS', 400)
    L_CAP = env_int('CASIMIR_L_CAP', 5000)

    MAX_CONTENT_LENGTH = 1 * 1024 * 1024  # 1MB max request body


class DevelopmentConfig(Config):
    DEBUG = True


class ProductionConfig(Config):
    DEBUG = False


class TestingConfig(Config):
    TESTING = True
    LOG_LEVEL = 'WARNING'
    MAX_GRID_POINTS = 20


config = {
    'development': DevelopmentConfig,
    'production': ProductionConfig,
    'testing': TestingConfig,
    'default': DevelopmentConfig
}
