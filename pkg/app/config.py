# app/config.py

import os
from dotenv import load_dotenv
import logging

# Load environment variables from .env file
load_dotenv()


def _int_env(name, default):
    value = os.getenv(name, "")
    return int(value) if value.isdigit() and int(value) > 0 else default


class Config:
    """Base configuration settings."""
    SECRET_KEY = os.getenv('SECRET_KEY', 'a_default_secret_key')
    DEBUG = False
    TESTING = False
    SQLALCHEMY_TRACK_MODIFICATIONS = False
    JSON_SORT_KEYS = False

    # Run artifacts
    OUTPUT_DIR = os.getenv("VORTEX_OUTPUT_DIR", "runs")
    FRAMES_EVERY = _int_env("VORTEX_FRAMES_EVERY", 10)
    THREADS = _int_env("VORTEX_THREADS", 1)
    LOG_LEVEL = os.getenv("VORTEX_LOG_LEVEL", "INFO")

    # Run registry
    SQLALCHEMY_DATABASE_URI = os.getenv("DATABASE_URL", "sqlite:///vortexkit.db")


class DevelopmentConfig(Config):
    """Development configuration."""
    DEBUG = True

class TestingConfig(Config):
    """In-memory registry, artifacts under a throwaway directory set by the test fixtures."""
    TESTING = True
    SQLALCHEMY_DATABASE_URI = "sqlite:///:memory:"
    LOG_LEVEL = "WARNING"

class ProductionConfig(Config):
    """Production configuration."""
    pass

def configure_logging(level=None):
    """Configures the logging for the application."""
    level = level or os.getenv("VORTEX_LOG_LEVEL", "INFO")
    logging.basicConfig(level=getattr(logging, str(level).upper(), logging.INFO),
                        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s')

    if os.getenv("VORTEX_THREADS") and not os.getenv("VORTEX_THREADS").isdigit():
        logging.warning(f"Invalid VORTEX_THREADS={os.getenv('VORTEX_THREADS')!r}; falling back to 1.")
