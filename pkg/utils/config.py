# Configuration - SybilEdge
import json
import math
import os

from utils.errors import ConfigError

# Partition des utilisateurs par nombre de demandes envoyées
FINE_BUCKETS = "0:5,6:10,11:15,16:20,21:25,26:30,31:35,36:40,41:45,46:"
COARSE_BUCKETS = "0:10,11:20,21:45,46:"


def _env_float(name, default):
    value = os.environ.get(name)
    return float(value) if value is not None else default


def _env_int(name, default):
    value = os.environ.get(name)
    return int(value) if value is not None else default


class Config:
    """Configuration de base"""

    # Estimation des taux
    CLAMP_EPS = _env_float('SYBILEDGE_CLAMP_EPS', 1e-6)
    # Sized for desk-scale scenarios (n=10000, ~10^5 labeled requests)
    SIGMA = _env_float('SYBILEDGE_SIGMA', 1e5)
    PHI = _env_float('SYBILEDGE_PHI', 5.0)

    # Exécution
    THREADS = _env_int('SYBILEDGE_THREADS', 1)
    SEEDS = (1, 2, 3, 4, 5)
    BUCKETS = os.environ.get('SYBILEDGE_BUCKETS', FINE_BUCKETS)

    # Baselines (SybilSCAR)
    SCAR_THETA_FAKE = 0.9
    SCAR_THETA_REAL = 0.1
    SCAR_THETA_UNKNOWN = 0.5
    SCAR_TOL = 1e-4

    # Générateurs synthétiques
    MAX_STUB_RETRIES = _env_int('SYBILEDGE_MAX_STUB_RETRIES', 50)

    # Journalisation
    LOG_LEVEL = os.environ.get('SYBILEDGE_LOG_LEVEL', 'INFO')
    LOG_FORMAT = '%(asctime)s %(levelname)s %(name)s: %(message)s'


class DevelopmentConfig(Config):
    """Configuration pour le développement"""
    DEBUG = True
    LOG_LEVEL = os.environ.get('SYBILEDGE_LOG_LEVEL', 'DEBUG')


class ProductionConfig(Config):
    """Configuration pour la production"""
    DEBUG = False
    THREADS = _env_int('SYBILEDGE_THREADS', os.cpu_count() or 1)


class TestingConfig(Config):
    """Configuration pour les tests"""
    TESTING = True
    THREADS = 1
    LOG_LEVEL = 'WARNING'


# Sélection de la configuration basée sur l'environnement
config = {
    'development': DevelopmentConfig,
    'production': ProductionConfig,
    'testing': TestingConfig,
    'default': Config
}


def get_config():
    """Retourne la configuration appropriée selon l'environnement"""
    env = os.environ.get('SYBILEDGE_ENV', 'default')
    return config.get(env, config['default'])


# -------------------- Flat key=value files --------------------

def load_kv_file(path):
    """
    Parse a flat key=value configuration file.

    Blank lines and lines starting with '#' are ignored; inline text after '#'
    is a comment too.

    Args:
        path (str): Path to the configuration file

    Returns:
        dict: key -> (raw string value, line number)
    """
    entries = {}
    try:
        with open(path, 'r', encoding='utf-8') as f:
            lines = f.readlines()
    except OSError as e:
        raise ConfigError(f"cannot read config file {path}: {e}")

    for line_no, raw in enumerate(lines, start=1):
        line = raw.split('#', 1)[0].strip()
        if not line:
            continue
        if '=' not in line:
            raise ConfigError(f"expected key=value, got {raw.strip()!r}", line=line_no)
        key, value = (part.strip() for part in line.split('=', 1))
        if not key:
            raise ConfigError("empty key", line=line_no)
        if key in entries:
            raise ConfigError(f"duplicate key '{key}' (first set on line {entries[key][1]})",
                              key=key, line=line_no)
        entries[key] = (value, line_no)
    return entries


def require(entries, key):
    """Return the raw value of a required key, or fail naming the key."""
    if key not in entries:
        raise ConfigError(f"missing required key '{key}'", key=key)
    return entries[key][0]


def _convert(entries, key, default, convert, kind):
    if key not in entries:
        return default
    value, line_no = entries[key]
    try:
        return convert(value)
    except ValueError:
        raise ConfigError(f"key '{key}' expects {kind}, got {value!r}", key=key, line=line_no)


def parse_float_or_inf(value):
    """float() that also accepts 'inf' / 'infinity' in any case."""
    text = str(value).strip().lower()
    if text in ('inf', '+inf', 'infinity'):
        return math.inf
    return float(text)


def get_float(entries, key, default=None):
    return _convert(entries, key, default, parse_float_or_inf, "a number")


def get_int(entries, key, default=None):
    return _convert(entries, key, default, int, "an integer")


def get_bool(entries, key, default=False):
    def to_bool(text):
        lowered = text.lower()
        if lowered in ('1', 'true', 'yes', 'on'):
            return True
        if lowered in ('0', 'false', 'no', 'off'):
            return False
        raise ValueError(text)
    return _convert(entries, key, default, to_bool, "a boolean")


def get_list(entries, key, default=None, item=str):
    """Comma-separated list, each element converted with `item`."""
    def to_list(text):
        return [item(part.strip()) for part in text.split(',') if part.strip()]
    return _convert(entries, key, default, to_list, "a comma-separated list")


def get_str(entries, key, default=None):
    return entries[key][0] if key in entries else default


def echo(entries):
    """Resolved configuration as a plain dict (for output headers)."""
    return {key: value for key, (value, _) in sorted(entries.items())}


def dumps_config(mapping):
    """Compact, key-sorted JSON used in file headers and reports."""
    return json.dumps(mapping, sort_keys=True, separators=(',', ':'), default=str)
