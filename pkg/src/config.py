"""Configuration file handler for the shrinkage toolkit."""

import os
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Any, List, Optional

import yaml

from .errors import ValidationError


THREADS_ENV = 'SHRINKAGE_THREADS'


@dataclass(frozen=True)
class GuardSettings:
    """Numerical floors applied inside the Gibbs conditionals."""

    theta_floor: float = 1e-10  # |theta_j| floor in the chi terms of the psi, tau and phi steps
    chi_floor: float = 1e-12    # lower clamp on any giG chi argument


DEFAULT_GUARDS = GuardSettings()


class Config:
    """Configuration handler backed by an optional YAML file."""

    def __init__(self, config_path: Optional[str] = None):
        """
        Initialize the configuration handler.

        Args:
            config_path: Path to the YAML configuration file; None uses defaults only
        """
        self.config_path = Path(config_path) if config_path else None
        self.config: Dict[str, Any] = {}
        self._load_config()
        self._validate_config()

    def _load_config(self) -> None:
        """Load configuration from YAML file."""
        if self.config_path is None:
            return

        if not self.config_path.exists():
            raise FileNotFoundError(f"Configuration file not found: {self.config_path}")

        with open(self.config_path, 'r') as f:
            loaded = yaml.safe_load(f) or {}

        if not isinstance(loaded, dict):
            raise ValidationError(f"Configuration root must be a mapping: {self.config_path}")
        self.config = loaded

    def _validate_config(self) -> None:
        """Validate configuration structure and set defaults."""
        for section in ('general', 'simulation', 'chain', 'prior', 'sampler', 'cache', 'bl'):
            if self.config.get(section) is None:
                self.config[section] = {}
            elif not isinstance(self.config[section], dict):
                raise ValidationError(f"Configuration section '{section}' must be a mapping")

        general = self.config['general']
        general.setdefault('log_level', 'WARNING')

        simulation = self.config['simulation']
        simulation.setdefault('n', 100)
        simulation.setdefault('q', 5)
        simulation.setdefault('signal', 7.0)
        simulation.setdefault('signal_blocks', None)
        simulation.setdefault('replicates', 20)
        simulation.setdefault('methods', ['dl', 'bl', 'hs'])
        simulation.setdefault('base_seed', 20240101)
        simulation.setdefault('threads', 1)

        chain = self.config['chain']
        chain.setdefault('iterations', 10000)
        chain.setdefault('burn_in', 5000)
        chain.setdefault('thin', 1)
        chain.setdefault('store_latents', False)

        prior = self.config['prior']
        prior.setdefault('a', None)
        prior.setdefault('a_grid', None)

        sampler = self.config['sampler']
        sampler.setdefault('theta_floor', DEFAULT_GUARDS.theta_floor)
        sampler.setdefault('chi_floor', DEFAULT_GUARDS.chi_floor)

        cache = self.config['cache']
        cache.setdefault('enabled', False)
        cache.setdefault('directory', '.shrinkage_cache')

        bl = self.config['bl']
        bl.setdefault('r', 1.0)
        bl.setdefault('delta', 1.0)

    def get(self, key: str, default: Any = None) -> Any:
        """
        Get a configuration value.

        Args:
            key: Configuration key (supports dot notation, e.g., 'chain.burn_in')
            default: Default value if key not found

        Returns:
            Configuration value or default
        """
        keys = key.split('.')
        value = self.config

        for k in keys:
            if isinstance(value, dict) and k in value:
                value = value[k]
            else:
                return default

        return value

    def override(self, key: str, value: Any) -> None:
        """
        Set a value from a command-line flag; None leaves the file/default value.

        Args:
            key: Dot-notation key
            value: New value, or None to keep the current one
        """
        if value is None:
            return
        section, _, leaf = key.rpartition('.')
        target = self.config
        for k in section.split('.') if section else []:
            target = target.setdefault(k, {})
        target[leaf] = value

    @property
    def log_level(self) -> str:
        """Get the configured log level."""
        return self.get('general.log_level', 'WARNING')

    @property
    def methods(self) -> List[str]:
        """Get the method labels to run."""
        methods = self.get('simulation.methods', [])
        if isinstance(methods, str):
            methods = [m.strip() for m in methods.split(',') if m.strip()]
        return list(methods)

    @property
    def threads(self) -> int:
        """Get the worker count; the SHRINKAGE_THREADS environment variable wins."""
        env_value = os.getenv(THREADS_ENV)
        if env_value:
            try:
                return max(1, int(env_value))
            except ValueError:
                raise ValidationError(f"{THREADS_ENV} must be an integer, got '{env_value}'")
        return max(1, int(self.get('simulation.threads', 1)))

    @property
    def guards(self) -> GuardSettings:
        """Get the numerical floors for the Gibbs conditionals."""
        return GuardSettings(
            theta_floor=float(self.get('sampler.theta_floor', DEFAULT_GUARDS.theta_floor)),
            chi_floor=float(self.get('sampler.chi_floor', DEFAULT_GUARDS.chi_floor)),
        )

    @property
    def cache_enabled(self) -> bool:
        """Check if the replicate cache is enabled."""
        return bool(self.get('cache.enabled', False))

    @property
    def cache_directory(self) -> str:
        """Get the cache directory path."""
        return self.get('cache.directory', '.shrinkage_cache')

    @property
    def bl_hyperparameters(self) -> tuple:
        """Get the (shape, rate) of the gamma hyperprior on the lasso penalty."""
        return float(self.get('bl.r', 1.0)), float(self.get('bl.delta', 1.0))
