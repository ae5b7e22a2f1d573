"""
Configuration management for ModularFlow.
Handles loading run defaults, tolerances and report settings from a config file.
"""

import copy
import json
import sys
from pathlib import Path
from typing import Any, Dict, Optional

# Default configuration values
DEFAULT_CONFIG = {
    "defaults": {
        "epsilon": 0.01,
        "delta": 0.1,
        "kappa": 8.0,
        "time": 1.0,
        "seed": 0,
        "grid": 1000,
        "zero_tol": 1e-12,
        "degree_cap": 1000000,
        "workers": 4,
        "mode": "polynomial",  # Options: "exact", "polynomial"
        "qpe_bits": None
    },
    "tolerances": {
        "admissibility": 1e-9,
        "exact_identity": 1e-10
    },
    "report": {
        "schema_version": 1,
        "csv_name": "report.csv",
        "summary_name": "summary.json",
        "float_digits": 17
    },
    "sweeps": {
        "kappas": [32.0, 64.0, 128.0, 256.0],
        "times": [1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 64.0],
        "kappa_slope": [1.7, 2.3],
        "time_kappa": 256.0,
        "time_slope": [0.8, 1.2]
    }
}


def merge_config(base: Dict[str, Any], override: Dict[str, Any]) -> Dict[str, Any]:
    """Merge override over base section by section; unknown sections are kept."""
    merged = copy.deepcopy(base)
    for section, values in override.items():
        if isinstance(values, dict) and isinstance(merged.get(section), dict):
            merged[section].update(values)
        else:
            merged[section] = copy.deepcopy(values)
    return merged


class ConfigManager:
    """Manages application configuration."""

    def __init__(self, config_file: str = "config.json", strict: bool = False):
        """
        Initialize config manager.

        Args:
            config_file: Path to the configuration file
            strict: Raise instead of falling back to defaults when the file is
                    missing or does not parse (used for an explicit --config)
        """
        self.strict = strict
        # Resolve config file path - support both dev and exe environments
        self._bundled_path: Optional[Path] = None
        if strict:
            self.config_file = Path(config_file)
        elif getattr(sys, 'frozen', False):
            # Running as compiled exe (PyInstaller)
            # The bundled config (read-only) lives in sys._MEIPASS
            meipass = getattr(sys, '_MEIPASS', None)
            if meipass:
                self._bundled_path = Path(meipass) / config_file

            # External config next to the executable overrides the bundled one
            self.config_file = Path(sys.executable).parent / config_file
        else:
            # Running as Python script - look in current directory first
            config_path = Path(config_file)
            if config_path.exists():
                self.config_file = config_path
            else:
                # Fall back to script directory
                self.config_file = Path(__file__).parent / config_file

        self.config: Dict[str, Any] = {}
        self.load_config()

    def _read(self, path: Path) -> Dict[str, Any]:
        with open(path, 'r', encoding='utf-8') as f:
            data = json.load(f)
        if not isinstance(data, dict):
            raise ValueError(f"Config file {path} must contain a JSON object")
        return data

    def load_config(self) -> None:
        """Load configuration from file or use defaults. Never writes files."""
        if self.strict:
            # Missing or broken explicit config is a usage error
            self.config = merge_config(DEFAULT_CONFIG, self._read(self.config_file))
            return

        self.config = copy.deepcopy(DEFAULT_CONFIG)

        # If running frozen, prefer bundled config, but allow external override
        if self._bundled_path and self._bundled_path.exists():
            try:
                self.config = merge_config(self.config, self._read(self._bundled_path))
            except (OSError, ValueError):
                pass

        if self.config_file.exists():
            try:
                self.config = merge_config(self.config, self._read(self.config_file))
            except (OSError, ValueError):
                # Keep bundled/default config
                pass

    def get(self, section: str, key: str) -> Any:
        """
        Get a configuration value strictly.

        Raises KeyError if section or key is missing. Experiments read every
        default through here so a broken config fails before any computation.
        """
        if section not in self.config:
            raise KeyError(f"Config section '{section}' not found")
        if key not in self.config[section]:
            raise KeyError(f"Config key '{key}' not found in section '{section}'")
        return self.config[section][key]

    def get_section(self, section: str) -> Dict[str, Any]:
        """
        Get entire configuration section strictly.

        Raises KeyError if section is missing.
        """
        if section not in self.config:
            raise KeyError(f"Config section '{section}' not found")
        return self.config[section]

    def get_all(self) -> Dict[str, Any]:
        """Get entire configuration dictionary."""
        return copy.deepcopy(self.config)


# Global config instance
_config_manager = None


def get_config_manager(config_file: str = "config.json") -> ConfigManager:
    """
    Get or create the global config manager instance.

    Args:
        config_file: Path to the configuration file

    Returns:
        ConfigManager instance
    """
    global _config_manager
    if _config_manager is None:
        _config_manager = ConfigManager(config_file)
    return _config_manager
