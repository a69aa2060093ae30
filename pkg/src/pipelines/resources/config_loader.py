import os
import yaml
from typing import Dict, Any, Optional

from src.pipelines.resources.takagi_errors import ConfigError

class ConfigLoader:
    """
    A class for loading and accessing configuration from the YAML file.
    """
    _instance = None
    _config = None

    def __new__(cls):
        """Singleton pattern to ensure only one instance of ConfigLoader exists."""
        if cls._instance is None:
            cls._instance = super(ConfigLoader, cls).__new__(cls)
            cls._instance._load_config()
        return cls._instance

    @staticmethod
    def default_config_path() -> str:
        return os.path.join(os.path.dirname(os.path.dirname(os.path.dirname(os.path.dirname(__file__)))),
                            "configs", "config.yml")

    def _load_config(self) -> None:
        """Load the configuration from the YAML file."""
        self._config = load_yaml_file(self.default_config_path())

    def _section(self, name: str) -> Dict[str, Any]:
        if not self._config or name not in self._config:
            raise ConfigError(f"Configuration section '{name}' not found")

        return self._config[name]

    def get_logging_config(self) -> Dict[str, Any]:
        """Get logging configuration."""
        return self._section('logging')

    def get_limits_config(self) -> Dict[str, Any]:
        """Get memory cap and oracle cell budget."""
        return self._section('limits')

    def get_runtime_config(self) -> Dict[str, Any]:
        """Get worker count and output directory settings."""
        return self._section('runtime')

    def get_output_config(self) -> Dict[str, Any]:
        """Get CSV rendering settings."""
        return self._section('output')

    def get_render_config(self) -> Dict[str, Any]:
        """Get SVG rendering settings."""
        return self._section('render')

    def get_experiment_config(self, command: str) -> Dict[str, Any]:
        """
        Get the default parameters of a CLI command.

        Args:
            command: Name of the command section (e.g., 'verify', 'boxdim', 'assouad')

        Returns:
            Dict with the command defaults, empty if the section is absent
        """
        if not self._config:
            raise ConfigError("Configuration not loaded or invalid")

        return dict(self._config.get(command) or {})

    def get_preset(self, name: str) -> Dict[str, Any]:
        """
        Get a named coefficient sequence preset.

        Args:
            name: Name of the preset (e.g., 'classical', 'signal', 'van_der_waerden')

        Returns:
            Dict in the coefficient sequence interface format
        """
        presets = self._section('presets')
        if name not in presets:
            raise ConfigError(f"Preset '{name}' not found in configuration; known presets: {sorted(presets)}")

        return dict(presets[name])

    def get_config_value(self, *keys: str, default: Optional[Any] = None) -> Any:
        """
        Look up a nested value, e.g. get_config_value('limits', 'mem_cap').

        Args:
            *keys: Section name followed by nested keys
            default: Returned when any key along the path is missing or null

        Returns:
            The configured value or the default
        """
        node: Any = self._config
        for key in keys:
            if not isinstance(node, dict) or node.get(key) is None:
                return default
            node = node[key]
        return node


def load_yaml_file(path: str) -> Dict[str, Any]:
    """Read a YAML mapping; run files and the central config share this reader."""
    try:
        with open(path, 'r', encoding='utf-8') as file:
            loaded = yaml.safe_load(file)
    except FileNotFoundError:
        raise ConfigError(f"Configuration file not found at {path}")
    except yaml.YAMLError as e:
        raise ConfigError(f"Error parsing YAML configuration: {e}")

    if loaded is None:
        return {}
    if not isinstance(loaded, dict):
        raise ConfigError(f"Configuration at {path} must be a mapping, got {type(loaded).__name__}")

    return loaded

# Create a singleton instance for easy import
config = ConfigLoader()
