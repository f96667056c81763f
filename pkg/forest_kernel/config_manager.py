"""
Configuration manager for forest configuration files.
Loads JSON (or YAML) files into ConfigFile models and writes them back.
"""

import json
import logging
from pathlib import Path
from typing import Any, Optional, Union

import yaml
from pydantic import ValidationError

from .errors import ConfigFileError, ForestKernelError
from .schemas import ConfigFile

logger = logging.getLogger(__name__)

YAML_SUFFIXES = (".yaml", ".yml")


class ConfigManager:
    """
    Manages one configuration file.
    """

    def __init__(self, config_path: Union[str, Path]):
        """
        Initialize configuration manager.

        Args:
            config_path: Path to a .json, .yaml or .yml file
        """
        self.config_path = Path(config_path)
        self.config: Optional[ConfigFile] = None
        logger.debug(f"Config manager initialized with {config_path}")

    @property
    def is_yaml(self) -> bool:
        return self.config_path.suffix.lower() in YAML_SUFFIXES

    def load(self) -> ConfigFile:
        """
        Load and validate the configuration file.

        Returns:
            ConfigFile instance

        Raises:
            ConfigFileError: missing file, syntax error (with line and
                column) or invalid contents
        """
        if not self.config_path.exists():
            raise ConfigFileError(f"Config file not found: {self.config_path}")

        try:
            text = self.config_path.read_text(encoding="utf-8")
        except (OSError, UnicodeDecodeError) as e:
            raise ConfigFileError(f"Cannot read {self.config_path}: {e}") from e

        data = self.parse(text)
        self.config = self.validate(data)
        logger.info(
            f"Configuration loaded: {len(self.config.roots)} roots, "
            f"{len(self.config.vertices)} vertices, kernel {self.config.kernel.kind}"
        )
        return self.config

    def parse(self, text: str) -> Any:
        """Parse raw text according to the file suffix."""
        if self.is_yaml:
            try:
                data = yaml.safe_load(text)
            except yaml.YAMLError as e:
                mark = getattr(e, "problem_mark", None)
                problem = getattr(e, "problem", None) or "invalid YAML"
                if mark is not None:
                    raise ConfigFileError(f"YAML parse error: {problem}", mark.line + 1, mark.column + 1) from e
                raise ConfigFileError(f"YAML parse error: {problem}") from e
        else:
            try:
                data = json.loads(text)
            except json.JSONDecodeError as e:
                raise ConfigFileError(f"JSON parse error: {e.msg}", e.lineno, e.colno) from e

        if not isinstance(data, dict):
            raise ConfigFileError("Config file must contain an object at the top level")
        return data

    @staticmethod
    def validate(data: Any) -> ConfigFile:
        try:
            return ConfigFile.model_validate(data)
        except ValidationError as e:
            first = e.errors()[0]
            location = ".".join(str(part) for part in first["loc"]) or "<root>"
            raise ConfigFileError(f"Invalid config at {location}: {first['msg']}") from e
        except ForestKernelError as e:
            raise ConfigFileError(f"Invalid config: {e}") from e

    def save(self, config: ConfigFile, path: Optional[Union[str, Path]] = None) -> Path:
        """
        Save configuration to JSON or YAML (by suffix).

        Args:
            config: Configuration to save
            path: Target path (default: the managed path)

        Returns:
            The path written
        """
        target = Path(path) if path is not None else self.config_path
        data = config.model_dump(mode="json", exclude_none=True)
        target.parent.mkdir(parents=True, exist_ok=True)

        if target.suffix.lower() in YAML_SUFFIXES:
            text = yaml.safe_dump(data, default_flow_style=False, sort_keys=False)
        else:
            text = json.dumps(data, indent=2) + "\n"
        target.write_text(text, encoding="utf-8")

        logger.info(f"Configuration saved to {target}")
        return target
