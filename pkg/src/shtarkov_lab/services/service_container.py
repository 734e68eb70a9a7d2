"""Service container holding the active run configuration.

Tools read the configuration from here instead of threading it through every
call; the container imports nothing from the tools, so there are no cycles.
"""

from typing import TYPE_CHECKING

if TYPE_CHECKING:
    from shtarkov_lab.config.schema import RunConfig
    from shtarkov_lab.core.hypothesis import HypothesisClass


class ServiceContainer:
    """Container for the configuration and the loaded hypothesis class."""

    _config: "RunConfig | None" = None
    _hypothesis_class: "HypothesisClass | None" = None

    @classmethod
    def set_config(cls, config: "RunConfig") -> None:
        cls._config = config
        cls._hypothesis_class = None

    @classmethod
    def get_config(cls) -> "RunConfig":
        """Get the active configuration.

        Raises:
            RuntimeError: If configuration has not been initialized
        """
        if cls._config is None:
            raise RuntimeError("Configuration not initialized")
        return cls._config

    @classmethod
    def get_class(cls) -> "HypothesisClass":
        """The class named by `spec_path`, loaded once per configuration.

        Raises:
            RuntimeError: If configuration has not been initialized
            ValidationError: If no spec is configured or the spec is invalid
        """
        from shtarkov_lab.services.class_loader import parse_class_spec
        from shtarkov_lab.shared.exceptions import ValidationError

        config = cls.get_config()
        if cls._hypothesis_class is None:
            if config.spec_path is None:
                raise ValidationError("no class spec given (use --spec)", "spec")
            _, _, cls._hypothesis_class = parse_class_spec(config.spec_path)
        return cls._hypothesis_class

    @classmethod
    def reset(cls) -> None:
        cls._config = None
        cls._hypothesis_class = None

    @classmethod
    def is_initialized(cls) -> bool:
        return cls._config is not None
