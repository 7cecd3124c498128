"""
Simulator Error Handling

Typed exceptions shared by every module, plus the mapping from pydantic
validation failures to configuration errors.

Error Code Reference:
- CONFIG_ERROR: invalid or unknown configuration values
- DOMAIN_ERROR: arguments outside a function's mathematical domain
- DECODE_ERROR: truncated or malformed APM wire buffers
"""

from typing import Any

from pydantic import ValidationError


class SimulatorError(Exception):
    """Base exception for all simulator errors."""

    error_code: str = "SIMULATOR_ERROR"

    def __init__(self, message: str, **kwargs: Any):
        super().__init__(message)
        self.message = message
        self.details = kwargs

    def to_dict(self) -> dict:
        """Convert error to a JSON-friendly payload."""
        payload: dict[str, Any] = {
            "error": {
                "code": self.error_code,
                "message": self.message,
            }
        }
        for key, value in self.details.items():
            payload["error"][key] = value
        return payload

    def __str__(self) -> str:
        return f"[{self.error_code}] {self.message}"


class ConfigurationError(SimulatorError):
    """Configuration is inconsistent, out of range, or contains unknown keys."""

    error_code = "CONFIG_ERROR"


class DomainError(SimulatorError, ValueError):
    """Argument outside the domain of a geometric or radio formula."""

    error_code = "DOMAIN_ERROR"


class ApmDecodeError(SimulatorError):
    """APM buffer could not be decoded."""

    error_code = "DECODE_ERROR"

    def __init__(self, message: str, offset: int, **kwargs: Any):
        super().__init__(message, offset=offset, **kwargs)
        self.offset = offset


def map_validation_error(error: ValidationError, source: str | None = None) -> ConfigurationError:
    """
    Map a pydantic ValidationError to a ConfigurationError.

    Args:
        error: Validation failure raised while building a config model
        source: Optional file name or flag the values came from

    Returns:
        ConfigurationError listing the offending fields
    """
    fields: list[str] = []
    problems: list[str] = []
    for item in error.errors():
        location = ".".join(str(part) for part in item.get("loc", ())) or "<root>"
        fields.append(location)
        problems.append(f"{location}: {item.get('msg', 'invalid value')}")

    message = "; ".join(problems) or str(error)
    if source:
        message = f"{source}: {message}"
        return ConfigurationError(message, fields=fields, source=source)
    return ConfigurationError(message, fields=fields)
