"""Exception hierarchy shared across the package.

The CLI maps these onto exit codes, so every module raises one of these
(or a subclass) rather than bare built-in exceptions for data problems.
"""

from __future__ import annotations


class TremuError(Exception):
    """Base class for all package errors."""

    kind = "TremuError"

    def to_dict(self) -> dict:
        return {"error": self.kind, "message": str(self)}


class DataError(TremuError):
    """Malformed or inconsistent input data."""

    kind = "DataError"


class FormatError(DataError):
    """Text or file does not have a recognised shape."""

    kind = "FormatError"


class DomainError(DataError):
    """A well-formed value that denotes nothing (e.g. February 30)."""

    kind = "DomainError"


class ContractError(TremuError, ValueError):
    """A caller violated an operation precondition."""

    kind = "ContractError"


class MismatchError(DataError):
    """Answer records and questions do not line up one-to-one."""

    kind = "MismatchError"


class InsufficientMaterial(DataError):
    """The event pool cannot satisfy the requested question targets."""

    kind = "InsufficientMaterial"


class AmbiguityError(TremuError):
    """Two answer options normalise to the value being matched."""

    kind = "AmbiguityError"


class ConfigError(TremuError):
    kind = "ConfigError"


class GatewayError(TremuError):
    """Any failure talking to (or standing in for) a language model."""

    kind = "GatewayError"


class MissingFixture(GatewayError):
    kind = "MissingFixture"


class TransportError(GatewayError):
    kind = "TransportError"


class AuthError(GatewayError):
    kind = "AuthError"
