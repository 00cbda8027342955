"""
MIT License

Copyright (c) 2023-present japandotorg
"""

from typing import Optional

__all__ = (
    "BRBError",
    "ConfigurationError",
    "InvalidChainError",
    "AcyclicityViolation",
    "UnknownSignerError",
    "ProtocolViolation",
    "FilteredInputViolation",
    "AdversaryContractError",
    "MalformedTraceError",
)


class BRBError(Exception):
    """Base exception class."""


class ConfigurationError(BRBError):
    """Raised when a scenario, descriptor or key registry is inconsistent."""


class InvalidChainError(BRBError):
    """Raised when a signature chain cannot be built."""


class AcyclicityViolation(InvalidChainError):
    """Raised when a process would sign a chain it already appears in."""

    def __init__(self, signer: int, chain: str) -> None:
        self.signer: int = signer
        self.chain: str = chain
        super().__init__(f"Process {signer} already signed {chain}.")


class UnknownSignerError(BRBError):
    """Raised when a process id has no key in the registry."""

    def __init__(self, signer: int) -> None:
        self.signer: int = signer
        super().__init__(f"No key registered for process {signer}.")


class ProtocolViolation(BRBError):
    """Raised when a process state machine is driven out of order."""


class FilteredInputViolation(ProtocolViolation):
    """Raised when a state machine is handed a chain the reception filter should have dropped."""


class AdversaryContractError(BRBError):
    """
    Raised when the adversary controller steps outside the Byzantine model,
    e.g. by asking for a correct process's key.
    """

    def __init__(self, message: str, *, process: Optional[int] = None) -> None:
        self.process: Optional[int] = process
        super().__init__(message)


class MalformedTraceError(BRBError):
    """Raised when a trace document cannot be decoded."""
