"""Exception types shared across the package.

The CLI maps these onto its exit-code contract: structural problems
(malformed input, out-of-range indices, undersized instances, search
limits) exit 1, while semantic rejection of a well-formed plan is not
an exception at all; it is a verdict carried by the report objects.
"""

from __future__ import annotations


class StructuralError(ValueError):
    """Malformed input: out-of-range index, bad schema, wrong session."""


class FormulaDomainError(ValueError):
    """A closed-form value was requested outside its validity range."""


class InstanceTooSmallError(ValueError):
    """A scheme generator needs more users than the requested network has."""


class SearchLimitExceededError(RuntimeError):
    """An exhaustive search was refused because the instance is too large."""

    def __init__(self, message: str, estimated_nodes: float):
        super().__init__(message)
        self.estimated_nodes = estimated_nodes


class ContractViolationError(RuntimeError):
    """A simulation hit a state the feasibility checker should have excluded."""
