"""Exception types shared across the package."""

from __future__ import annotations


class GroupoidModelsError(ValueError):
    """Base class; carries an optional JSON-friendly ``witness``."""

    def __init__(self, message, witness=None):
        super().__init__(message)
        self.witness = witness


class StructuralError(GroupoidModelsError):
    """Input tables or partitions are not compatible with the groupoid axioms."""


class CriterionViolation(GroupoidModelsError):
    """A measure-level condition (Haar weights, pushforward agreement) fails."""


class VerificationError(GroupoidModelsError):
    """A built object failed one of its verification checks."""

    def __init__(self, message, check=None, witness=None):
        super().__init__(message, witness)
        self.check = check
