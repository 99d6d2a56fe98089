"""Exception types shared by the weightlab modules."""

from __future__ import annotations


class WeightlabError(Exception):
    """Base class; ``payload`` is a JSON-ready diagnostic."""

    kind = "error"

    def __init__(self, message: str, **payload):
        super().__init__(message)
        self.message = message
        self.payload = payload

    def to_dict(self) -> dict:
        return {"error": self.kind, "message": self.message, **self.payload}


class InvalidArgument(WeightlabError, ValueError):
    kind = "invalid-argument"


class DomainError(WeightlabError, ValueError):
    """Evaluation requested outside a validity domain (horizon, t=0 for inverses, ...)."""

    kind = "domain-error"


class HorizonError(DomainError):
    """An optimizer could not localize its sup/inf inside the search window."""

    kind = "horizon-error"


class PreconditionViolation(WeightlabError, ValueError):
    kind = "precondition-violation"


class WellDefinednessError(DomainError):
    """Raised by the upper conjugate when the guard rules out a finite sup."""

    kind = "well-definedness-error"


class InternalError(WeightlabError, RuntimeError):
    kind = "internal-error"
