"""
Exceptions raised when a lemma's hypotheses or an input file are not as required.
"""

from typing import Any, Optional, Sequence


class HypothesisError(ValueError):
    """
    A precondition of a lemma or theorem-level operation does not hold.

    Attributes:
        hypothesis: Short name of the failed condition
        witness: Indices or members exhibiting the failure
    """

    def __init__(
        self, hypothesis: str, message: str, witness: Optional[Sequence[Any]] = None
    ):
        super().__init__(f"{hypothesis}: {message}")
        self.hypothesis = hypothesis
        self.message = message
        self.witness = list(witness) if witness is not None else []


class FamilyFormatError(ValueError):
    """Malformed family text, reported with the 1-based line it was found on."""

    def __init__(self, line_number: int, message: str):
        super().__init__(f"line {line_number}: {message}")
        self.line_number = line_number
        self.message = message


class CertificateFormatError(FamilyFormatError):
    """Malformed serialized certificate."""
