class SchemaError(ValueError):
    """Input file or configuration does not match its schema."""


class NumericDomainError(ArithmeticError):
    """A quantity was requested outside the domain where it is defined."""


class PersistencyError(NumericDomainError):
    """The direction sequence is not persistently exciting (beta = 0)."""
