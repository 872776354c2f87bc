"""Shared exception types.

Everything raised on purpose by this package derives from WalgebraError,
except the scalar-field arithmetic errors which live in scalars.py (they
subclass ArithmeticError so numeric call sites can catch them uniformly).
"""


class WalgebraError(Exception):
    """Base class for structural errors."""


class MixedTables(WalgebraError):
    """Operands built over different generator tables."""


class NonIntegralExponents(WalgebraError):
    """Lattice vertex operator would need a non-integer z-exponent."""


class NotUnimodal(WalgebraError):
    """Column profile fails the unimodality requirement."""


class InvalidColumn(WalgebraError):
    """Column index out of range or otherwise unusable."""


class InvalidShape(WalgebraError):
    """Shape data inconsistent with the requested construction."""


class SingularSystem(WalgebraError):
    """A linear solve that must be triangular/regular was not."""


class NoSolution(WalgebraError):
    """An overdetermined solve has empty solution set."""


class NonUniqueSolution(WalgebraError):
    """A solve expected to pin values uniquely has a free direction."""


class BadSplit(WalgebraError):
    """Column split produces an invalid factor."""


class ShapeMismatch(WalgebraError):
    """Operator/matrix dimensions incompatible."""
