"""Define custom exceptions for the biharmonic laboratory."""
from pumpwood_communication.exceptions import PumpWoodException


class PumpwoodBiharmonicException(PumpWoodException):
    """Class for General exceptions at the biharmonic laboratory."""

    status_code = 500

    exit_code = 1
    """Exit code used by the command line when the error reaches it."""


class PumpwoodBiharmonicConfigException(PumpwoodBiharmonicException):
    """Invalid run configuration or command line usage."""

    status_code = 400
    exit_code = 2


class PumpwoodBiharmonicPreconditionException(PumpwoodBiharmonicException):
    """An operation was called outside of its domain of validity."""

    status_code = 400
    exit_code = 2


class PumpwoodBiharmonicGridException(PumpwoodBiharmonicException):
    """Fields or grids that do not match each other."""

    status_code = 400
    exit_code = 1


class PumpwoodBiharmonicConvergenceException(PumpwoodBiharmonicException):
    """Quadrature self-convergence or iterative solver failure."""

    status_code = 500
    exit_code = 1
