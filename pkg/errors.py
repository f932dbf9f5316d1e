"""
Exception family for the detector-mediation library.

Every error carries a human-readable ``detail`` and the process exit code the
CLI uses when the error escapes a command.
"""

from typing import Optional


class UDWError(Exception):
    exit_code = 1

    def __init__(self, detail: str):
        super().__init__(detail)
        self.detail = detail


class DomainError(UDWError, ValueError):
    """Input outside the domain of an operation (angles, probabilities, kinds)."""


class SingularGeometryError(UDWError):
    """Coincident pointlike detectors, or a Dirac pair sitting on a PV pole."""


class QuadratureFailure(UDWError):
    """Adaptive quadrature did not converge within ``max_subdivisions``."""

    exit_code = 3

    def __init__(self, detail: str, partial: complex = 0j, est_error: Optional[float] = None):
        super().__init__(detail)
        self.partial = partial
        self.est_error = est_error


class DivergentSelfEnergyError(UDWError):
    """Equal-time self term of a pointlike, instantaneously switched detector."""


class OrderingError(UDWError):
    """Sender must act strictly before the receiver."""


class NonIdenticalDetectorsError(UDWError):
    pass


class DegenerateReceiverError(UDWError):
    """Receiver prepared in an energy eigenstate cannot decode a phase."""


class OutputError(UDWError):
    exit_code = 4
