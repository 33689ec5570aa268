"""scramblekit: exact operator-growth simulation and scrambling-bound certification
for spin-1/2 systems with two-body all-to-all plus lattice interactions."""

__version__ = "0.1.0"

from .backend import BACKEND
from .errors import (
    CapacityError,
    CertificationError,
    ConfigError,
    DimensionMismatchError,
    IntegrationError,
    PlanningError,
    ProtocolStateError,
    ScrambleKitError,
)
from .pauli import (
    OperatorVector,
    PauliString,
    SizeDistribution,
    XpmOperator,
    average_size,
    commutator,
    from_xpm,
    inner_product,
    mul,
    project_sites,
    project_size,
    size_distribution,
    to_xpm,
)

__all__ = [
    "BACKEND",
    "OperatorVector",
    "PauliString",
    "SizeDistribution",
    "XpmOperator",
    "average_size",
    "commutator",
    "inner_product",
    "mul",
    "project_sites",
    "project_size",
    "size_distribution",
    "to_xpm",
    "from_xpm",
    "ScrambleKitError",
    "DimensionMismatchError",
    "CapacityError",
    "IntegrationError",
    "CertificationError",
    "ProtocolStateError",
    "PlanningError",
    "ConfigError",
]
