"""etalab: exact-numerics lab for eta-pairing steady states of dephased and
periodically driven 1D Hubbard chains."""

__version__ = "0.1.0"

from .errors import (
    BoundaryError,
    CapacityError,
    ConvergenceError,
    DegenerateProjectionError,
    DomainError,
    EtalabError,
    NumericalInstabilityError,
    ShapeError,
    StepSizeError,
    ValidationError,
)
from .fock import (
    FockState,
    SectorBasis,
    SparseOperator,
    StateVector,
    apply,
    build_eta_ops,
    build_fermion_op,
    build_spin_ops,
    enumerate_full,
    enumerate_sector,
    vacuum_state,
)
from .model import (
    DriveParams,
    HubbardParams,
    JumpSet,
    build_field_op,
    build_hubbard,
    build_jumps,
    resolve_profile,
)

__all__ = [name for name in dir() if not name.startswith("_")]
