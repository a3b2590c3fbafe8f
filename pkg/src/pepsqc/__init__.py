"""pepsqc: PEPs tensor networks compiled to qubit-reuse circuits."""

from .compiler import (
    GateProgram,
    GateSpec,
    LatticeShape,
    compile_parameterized,
    compile_tensors,
    from_json,
    is_qubit_efficient,
    qubit_count,
    tensors_from_parameters,
    to_json,
    zigzag_order,
)
from .pauli import (
    OperatorSum,
    PauliString,
    boundary_loop,
    exact_ground,
    expectation,
    magnetic_term,
    to_dense,
    wen_hamiltonian,
)
from .peps import PepsNetwork, contract_all, norm
from .simulator import (
    ShotRecord,
    apply_depolarizing,
    estimate_observable,
    exact_observable,
    run_shot,
)
from .variational import OptimizationResult, energy, minimize, sweep

__version__ = "0.1.0"

__all__ = [
    "GateProgram",
    "GateSpec",
    "LatticeShape",
    "OperatorSum",
    "OptimizationResult",
    "PauliString",
    "PepsNetwork",
    "ShotRecord",
    "apply_depolarizing",
    "boundary_loop",
    "compile_parameterized",
    "compile_tensors",
    "contract_all",
    "energy",
    "estimate_observable",
    "exact_ground",
    "exact_observable",
    "expectation",
    "from_json",
    "is_qubit_efficient",
    "magnetic_term",
    "minimize",
    "norm",
    "qubit_count",
    "run_shot",
    "sweep",
    "tensors_from_parameters",
    "to_dense",
    "to_json",
    "wen_hamiltonian",
    "zigzag_order",
]
