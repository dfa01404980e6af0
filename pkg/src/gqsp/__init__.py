"""GQSP toolkit: polynomial completion, rotation angles, circuit plans,
block-encoding verification, and synthesis of diagonal / circulant operators.
"""

from .angles import GqspAngles, compute_angles, reconstruct_polynomials
from .circuit import (
    BlockEncoding,
    CircuitPlan,
    Rotation,
    SignalU,
    SignalUdg,
    apply_to_state,
    plan_circuit,
    poly_of_unitary,
    random_unitary,
    rotation_matrix,
    simulate,
    unitary_from_json_dict,
    unitary_to_json_dict,
    verify_block,
)
from .completion import (
    CompletionConfig,
    CompletionReport,
    check_admissible,
    complete_via_optimization,
    complete_via_roots,
    completion_gradient,
    completion_objective,
    validate_completion,
)
from .errors import (
    AdmissibilityError,
    DegeneracyError,
    GqspError,
    InvalidInputError,
    InvalidPairError,
    NonConvergenceError,
    VerificationError,
)
from .poly import (
    LaurentPoly,
    autocorrelation,
    convolve,
    convolve_naive,
    default_grid_size,
    eval_grid,
    eval_unit_circle,
    sup_norm_sq,
)
from .transforms import (
    CirculantSpec,
    CirculantSynthesis,
    FourierFit,
    FourierFitConfig,
    PhaseGateList,
    bessel_j,
    circulant_matrix,
    circular_convolve_bruteforce,
    cyclic_permutation_matrix,
    fit_fourier_series,
    jacobi_anger_cos,
    jacobi_anger_sin,
    named_function,
    qft_matrix,
    root_of_unity_diagonal,
    synth_circulant,
    synth_diagonal,
    synth_root_of_unity_plan,
    truncation_order,
)

__version__ = "0.1.0"

__all__ = [
    "AdmissibilityError",
    "BlockEncoding",
    "CirculantSpec",
    "CirculantSynthesis",
    "CircuitPlan",
    "CompletionConfig",
    "CompletionReport",
    "DegeneracyError",
    "FourierFit",
    "FourierFitConfig",
    "GqspAngles",
    "GqspError",
    "InvalidInputError",
    "InvalidPairError",
    "LaurentPoly",
    "NonConvergenceError",
    "PhaseGateList",
    "Rotation",
    "SignalU",
    "SignalUdg",
    "VerificationError",
    "apply_to_state",
    "autocorrelation",
    "bessel_j",
    "check_admissible",
    "circulant_matrix",
    "circular_convolve_bruteforce",
    "complete_via_optimization",
    "complete_via_roots",
    "completion_gradient",
    "completion_objective",
    "compute_angles",
    "convolve",
    "convolve_naive",
    "cyclic_permutation_matrix",
    "default_grid_size",
    "eval_grid",
    "eval_unit_circle",
    "fit_fourier_series",
    "jacobi_anger_cos",
    "jacobi_anger_sin",
    "named_function",
    "plan_circuit",
    "poly_of_unitary",
    "qft_matrix",
    "random_unitary",
    "reconstruct_polynomials",
    "root_of_unity_diagonal",
    "rotation_matrix",
    "simulate",
    "sup_norm_sq",
    "synth_circulant",
    "synth_diagonal",
    "synth_root_of_unity_plan",
    "truncation_order",
    "unitary_from_json_dict",
    "unitary_to_json_dict",
    "validate_completion",
    "verify_block",
]
