"""qcclab: numerical checks of the quantum computer condition.

Submodules: :mod:`linalg`, :mod:`channel`, :mod:`lindblad`, :mod:`qcc`,
:mod:`nogo`, :mod:`fixedpoint`, :mod:`paradigms`, :mod:`jsonio`, :mod:`cli`.
"""
from .channel import (
    AbelianAlgebra,
    KrausChannel,
    Superoperator,
    conditional_expectation,
    dephasing,
    depolarizing,
    from_choi,
    to_choi,
    to_superop,
    validate_cptp,
)
from .errors import (
    CapacityError,
    ConvergenceError,
    FixedPointVerificationError,
    InvalidInputError,
    NotCompletelyPositiveError,
    PropagatorDefectError,
    QccLabError,
    RankAmbiguityWarning,
    UndefinedRatioError,
)
from .fixedpoint import eqcc_commutant, verify_fixed_points
from .lindblad import LindbladGenerator, evolve_adaptive, evolve_product, evolve_trotter
from .nogo import gamma_certified, nogo_scan, nogo_verdict
from .qcc import QccScenario, implementation_inaccuracy, qcc_holds

__version__ = "0.1.0"

__all__ = [
    "AbelianAlgebra",
    "KrausChannel",
    "Superoperator",
    "conditional_expectation",
    "dephasing",
    "depolarizing",
    "from_choi",
    "to_choi",
    "to_superop",
    "validate_cptp",
    "CapacityError",
    "ConvergenceError",
    "FixedPointVerificationError",
    "InvalidInputError",
    "NotCompletelyPositiveError",
    "PropagatorDefectError",
    "QccLabError",
    "RankAmbiguityWarning",
    "UndefinedRatioError",
    "eqcc_commutant",
    "verify_fixed_points",
    "LindbladGenerator",
    "evolve_adaptive",
    "evolve_product",
    "evolve_trotter",
    "gamma_certified",
    "nogo_scan",
    "nogo_verdict",
    "QccScenario",
    "implementation_inaccuracy",
    "qcc_holds",
]
