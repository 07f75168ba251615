"""Exact derivation certificates for the perfect-matching and permutation ideals,
their symmetry tools, and the TSP reductions built on them."""

from .algebra import Permutation, Polynomial, act, add, evaluate, format_polynomial, mul, parse_polynomial, x, y
from .certificate import (
    ADJ,
    COL,
    COLADJ,
    DEG,
    ROW,
    ROWADJ,
    RSQ,
    SQ,
    DerivationCertificate,
    Gen,
    Verdict,
    expand,
    format_certificate,
    parse_certificate,
    verify_certificate,
)
from .config import Limits, current_limits
from .errors import *  # noqa: F401,F403
from .lasserre import (
    MomentBasis,
    MomentProgram,
    NumericSosCertificate,
    export_sdpa,
    lasserre_build,
    read_sdpa,
    verify_numeric_certificate,
)
from .matching import (
    derive_zero,
    enumerate_perfect_matchings,
    expand_vertex,
    generators_P,
    is_zero_on_matchings,
    lift_generator,
    lift_matching,
    matching_constant,
    normal_form,
    symmetrize_constant,
)
from .symmetry import (
    SdpFormulationData,
    SolutionFunction,
    apply_group_check,
    find_junta_support,
    formulation_to_sos,
    orbit_connector,
)
from .tour import (
    enumerate_tours,
    generators_Q,
    is_zero_on_tours,
    tour_derive_zero,
    tour_expand_vertex,
    tour_lift_generator,
    tour_lift_matching,
    tour_normal_form,
    tour_symmetrize_constant,
)
from .tsp import (
    RefutationCertificate,
    TspInstance,
    build_refutation,
    canonicalize,
    double_instance,
    fold_substitution,
    odd_set_slack,
    phi_map,
    tour_value,
    val_polynomial,
    verify_refutation,
)

__version__ = "0.1.0"
