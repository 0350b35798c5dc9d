"""Fusion categories D(g,l) and Drinfeld associators from the one-variable KZ equation."""

from .assoc import AssociatorParams, associator_on_quotients, verify_pentagon
from .errors import (
    DimensionError,
    DomainError,
    FusionKZError,
    InternalInvariantViolation,
    InvarianceError,
    NotAMorphism,
    NotInCategory,
    PrecisionExhausted,
    UnsupportedAlgebra,
    VerificationFailure,
)
from .fusion import (
    FusionCache,
    FusionProduct,
    FusionTable,
    ModuleMap,
    fuse,
    fusion_kernel,
    fusion_table,
    identity_map,
    in_category,
    induced_morphism,
    sl2_fusion_oracle,
    unit_isomorphism_report,
)
from .kz import (
    AssociatorMatrix,
    KZSeries,
    OmegaSystem,
    build_omega_system,
    connection_matrix,
    evaluate_series,
    ode_oracle,
    series_at_one,
    series_at_zero,
    verify_equivariance,
)
from .modules import (
    GModule,
    SubspaceBasis,
    casimir_matrix,
    decompose,
    defining_module,
    fundamental_module,
    irreducible,
    module_from_json,
    module_to_json,
    quotient,
    singular_vectors,
    submodule_closure,
    tensor,
    trivial_module,
)
from .rootdata import (
    RootDatum,
    admissible_weights,
    build_root_datum,
    casimir_eigenvalue,
    datum_from_json,
    datum_to_json,
    load_root_datum,
    lowest_conformal_weight,
    weight_pairing,
)

__version__ = "0.1.0"
