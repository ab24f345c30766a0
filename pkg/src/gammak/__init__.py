"""gammak: finite Gamma-semirings, projective semimodules, and K-invariants."""

from .intlinalg import (
    FgAbelianGroup,
    IntMatrix,
    abelian_direct_sum,
    abelian_iso,
    finite_abelianization,
    group_from_presentation,
    smith_normal_form,
)
from .structures import (
    GammaHomomorphism,
    GammaSemiring,
    MalformedStructureError,
    CarrierCapExceeded,
    ValidationReport,
    compose_homs,
    diagonal_inclusion,
    diagonal_projection,
    identity_hom,
    make_builtin,
    matrix_semiring,
    nfold_product,
    product,
    triangular_semiring,
    validate,
    validate_hom,
)
from .semimodules import (
    ClassifiedProjectives,
    IdempotentMatrix,
    ModuleCapExceeded,
    ModuleMap,
    SearchBudgetExceeded,
    Semimodule,
    classify_projectives,
    direct_sum,
    enumerate_idempotents,
    free_module,
    image_module,
    is_isomorphic,
    matrix_as_map,
    zero_module,
)

__version__ = "0.1.0"
