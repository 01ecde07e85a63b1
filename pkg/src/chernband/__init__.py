"""Band counts and Chern indices of coupled angular-momentum Hamiltonians."""

from .band_spectrum import (
    BandDecomposition,
    EigenSystem,
    ExchangeScan,
    band_counts,
    band_weights,
    cluster_bands,
    diagonalize,
    find_degeneracy,
    scan_exchange,
)
from .chern_topology import (
    ChernResult,
    SphereTriangulation,
    WindingResult,
    chern_indices,
    degree_formula,
    husimi_map,
    sum_rule_check,
    topological_charge,
    triangulate_sphere,
    winding_number,
)
from .hamiltonians import (
    HamiltonianSpec,
    LocalModelParams,
    Term,
    TwoLevelField,
    build_quantum,
    local_model_matrix,
    local_model_spectrum,
    model_eq1,
    semiclassical_field,
    semiclassical_reduce,
    tetrahedral_field,
    tetrahedral_spec,
)
from .spin_algebra import (
    AngularMomentumRep,
    CoherentState,
    HalfInt,
    SpherePoint,
    coherent_state,
    embed,
    make_rep,
    overlap,
)

__version__ = "0.1.0"
