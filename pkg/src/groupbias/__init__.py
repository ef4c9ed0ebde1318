"""Small-bias generator sets over finite groups, with numeric certificates.

The package builds multisets S in a finite group G whose Cayley walk
operator is close to the complete-graph walk: every nontrivial irreducible
representation averages to an operator of norm at most epsilon over S.
Constructions cover abelian groups (powering and CRT gluing), homogeneous
powers G^n, direct products, and smoothly solvable groups; each returns a
`BiasedSet` carrying a claimed bound, and the spectral or character oracles
can certify the claim exactly at desk scales.
"""

from .abelian import (aghp_construct, char_bias_exact, crt_product,
                      modulus_set, quotient_mod, random_biased_search)
from .constructions import (AmplificationPlan, StepPlan, TilingMap, amplify,
                            amplify_step, bridge_constant_gap, claim6_bound,
                            direct_product_set, dup, edge_products, mz_set,
                            plan_amplification, solvable_set, tensor_combine,
                            tile_side)
from .errors import (CertificationError, GroupBiasError, ResourceError,
                     SearchBudgetError, StructuralError)
from .expanders import (BipartiteExpander, certify_lambda, double_cover,
                        find_primes, lps_graph, quaternion_solutions,
                        random_regular_bipartite, read_expander,
                        write_expander)
from .fields import PrimePowerField
from .groups import (AbelianVectorGroup, CyclicGroup, DihedralGroup,
                     DirectProductGroup, FiniteGroup, QuotientGroup,
                     SubgroupChain, SubgroupGroup, SymmetricGroup,
                     UnitriangularGroup, derived_series, derived_subgroup,
                     elementary_abelian_structure, parse_group,
                     subgroup_closure)
from .harness import (HarnessReport, azuma_supermartingale_check,
                      operator_product_tail, rayleigh_operator_check,
                      rayleigh_vector_check)
from .sets import BiasedSet, canonical_json, counted
from .spectral import (alon_roichman_sample, bias_from_cayley_file,
                       bias_spectral, certify_set, export_cayley,
                       lemma3_projection_norm, mz_readonce_check,
                       walk_matrix)

__version__ = "0.1.0"

__all__ = [
    "AbelianVectorGroup", "BiasedSet", "BipartiteExpander",
    "CertificationError", "CyclicGroup", "DihedralGroup",
    "DirectProductGroup", "FiniteGroup", "GroupBiasError", "HarnessReport",
    "PrimePowerField", "QuotientGroup", "ResourceError", "SearchBudgetError",
    "StructuralError", "SubgroupChain", "SubgroupGroup", "SymmetricGroup",
    "UnitriangularGroup", "aghp_construct", "alon_roichman_sample",
    "AmplificationPlan", "StepPlan", "TilingMap", "amplify", "amplify_step",
    "azuma_supermartingale_check", "bias_from_cayley_file", "bias_spectral",
    "bridge_constant_gap", "canonical_json", "certify_lambda", "certify_set",
    "char_bias_exact", "claim6_bound", "counted", "crt_product",
    "derived_series", "derived_subgroup", "direct_product_set", "double_cover",
    "dup", "edge_products", "elementary_abelian_structure", "export_cayley",
    "find_primes", "lemma3_projection_norm", "lps_graph", "modulus_set",
    "mz_readonce_check", "mz_set", "operator_product_tail", "parse_group",
    "plan_amplification", "quaternion_solutions", "quotient_mod",
    "random_biased_search", "random_regular_bipartite",
    "rayleigh_operator_check", "rayleigh_vector_check", "read_expander",
    "solvable_set", "subgroup_closure", "tensor_combine", "tile_side",
    "walk_matrix", "write_expander",
]
