"""K-user MISO broadcast channel with alternating CSIT.

Simulates the two-phase interference creation / resurrection scheme and
evaluates the related DoF formulas, bounds and 3-user region program.
"""

from .channel import (ChannelRealization, CsitPattern, CsitState,
                      enumerate_synergistic_patterns, icr_pattern,
                      per_user_perfect_fraction, sample_channel, state_fractions)
from .dof import (DofPoint, RegionSpec, achievable_dof, closed_form_region,
                  dof_region_lp, mat_dof, region_vertices, tandon_bound,
                  theorem1_distribution, upper_bound_total)
from .scheme import effective_decoding_matrix, run_icr

__all__ = [
    "ChannelRealization", "CsitPattern", "CsitState", "DofPoint", "RegionSpec",
    "achievable_dof", "closed_form_region", "dof_region_lp",
    "effective_decoding_matrix", "enumerate_synergistic_patterns", "icr_pattern",
    "mat_dof", "per_user_perfect_fraction", "region_vertices", "run_icr",
    "sample_channel", "state_fractions", "tandon_bound", "theorem1_distribution",
    "upper_bound_total",
]

__version__ = "0.1.0"
