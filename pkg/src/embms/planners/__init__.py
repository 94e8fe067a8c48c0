from .aggregation import cell_aggregation
from .base import CandidateArea, PlannerConfig, TraceRecord
from .fusion import area_fusion, merge_identical, truncate
from .hill_climbing import hill_climbing
from .mcf import best_cell_items, mcf_premerge, mcf_specs
from .rate_increase import broadcast_tiers, rate_increase, rate_increase_fixed
from .scf import (PlannerResult, PreFusion, mcf, oracle_optimal, scf, scf_prefusion,
                  unicast_baseline)

PLANNERS = ("scf", "mcf", "unicast")
