from .constraints import (check_all, check_constraint_i, check_constraint_ii, check_constraint_iii,
                          check_constraint_iv)
from .engine import Evaluator, PlanState, evaluate_reference
from .model import AreaPlan, AreaSpec, MbsfnArea, SubframeLayout, ThroughputReport
from .throughput import (AllocationError, allocate_subframes, build_area, compute_throughput,
                         compute_throughput_dynamic, finalize_plan, unicast_only_plan)
