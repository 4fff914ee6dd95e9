"""Restoration planning and neural surrogates for interdependent
infrastructure networks.

Subpackages: network (data model + file format), netgen (synthetic
networks), flows (operating-cost evaluation), solver (exact and heuristic
restoration planning), scenarios (damage scenarios and labeled datasets),
surrogate (feedforward network), analysis (trade-off and interpretability),
cli (command-line entry point). The hot min-cost-flow kernel lives in
``_kernel`` with a compiled and a pure-Python backend.
"""

__version__ = "0.1.0"

from ._kernel import BACKEND as KERNEL_BACKEND
from .network import (ArcSpec, InterdependencyLink, NetworkSpec, NodeRef,
                      NodeSpec, SpaceSpec, canonical_index, load_network,
                      save_network, validate)
from .flows import (FlowContext, FlowSolution, FunctionalityState,
                    effective_state, full_state, operating_cost,
                    solve_layer_flow, state_with_damage)
from .solver import (NEVER, CostBreakdown, DamageScenario, ExactModeError,
                     PlanError, RestorationPlan, plan_cost, recovery_time,
                     solve_exact, solve_iterative)
from .scenarios import (DamageModel, Dataset, SpatialKernel, augment,
                        build_dataset, default_damage_model,
                        generate_scenario)
from .surrogate import (AdamState, SurrogateModel, TrainConfig, adam_step,
                        ar_accuracy, forward, init_model, load_model,
                        loss_and_gradients, predict_plan, save_model, train)
from .analysis import (BlockAggregate, RecoveryOperator, TradeoffCurve,
                       block_aggregate, layer_partition,
                       operator_heatmap_export, recovery_operator, tradeoff)
