"""Sound broad-phase culling of truck platooning pairs on road networks."""

from .assignments import (
    BoundedRoute,
    Fleet,
    TransportAssignment,
    Trajectory,
    compute_bounds,
    implements,
    is_feasible,
    window_width,
)
from .candidates import CandidateSet
from .culling import (
    StagePlan,
    all_positives,
    apply_stage,
    build_classifiers,
    greedy_order,
    or_compose,
    run_pipeline,
)
from .exact_match import coordination, coordination_min_distance, evaluate_pairs, exact_matches, ground_truth
from .features import FeatureConfig, alpha_vector, extract_all, orientation_signature, reference_feature_config, project_interval
from .kernels import BACKEND
from .road_network import RoadNetwork, load_network
from .scenario import (
    ScenarioConfig,
    build_scenario,
    generate_assignments,
    generate_network,
    load_assignments,
    reference_scenario_config,
)

__version__ = "0.1.0"
