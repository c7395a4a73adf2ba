"""Signal and noise complexity of graph-analysis task instances in 3-D
node-link layouts, with layout, instance sampling and evaluation tools."""
from .complexity import (ComplexityConfig, ComplexityScore, InstanceComplexity, NoiseFreeError, TotalComplexity,
                         combined, fill_ratio, score_pair, task1_noise, task1_signal, task2_noise, task2_signal,
                         total_complexity)
from .evaluation import accuracy, harmonize, paired_permutation_test, stratified_bootstrap
from .geometry import Ellipsoid3, MinimumVolumeEllipsoid, Sphere3, clipped_length, element_in_region, mvee, node_angle
from .graph import (Graph, LocalProperties, NodePairCandidate, UnreachableError, common_neighbors,
                    enumerate_shortest_paths, global_properties, shortest_path_length)
from .layout import Layout3D, StressLayout, normalize_to_view, stress_layout
from .properties import local_properties
from .sampling import InfeasiblePlanError, PlanConfig, SessionPlan, enumerate_candidates, filter_outliers, sample_plan

__version__ = "0.1.0"

__all__ = [
    "ComplexityConfig", "ComplexityScore", "Ellipsoid3", "Graph", "InfeasiblePlanError", "InstanceComplexity",
    "Layout3D", "LocalProperties", "MinimumVolumeEllipsoid", "NodePairCandidate", "NoiseFreeError", "PlanConfig",
    "SessionPlan", "Sphere3", "StressLayout", "TotalComplexity", "UnreachableError", "accuracy", "clipped_length",
    "combined", "common_neighbors", "element_in_region", "enumerate_candidates", "enumerate_shortest_paths",
    "fill_ratio", "filter_outliers", "global_properties", "harmonize", "local_properties", "mvee", "node_angle",
    "normalize_to_view", "paired_permutation_test", "sample_plan", "score_pair", "shortest_path_length",
    "stratified_bootstrap", "stress_layout", "task1_noise", "task1_signal", "task2_noise", "task2_signal",
    "total_complexity",
]
