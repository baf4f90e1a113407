"""Online disjoint set cover with a phase-based coloring algorithm.

Edges of a hypergraph arrive one at a time and must be colored on arrival;
the goal is to maximize the number of colors whose edges cover every node.
"""

from .engine import EngineState, apply_color, fully_used_count, init_state, min_phase
from .generators import GeneratorSpec, gen_planted, gen_starved, gen_uniform, parse_gen_spec
from .model import InstanceError, InstanceSpec, load_instance, parse_instance, quota
from .oracle import exact_opt, naive_opt
from .policies import det_policy, greedy_policy, rand_policy
from .potential import d_k, exact_expected_phi, recompute_phi
from .runner import run_instance

__all__ = [
    "EngineState",
    "GeneratorSpec",
    "InstanceError",
    "InstanceSpec",
    "apply_color",
    "d_k",
    "det_policy",
    "exact_expected_phi",
    "exact_opt",
    "fully_used_count",
    "gen_planted",
    "gen_starved",
    "gen_uniform",
    "greedy_policy",
    "init_state",
    "load_instance",
    "min_phase",
    "naive_opt",
    "parse_gen_spec",
    "parse_instance",
    "quota",
    "rand_policy",
    "recompute_phi",
    "run_instance",
]
