"""Constrained exploration for tabular Q-learning via supervisory control."""

from ._backend import BACKEND
from .automata import (
    Automaton,
    AutomatonError,
    EmptyLanguageError,
    OracleOverflowError,
    ParseError,
    dump_aut,
    enumerate_language,
    from_transitions,
    parse_aut,
    product,
    run,
    trim,
)
from .coverage import CoverageReport, check_coverage, coverage_oracle
from .environment import GridSpec, RewardSpec, grid_world, load_env, validate_env
from .learner import LearnConfig, QTable, TrainResult, run_episode, train, value_iteration_oracle
from .probability import (
    EpsilonGreedyPolicy,
    UniformPolicy,
    string_logprob_supervised,
    string_prob_supervised,
    string_prob_unconstrained,
    visit_prob,
)
from .specs import compile_spec, forbid_factors, load_spec, only_immediately_after, parse_spec
from .supervisor import AdmissibleSet, Supervisor, SupervisorError, realize

__version__ = "0.1.0"
