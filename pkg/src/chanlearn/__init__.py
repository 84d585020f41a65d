"""Decentralized multi-user channel allocation: learners, oracles and analysis."""

from .game import (
    GameSpec,
    InstanceTooLarge,
    NonUniqueOptimum,
    OptimalSolution,
    enumerate_allocations,
    load_spec,
    reference_spec,
    save_spec,
    social_welfare,
    socially_optimal,
    stability_margin,
)
from .congestion import EquilibriumReport, best_response_path, enumerate_pne, is_pne
from .learners import Exp3Agent, Feedback, RlaAgent, RsAgent, make_agent
from .sim import ExperimentConfig, run_batch, run_once

__version__ = "0.1.0"
