"""Deterministic simulator for wave-based (ping) swarm control."""

from .config import ConfigError, RefractoryBoundWarning, SimConfig
from .engine import (
    ACTIVE, AgentCore, ConnectivityError, INACTIVE, PingReception, REFRACTORY,
    StepEvents, SwarmState, TIMER_OFF, deliver_pings, init_swarm, run, step,
)
from .primitives import (
    ObjectStimulus, PrimitiveBinding, PrimitiveScratch, bind, make_binding,
    PRIMITIVE_NAMES,
)
from .composer import Layer, LayerSet, Stage, run_interleaved, run_sequence
from .metrics import (
    MetricSample, candidate_count, delta_phi_max, mean_angular_error,
    mean_nn_distance, n_err_percent, rms_to_centroid,
)
from .scenario import (
    Scenario, ScenarioError, SimSession, execute, parse_scenario,
    serialize_scenario, sweep,
)

__all__ = [
    "ACTIVE", "AgentCore", "ConfigError", "ConnectivityError", "INACTIVE",
    "Layer", "LayerSet", "MetricSample", "ObjectStimulus", "PingReception",
    "PRIMITIVE_NAMES", "PrimitiveBinding", "PrimitiveScratch", "REFRACTORY",
    "RefractoryBoundWarning", "Scenario", "ScenarioError", "SimConfig",
    "SimSession", "Stage", "StepEvents", "SwarmState", "TIMER_OFF", "bind",
    "candidate_count", "delta_phi_max", "deliver_pings", "execute",
    "init_swarm", "make_binding", "mean_angular_error", "mean_nn_distance",
    "n_err_percent", "parse_scenario", "rms_to_centroid", "run",
    "run_interleaved", "run_sequence", "serialize_scenario", "step", "sweep",
]
