"""Shared helpers for building small hand-placed swarms."""

from __future__ import annotations

import warnings

import numpy as np
import pytest

from wospp.config import RefractoryBoundWarning, SimConfig
from wospp.engine import SwarmState, TIMER_OFF, step
from wospp.primitives import PrimitiveBinding, bind


def make_config(n_agents: int, **overrides) -> SimConfig:
    defaults = dict(swarm_radius=1.0, refractory_time=5, cycle_max=100)
    defaults.update(overrides)
    with warnings.catch_warnings():
        # hand-placed micro layouts are not sampled discs, so the rim
        # propagation bound does not apply
        warnings.simplefilter("ignore", RefractoryBoundWarning)
        return SimConfig(n_agents=n_agents, **defaults)


def make_state(positions, binding=None, **config_overrides) -> SwarmState:
    """A SwarmState at exactly the given positions (no rejection sampling)."""
    positions = np.asarray(positions, dtype=float)
    config = make_config(len(positions), **config_overrides)
    rng = np.random.default_rng(config.rng_seed)
    state = SwarmState(config, rng, positions.copy(),
                       np.zeros(len(positions)))
    if binding is not None:
        bind(state, binding)
    return state


def probe_binding() -> PrimitiveBinding:
    """A binding whose codeblocks do nothing; isolates the engine itself."""

    def setup(state) -> None:
        pass

    def initiate(state, i) -> None:
        pass

    def relay(state, i, bearings) -> None:
        pass

    return PrimitiveBinding("probe", initiate, relay, setup)


def set_timers(state: SwarmState, values) -> None:
    """Overwrite all timers; None means deactivated."""
    for i, value in enumerate(values):
        state.timers[i] = TIMER_OFF if value is None else int(value)


def run_collect(state: SwarmState, binding, horizon: int):
    """Step ``horizon`` times, returning [(time_before_step, events)]."""
    out = []
    for _ in range(horizon):
        t = state.time
        _, events = step(state, binding)
        out.append((t, events))
    return out
