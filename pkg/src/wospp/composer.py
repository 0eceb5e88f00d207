"""Sequential and interleaved execution of primitives.

A sequential schedule re-arms timers and clears scratch (minus carried-over
fields) at each stage boundary; positions always persist.  Interleaved
layers give every primitive its own single-bit channel: per-layer agent
state, timers, refractory countdowns and scratch, stepped against shared
positions.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .engine import SwarmState, apply_queued_moves, step
from .primitives import ObjectStimulus, PrimitiveBinding, bind, make_binding

log = logging.getLogger("wospp.composer")


@dataclass
class Stage:
    primitive: str
    duration: int
    parameters: dict = field(default_factory=dict)
    carryover: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if self.duration < 1:
            raise ValueError(f"stage duration must be >= 1, got {self.duration}")


@dataclass
class Layer:
    channel_id: int
    binding: PrimitiveBinding


def _stage_binding(stage: Stage, state: SwarmState,
                   stimulus: Optional[ObjectStimulus]) -> PrimitiveBinding:
    params = dict(stage.parameters)
    # per-stage overrides of the two timing parameters
    if "cycle_max" in params:
        state.config.cycle_max = int(params.pop("cycle_max"))
    if "refractory_time" in params:
        state.config.refractory_time = int(params.pop("refractory_time"))
    if stage.primitive == "follow_leader" and "target_direction" not in params:
        # the paper leaves the leader's heading free; draw it once per stage
        ang = float(state.rng.uniform(0.0, 2.0 * np.pi))
        params["target_direction"] = [np.cos(ang), np.sin(ang)]
        log.info("stage follow_leader: drew target direction %.3f rad", ang)
    return make_binding(stage.primitive, params, stimulus=stimulus)


def run_sequence(state: SwarmState, schedule: list[Stage], trace_sink=None,
                 snapshot_period: int = 1,
                 stimulus: Optional[ObjectStimulus] = None,
                 on_stage=None) -> SwarmState:
    """Run each stage for its fixed duration with scratch handoff between
    stages. ``on_stage(index, stage, binding, state)`` fires at stage start."""
    from .engine import run
    from .primitives import PRIMITIVE_NAMES

    for stage in schedule:
        if stage.primitive not in PRIMITIVE_NAMES:
            raise ValueError(f"unknown primitive {stage.primitive!r}")

    prev: Optional[PrimitiveBinding] = None
    for idx, stage in enumerate(schedule):
        if prev is not None and prev.finalize is not None:
            prev.finalize(state)
        binding = _stage_binding(stage, state, stimulus)
        bind(state, binding, carryover=tuple(stage.carryover))
        if on_stage is not None:
            on_stage(idx, stage, binding, state)
        run(state, binding, stage.duration, trace_sink=trace_sink,
            snapshot_period=snapshot_period)
        prev = binding
    if prev is not None and prev.finalize is not None:
        prev.finalize(state)
    return state


class LayerSet:
    """Independent single-bit channels over one shared set of positions.

    Each layer owns a full per-agent channel state plus an rng stream seeded
    from (base seed, channel id), so a layer's event trace is unaffected by
    adding further motionless layers.
    """

    def __init__(self, base_state: SwarmState, layers: list[Layer]):
        if not layers:
            raise ValueError("at least one layer is required")
        ids = [la.channel_id for la in layers]
        if len(set(ids)) != len(ids):
            raise ValueError(f"duplicate channel ids in {ids}")
        movers = [la for la in layers if la.binding.moves_agents]
        if len(movers) > 1:
            warnings.warn(
                "more than one motion-capable layer is bound; displacements "
                "will be summed and capped at one step length",
                stacklevel=2)
        self.layers = sorted(layers, key=lambda la: la.channel_id)
        self.base_state = base_state
        self.states: list[SwarmState] = []
        for layer in self.layers:
            ls = SwarmState(
                base_state.config,
                np.random.default_rng(
                    [base_state.config.rng_seed, layer.channel_id]),
                base_state.positions,  # shared, not copied
                base_state.headings,
            )
            ls.time = base_state.time
            bind(ls, layer.binding)
            self.states.append(ls)

    def step_all(self, collect_events: bool = False):
        """Advance every channel one timestep, then merge and apply motion."""
        merged: dict[int, np.ndarray] = {}
        per_layer_events = []
        for layer, ls in zip(self.layers, self.states):
            _, events = step(ls, layer.binding,
                             collect_events=collect_events,
                             apply_motion=False)
            per_layer_events.append(events)
            for i, vec in ls._queued_moves.items():
                if i in merged:
                    merged[i] = merged[i] + vec
                else:
                    merged[i] = vec
            ls._queued_moves = {}
        if merged:
            apply_queued_moves(self.states[0], events=None, moves=merged)
        self.base_state.time = self.states[0].time
        return per_layer_events


def run_interleaved(state: SwarmState, layers: list[Layer], horizon: int,
                    trace_sink=None, snapshot_period: int = 1) -> SwarmState:
    """Step all layers against shared positions for ``horizon`` timesteps.

    Traces report channel 0's agent state alongside the shared positions.
    """
    layer_set = LayerSet(state, layers)
    want_events = trace_sink is not None and hasattr(trace_sink, "on_events")
    want_snaps = trace_sink is not None and hasattr(trace_sink, "on_snapshot")
    for _ in range(horizon):
        t = layer_set.states[0].time
        per_layer = layer_set.step_all(collect_events=want_events)
        if want_events:
            trace_sink.on_events(t, per_layer[0])
        if want_snaps and layer_set.states[0].time % snapshot_period == 0:
            trace_sink.on_snapshot(layer_set.states[0])
    return layer_set.states[0]
