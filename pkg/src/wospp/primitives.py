"""The behavioral primitives, expressed as initiate/relay codeblock pairs.

A primitive only ever touches its own agent's scratch memory and queued
displacement, so the engine can invoke codeblocks in any per-agent order
without changing results (reception order within a step is id-sorted).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .engine import SwarmState, TIMER_OFF


@dataclass
class ObjectStimulus:
    """A detectable object: agents inside detection_radius perceive it."""

    position: np.ndarray
    detection_radius: float = 1.0

    def __post_init__(self) -> None:
        self.position = np.asarray(self.position, dtype=float)
        if self.detection_radius <= 0:
            raise ValueError("detection_radius must be > 0")

    def detects(self, position: np.ndarray) -> bool:
        return bool(
            np.linalg.norm(position - self.position) <= self.detection_radius
        )

    def __eq__(self, other) -> bool:
        if not isinstance(other, ObjectStimulus):
            return NotImplemented
        return (np.array_equal(self.position, other.position)
                and self.detection_radius == other.detection_radius)


@dataclass
class PrimitiveScratch:
    """Per-agent, per-primitive working memory."""

    candidate: bool = False
    leader: bool = False
    direction_sum: np.ndarray = field(default_factory=lambda: np.zeros(2))
    direction_count: int = 0
    quadrant_bins: np.ndarray = field(
        default_factory=lambda: np.zeros(4, dtype=np.int64))
    ping_count: int = 0
    count_estimates: list[int] = field(default_factory=list)
    n_est: float = 0.0
    periphery: bool = False
    estimate_bearing: Optional[np.ndarray] = None

    CARRYOVER_FIELDS = (
        "candidate", "leader", "direction_sum", "direction_count",
        "quadrant_bins", "ping_count", "count_estimates", "n_est",
        "periphery", "estimate_bearing",
    )


@dataclass
class PrimitiveBinding:
    primitive_id: str
    initiate: Callable[[SwarmState, int], None]
    relay: Callable[[SwarmState, int, list[np.ndarray]], None]
    setup: Callable[[SwarmState], None]
    timer_rule: str = "random"  # random | fixed_max | deactivated
    each_step: Optional[Callable[[SwarmState], None]] = None
    finalize: Optional[Callable[[SwarmState], None]] = None
    stimulus: Optional[ObjectStimulus] = None
    moves_agents: bool = False


def _fresh_scratch(state: SwarmState) -> None:
    state.scratch = [PrimitiveScratch() for _ in range(state.n_agents)]


def _copy_scratch_field(sc: PrimitiveScratch, name: str):
    value = getattr(sc, name)
    if isinstance(value, np.ndarray):
        return value.copy()
    if isinstance(value, list):
        return list(value)
    return value


def bind(state: SwarmState, binding: "PrimitiveBinding",
         carryover: tuple[str, ...] = ()) -> None:
    """(Re)bind a primitive to a swarm: reset per-channel agent state, start
    from fresh scratch (minus carried-over fields), then run the binding's
    setup to arm timers. Positions and headings are untouched."""
    from .engine import INACTIVE

    old = state.scratch
    _fresh_scratch(state)
    if old and carryover:
        unknown = [f for f in carryover
                   if f not in PrimitiveScratch.CARRYOVER_FIELDS]
        if unknown:
            raise ValueError(f"unknown carryover fields {unknown}")
        for i, sc in enumerate(state.scratch):
            for name in carryover:
                setattr(sc, name, _copy_scratch_field(old[i], name))
    state.states[:] = INACTIVE
    state.pending[:] = False
    state.refractory[:] = 0
    state.timers[:] = TIMER_OFF
    state._queued_moves = {}
    state.stimulus = binding.stimulus
    binding.setup(state)


def _arm_all_random(state: SwarmState) -> None:
    for i in range(state.n_agents):
        state.arm_timer_random(i)


def _record_direction(sc: PrimitiveScratch, bearings: list[np.ndarray]) -> None:
    for b in bearings:
        sc.direction_sum += b
    sc.direction_count += len(bearings)


def _resultant(vectors: list[np.ndarray]) -> Optional[np.ndarray]:
    """Unit vector along the circular mean of ``vectors``, None if degenerate."""
    s = np.add.reduce(vectors)
    norm = float(np.linalg.norm(s))
    if norm < 1e-12:
        return None
    return s / norm


def leader_election() -> PrimitiveBinding:
    """Every agent starts as a candidate; hearing a ping first loses."""

    def setup(state: SwarmState) -> None:
        for i in range(state.n_agents):
            state.scratch[i].candidate = True
            state.arm_timer_random(i)

    def initiate(state: SwarmState, i: int) -> None:
        state.scratch[i].candidate = True
        state.arm_timer_random(i)

    def relay(state: SwarmState, i: int, bearings) -> None:
        state.deactivate_timer(i)
        state.scratch[i].candidate = False

    def finalize(state: SwarmState) -> None:
        # surviving candidates become leaders for a follow-up stage
        for sc in state.scratch:
            sc.leader = sc.candidate

    return PrimitiveBinding("leader_election", initiate, relay, setup,
                            timer_rule="random", finalize=finalize)


def synchronization() -> PrimitiveBinding:
    """Both codeblocks reset the timer to the maximum, so the first wave
    aligns every cycle up to hop offsets."""

    def setup(state: SwarmState) -> None:
        _arm_all_random(state)

    def initiate(state: SwarmState, i: int) -> None:
        state.set_timer(i, state.config.cycle_max)

    def relay(state: SwarmState, i: int, bearings) -> None:
        state.set_timer(i, state.config.cycle_max)

    return PrimitiveBinding("synchronization", initiate, relay, setup,
                            timer_rule="fixed_max")


def localize_object(stimulus: ObjectStimulus) -> PrimitiveBinding:
    """Only detecting agents initiate; everyone else averages ping bearings."""

    def setup(state: SwarmState) -> None:
        for i in range(state.n_agents):
            if stimulus.detects(state.positions[i]):
                state.arm_timer_random(i)
            else:
                state.deactivate_timer(i)

    def initiate(state: SwarmState, i: int) -> None:
        state.arm_timer_random(i)

    def relay(state: SwarmState, i: int, bearings) -> None:
        sc = state.scratch[i]
        _record_direction(sc, bearings)
        mean = _resultant([sc.direction_sum])
        if mean is not None:
            sc.estimate_bearing = mean

    return PrimitiveBinding("localize_object", initiate, relay, setup,
                            timer_rule="random", stimulus=stimulus)


def localize_center() -> PrimitiveBinding:
    """Average origin of pings: the running mean bearing of received pings,
    published whenever the agent initiates."""

    def setup(state: SwarmState) -> None:
        _arm_all_random(state)

    def initiate(state: SwarmState, i: int) -> None:
        sc = state.scratch[i]
        sc.estimate_bearing = _resultant([sc.direction_sum])
        state.arm_timer_random(i)

    def relay(state: SwarmState, i: int, bearings) -> None:
        _record_direction(state.scratch[i], bearings)

    return PrimitiveBinding("localize_center", initiate, relay, setup,
                            timer_rule="random")


def estimate_count() -> PrimitiveBinding:
    """Count pings heard per own cycle; the running mean estimates N."""

    def setup(state: SwarmState) -> None:
        _arm_all_random(state)

    def initiate(state: SwarmState, i: int) -> None:
        sc = state.scratch[i]
        sc.count_estimates.append(sc.ping_count)
        sc.ping_count = 0
        sc.n_est = float(np.mean(sc.count_estimates))
        state.arm_timer_random(i)

    def relay(state: SwarmState, i: int, bearings) -> None:
        # one relay event = one wave heard, however many bearings arrived
        state.scratch[i].ping_count += 1

    return PrimitiveBinding("estimate_count", initiate, relay, setup,
                            timer_rule="random")


def periphery_detect() -> PrimitiveBinding:
    """Bin ping bearings into four fixed 90-degree quadrants; an empty bin
    means nobody pings from that side, i.e. the agent sits on the rim."""

    def setup(state: SwarmState) -> None:
        _arm_all_random(state)

    def initiate(state: SwarmState, i: int) -> None:
        sc = state.scratch[i]
        sc.periphery = bool((sc.quadrant_bins == 0).any())
        state.arm_timer_random(i)

    def relay(state: SwarmState, i: int, bearings) -> None:
        sc = state.scratch[i]
        _record_direction(sc, bearings)
        for b in bearings:
            ang = np.arctan2(b[1], b[0]) % (2.0 * np.pi)
            sc.quadrant_bins[int(ang // (np.pi / 2.0)) % 4] += 1

    return PrimitiveBinding("periphery_detect", initiate, relay, setup,
                            timer_rule="random")


def aggregate(stimulus: Optional[ObjectStimulus] = None) -> PrimitiveBinding:
    """Move one step toward the circular mean of this step's ping bearings.

    With a stimulus only detecting agents initiate, pulling the swarm onto
    the object instead of its own centroid.
    """

    def setup(state: SwarmState) -> None:
        for i in range(state.n_agents):
            if stimulus is None or stimulus.detects(state.positions[i]):
                state.arm_timer_random(i)
            else:
                state.deactivate_timer(i)

    def initiate(state: SwarmState, i: int) -> None:
        if stimulus is None or stimulus.detects(state.positions[i]):
            state.arm_timer_random(i)
        else:
            state.deactivate_timer(i)

    def relay(state: SwarmState, i: int, bearings) -> None:
        if stimulus is None:
            # re-arm so waves keep coming at the rate aggregation needs
            state.arm_timer_random(i)
        sc = state.scratch[i]
        _record_direction(sc, bearings)
        mean = _resultant(bearings)
        if mean is not None:
            state.queue_move(i, state.config.step_length * mean)

    name = "aggregate_at_object" if stimulus is not None else "aggregate"
    return PrimitiveBinding(name, initiate, relay, setup, timer_rule="random",
                            stimulus=stimulus, moves_agents=True)


def follow_leader(target_direction, leader_id: Optional[int] = None
                  ) -> PrimitiveBinding:
    """A single leader walks a straight ray and keeps pinging; relayers chase
    the incoming pings, trailing the leader."""

    direction = np.asarray(target_direction, dtype=float)
    norm = float(np.linalg.norm(direction))
    if norm < 1e-12:
        raise ValueError("target_direction must be a nonzero vector")
    direction = direction / norm

    def setup(state: SwarmState) -> None:
        if leader_id is not None:
            for sc in state.scratch:
                sc.leader = False
            state.scratch[leader_id].leader = True
        for i in range(state.n_agents):
            if state.scratch[i].leader:
                state.arm_timer_random(i)
            else:
                state.deactivate_timer(i)

    def initiate(state: SwarmState, i: int) -> None:
        state.scratch[i].leader = True
        state.arm_timer_random(i)
        # one step along the ray per ping keeps the leader's pace matched
        # to the followers, who advance one step per received wave
        state.queue_move(i, state.config.step_length * direction)

    def relay(state: SwarmState, i: int, bearings) -> None:
        state.deactivate_timer(i)
        sc = state.scratch[i]
        sc.leader = False
        _record_direction(sc, bearings)
        mean = _resultant(bearings)
        if mean is not None:
            state.queue_move(i, state.config.step_length * mean)

    return PrimitiveBinding("follow_leader", initiate, relay, setup,
                            timer_rule="random", moves_agents=True)


def gas_expansion() -> PrimitiveBinding:
    """Move one step away from the circular mean of incoming pings; agents
    hearing nothing stay put, so expansion stalls once perception ceases."""

    def setup(state: SwarmState) -> None:
        _arm_all_random(state)

    def initiate(state: SwarmState, i: int) -> None:
        state.arm_timer_random(i)

    def relay(state: SwarmState, i: int, bearings) -> None:
        sc = state.scratch[i]
        _record_direction(sc, bearings)
        mean = _resultant(bearings)
        if mean is not None:
            state.queue_move(i, -state.config.step_length * mean)

    return PrimitiveBinding("gas_expansion", initiate, relay, setup,
                            timer_rule="random", moves_agents=True)


PRIMITIVE_NAMES = (
    "leader_election", "synchronization", "localize_object",
    "localize_center", "estimate_count", "periphery_detect",
    "aggregate", "aggregate_at_object", "follow_leader", "gas_expansion",
)


def make_binding(name: str, parameters: Optional[dict] = None,
                 stimulus: Optional[ObjectStimulus] = None) -> PrimitiveBinding:
    """Build a binding from its scenario/steering name and parameters."""
    params = dict(parameters or {})
    if name == "leader_election":
        return leader_election()
    if name == "synchronization":
        return synchronization()
    if name == "localize_object":
        if stimulus is None:
            raise ValueError("localize_object requires a stimulus")
        return localize_object(stimulus)
    if name == "localize_center":
        return localize_center()
    if name == "estimate_count":
        return estimate_count()
    if name == "periphery_detect":
        return periphery_detect()
    if name == "aggregate":
        return aggregate()
    if name == "aggregate_at_object":
        if stimulus is None:
            raise ValueError("aggregate_at_object requires a stimulus")
        return aggregate(stimulus)
    if name == "follow_leader":
        direction = params.get("target_direction")
        if direction is None:
            raise ValueError("follow_leader requires a target_direction")
        return follow_leader(direction, leader_id=params.get("leader_id"))
    if name == "gas_expansion":
        return gas_expansion()
    raise ValueError(f"unknown primitive {name!r}")
