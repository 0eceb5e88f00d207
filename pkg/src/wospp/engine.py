"""Discrete-time stepping of a ping-wave swarm.

Each timestep runs a fixed global phase order:

1. broadcast  -- agents flagged for broadcast emit a ping and turn refractory
2. delivery   -- inactive agents in range receive surviving pings, run the
                 relay codeblock once over all bearings, and turn active
3. refractory -- countdowns decrement; at zero the agent turns inactive again
4. timers     -- armed timers decrement; a timer hitting zero runs the
                 initiate codeblock and forces the agent active, whatever
                 state it was in
5. motion     -- displacements queued by codeblocks are applied, capped at
                 one step length per timestep

Relays therefore lag the triggering broadcast by exactly one timestep, which
makes a wavefront advance one communication hop per step.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components
from scipy.spatial import cKDTree

from .config import SimConfig

INACTIVE = 0
ACTIVE = 1
REFRACTORY = 2
STATE_NAMES = {INACTIVE: "inactive", ACTIVE: "active", REFRACTORY: "refractory"}

TIMER_OFF = -1

_INIT_ATTEMPT_CAP = 500


class ConnectivityError(RuntimeError):
    """Initial layout could not be made connected within the attempt cap."""


@dataclass
class PingReception:
    receiver_id: int
    bearing: np.ndarray  # unit vector from receiver toward sender
    timestep: int


@dataclass
class StepEvents:
    initiations: list[int] = field(default_factory=list)
    relays: list[PingReception] = field(default_factory=list)
    moves: list[tuple[int, np.ndarray]] = field(default_factory=list)


@dataclass
class AgentCore:
    """Per-agent view of the engine state (copied out of the arrays)."""

    id: int
    position: np.ndarray
    heading: float
    state: int
    timer: Optional[int]
    refractory_remaining: int
    pending_broadcast: bool


class SwarmState:
    """Mutable swarm state; stepped in place by exactly one thread."""

    def __init__(self, config: SimConfig, rng: np.random.Generator,
                 positions: np.ndarray, headings: np.ndarray):
        n = config.n_agents
        self.config = config
        self.rng = rng
        self.time = 0
        self.positions = positions
        self.headings = headings
        self.states = np.full(n, INACTIVE, dtype=np.int8)
        self.timers = np.full(n, TIMER_OFF, dtype=np.int64)
        self.refractory = np.zeros(n, dtype=np.int64)
        self.pending = np.zeros(n, dtype=bool)
        self.scratch: list = []
        self.stimulus = None
        self._queued_moves: dict[int, np.ndarray] = {}

    @property
    def n_agents(self) -> int:
        return self.config.n_agents

    def agent(self, i: int) -> AgentCore:
        t = int(self.timers[i])
        return AgentCore(
            id=i,
            position=self.positions[i].copy(),
            heading=float(self.headings[i]),
            state=int(self.states[i]),
            timer=None if t == TIMER_OFF else t,
            refractory_remaining=int(self.refractory[i]),
            pending_broadcast=bool(self.pending[i]),
        )

    # -- helpers available to codeblocks ------------------------------------

    def set_timer(self, i: int, value: int) -> None:
        if value < 1:
            raise ValueError("timer values must be >= 1")
        self.timers[i] = value

    def arm_timer_random(self, i: int) -> None:
        """Arm the timer with a random integer in (0, cycle_max]."""
        self.timers[i] = int(self.rng.integers(1, self.config.cycle_max + 1))

    def deactivate_timer(self, i: int) -> None:
        self.timers[i] = TIMER_OFF

    def queue_move(self, i: int, displacement: np.ndarray) -> None:
        prev = self._queued_moves.get(i)
        if prev is None:
            self._queued_moves[i] = np.asarray(displacement, dtype=float).copy()
        else:
            prev += displacement


def _connected(positions: np.ndarray, radius: float) -> bool:
    n = len(positions)
    pairs = cKDTree(positions).query_pairs(radius, output_type="ndarray")
    if n > 1 and len(pairs) == 0:
        return False
    graph = coo_matrix(
        (np.ones(len(pairs)), (pairs[:, 0], pairs[:, 1])), shape=(n, n)
    )
    n_comp, _ = connected_components(graph, directed=False)
    return n_comp == 1


def init_swarm(config: SimConfig, binding=None,
               rng: np.random.Generator | None = None) -> SwarmState:
    """Sample a connected initial layout and (optionally) arm a primitive.

    Positions are drawn uniformly in the disc of radius ``swarm_radius`` and
    rejected wholesale until the perception graph is connected.  Draw order
    (positions, headings, then the binding's timer draws) is fixed so equal
    seeds replay bit-identically.
    """
    if rng is None:
        rng = np.random.default_rng(config.rng_seed)
    n = config.n_agents
    for _ in range(_INIT_ATTEMPT_CAP):
        theta = rng.uniform(0.0, 2.0 * np.pi, n)
        rad = config.swarm_radius * np.sqrt(rng.uniform(0.0, 1.0, n))
        positions = np.column_stack((rad * np.cos(theta), rad * np.sin(theta)))
        if _connected(positions, config.perception_range):
            break
    else:
        raise ConnectivityError(
            f"no connected layout in {_INIT_ATTEMPT_CAP} attempts "
            f"(n_agents={n}, swarm_radius={config.swarm_radius}); "
            "the swarm is too sparse"
        )
    headings = rng.uniform(0.0, 2.0 * np.pi, n)
    state = SwarmState(config, rng, positions, headings)
    if binding is not None:
        from .primitives import bind
        bind(state, binding)
    return state


def deliver_pings(state: SwarmState, broadcasters: np.ndarray
                  ) -> dict[int, list[np.ndarray]]:
    """Compute surviving receptions for this step's broadcasters.

    Per (receiver, sender) pair in range a Bernoulli draw with the configured
    loss probability decides survival; draws run in receiver-id-major order.
    Pings from a coincident position carry no bearing and are dropped.
    """
    cfg = state.config
    inactive = np.flatnonzero(state.states == INACTIVE)
    if len(inactive) == 0 or len(broadcasters) == 0:
        return {}
    diff = state.positions[broadcasters][None, :, :] - \
        state.positions[inactive][:, None, :]
    dist = np.linalg.norm(diff, axis=2)
    in_range = (dist <= cfg.perception_range) & (dist > 0.0)
    rec_idx, snd_idx = np.nonzero(in_range)
    if len(rec_idx) == 0:
        return {}
    if cfg.loss_probability > 0.0:
        keep = state.rng.random(len(rec_idx)) >= cfg.loss_probability
        rec_idx, snd_idx = rec_idx[keep], snd_idx[keep]
        if len(rec_idx) == 0:
            return {}
    bearings = diff[rec_idx, snd_idx] / dist[rec_idx, snd_idx][:, None]
    if cfg.heading_noise_std > 0.0:
        ang = np.arctan2(bearings[:, 1], bearings[:, 0])
        ang += state.rng.normal(0.0, cfg.heading_noise_std, len(ang))
        bearings = np.column_stack((np.cos(ang), np.sin(ang)))
    by_receiver: dict[int, list[np.ndarray]] = {}
    for k in range(len(rec_idx)):
        by_receiver.setdefault(int(inactive[rec_idx[k]]), []).append(bearings[k])
    return by_receiver


def step(state: SwarmState, binding, collect_events: bool = True,
         apply_motion: bool = True) -> tuple[SwarmState, Optional[StepEvents]]:
    """Advance one timestep. Mutates ``state`` and returns it with events.

    ``apply_motion=False`` leaves queued displacements in
    ``state._queued_moves`` for a caller that merges motion across layers.
    """
    cfg = state.config
    events = StepEvents() if collect_events else None
    now = state.time

    # 1. broadcast
    broadcasters = np.flatnonzero(state.pending)
    if len(broadcasters) > 0:
        state.pending[broadcasters] = False
        state.states[broadcasters] = REFRACTORY
        state.refractory[broadcasters] = cfg.refractory_time

        # 2. delivery
        receptions = deliver_pings(state, broadcasters)
        for rid in sorted(receptions):
            bearings = receptions[rid]
            binding.relay(state, rid, bearings)
            state.states[rid] = ACTIVE
            state.pending[rid] = True
            if events is not None:
                events.relays.extend(
                    PingReception(rid, b, now) for b in bearings
                )

    # 3. refractory countdown
    counting = state.refractory > 0
    if counting.any():
        state.refractory[counting] -= 1
        done = counting & (state.refractory == 0) & (state.states == REFRACTORY)
        state.states[done] = INACTIVE

    # 4. timers (expiry forces active regardless of prior state)
    armed = state.timers > 0
    if armed.any():
        state.timers[armed] -= 1
        fired = np.flatnonzero(armed & (state.timers == 0))
        for i in fired:
            i = int(i)
            binding.initiate(state, i)
            state.states[i] = ACTIVE
            state.pending[i] = True
            state.refractory[i] = 0
            if state.timers[i] <= 0:
                state.timers[i] = TIMER_OFF
            if events is not None:
                events.initiations.append(i)

    if binding.each_step is not None:
        binding.each_step(state)

    # 5. motion
    if apply_motion and state._queued_moves:
        apply_queued_moves(state, events)

    state.time = now + 1
    return state, events


def apply_queued_moves(state: SwarmState, events: Optional[StepEvents] = None,
                       moves: Optional[dict[int, np.ndarray]] = None) -> None:
    """Apply (and cap) queued displacements, then clear the queue."""
    cap = state.config.step_length
    if moves is None:
        moves = state._queued_moves
    for i in sorted(moves):
        vec = moves[i]
        norm = float(np.linalg.norm(vec))
        if norm > cap:
            vec = vec * (cap / norm)
        state.positions[i] += vec
        if events is not None:
            events.moves.append((i, vec))
    state._queued_moves = {}


def run(state: SwarmState, binding, horizon: int, trace_sink=None,
        snapshot_period: int = 1) -> SwarmState:
    """Step ``horizon`` times, streaming events and periodic snapshots.

    The sink, when given, may implement ``on_events(timestep, events)`` and
    ``on_snapshot(state)``; snapshots fire every ``snapshot_period`` steps.
    """
    if horizon < 0:
        raise ValueError("horizon must be >= 0")
    want_events = trace_sink is not None and hasattr(trace_sink, "on_events")
    want_snaps = trace_sink is not None and hasattr(trace_sink, "on_snapshot")
    for _ in range(horizon):
        t = state.time
        _, events = step(state, binding, collect_events=want_events)
        if want_events:
            trace_sink.on_events(t, events)
        if want_snaps and state.time % snapshot_period == 0:
            trace_sink.on_snapshot(state)
    return state
