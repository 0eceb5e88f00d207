"""Scenario files, trace/metrics persistence, and the shared run loop.

Scenarios are flat JSON objects; traces and metrics files open with one JSON
metadata line (schema version, full config, seed) followed by CSV rows, so
every output is self-describing and replayable.
"""

from __future__ import annotations

import dataclasses
import io
import json
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .composer import Layer, LayerSet, Stage, _stage_binding
from .config import ConfigError, SimConfig
from .engine import (
    STATE_NAMES, SwarmState, TIMER_OFF, init_swarm, step,
)
from .metrics import MetricSample, standard_samples
from .primitives import (
    ObjectStimulus, PRIMITIVE_NAMES, PrimitiveBinding, bind, make_binding,
)

SCHEMA_VERSION = 1

_SIM_KEYS = {
    "n_agents", "swarm_radius", "perception_range", "refractory_time",
    "cycle_max", "step_length", "loss_probability", "heading_noise_std",
    "seed",
}
_RUN_KEYS = {"primitive", "parameters", "horizon", "schedule", "layers"}
_OUT_KEYS = {"trace", "metrics", "snapshot_period"}
_ALL_KEYS = _SIM_KEYS | _RUN_KEYS | _OUT_KEYS | {"stimulus"}


class ScenarioError(ValueError):
    """A scenario file violates the schema or a config invariant."""


@dataclass
class Scenario:
    sim: SimConfig
    primitive: Optional[str] = None
    parameters: dict = field(default_factory=dict)
    horizon: Optional[int] = None
    schedule: Optional[list[Stage]] = None
    layers: Optional[list[dict]] = None  # [{"channel": int, "primitive": str, "parameters": {}}]
    stimulus: Optional[ObjectStimulus] = None
    trace_path: Optional[str] = None
    metrics_path: Optional[str] = None
    snapshot_period: int = 10

    def total_horizon(self) -> int:
        if self.schedule is not None:
            return sum(st.duration for st in self.schedule)
        assert self.horizon is not None
        return self.horizon


def _require(cond: bool, message: str) -> None:
    if not cond:
        raise ScenarioError(message)


def parse_scenario(text: str) -> Scenario:
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"scenario is not valid JSON: {exc}") from exc
    _require(isinstance(raw, dict), "scenario must be a JSON object")
    unknown = set(raw) - _ALL_KEYS
    _require(not unknown, f"unknown scenario keys: {sorted(unknown)}")
    _require("n_agents" in raw, "missing required key 'n_agents'")
    _require("swarm_radius" in raw, "missing required key 'swarm_radius'")

    try:
        sim = SimConfig(
            n_agents=int(raw["n_agents"]),
            swarm_radius=float(raw["swarm_radius"]),
            perception_range=float(raw.get("perception_range", 1.0)),
            refractory_time=int(raw.get("refractory_time", 5)),
            cycle_max=int(raw.get("cycle_max", 100)),
            step_length=(float(raw["step_length"])
                         if raw.get("step_length") is not None else None),
            loss_probability=float(raw.get("loss_probability", 0.0)),
            heading_noise_std=float(raw.get("heading_noise_std", 0.0)),
            rng_seed=int(raw.get("seed", 0)),
        )
    except ConfigError as exc:
        raise ScenarioError(f"invalid simulation parameters: {exc}") from exc

    modes = [k for k in ("primitive", "schedule", "layers") if k in raw]
    _require(len(modes) == 1,
             f"exactly one of primitive/schedule/layers required, got {modes}")

    stimulus = None
    if raw.get("stimulus") is not None:
        st = raw["stimulus"]
        _require(isinstance(st, dict) and set(st) <= {"x", "y", "detection_radius"},
                 "stimulus must be {x, y, detection_radius}")
        _require("x" in st and "y" in st, "stimulus requires x and y")
        try:
            stimulus = ObjectStimulus(
                [float(st["x"]), float(st["y"])],
                float(st.get("detection_radius", 1.0)))
        except ValueError as exc:
            raise ScenarioError(str(exc)) from exc

    scenario = Scenario(
        sim=sim,
        stimulus=stimulus,
        trace_path=raw.get("trace"),
        metrics_path=raw.get("metrics"),
        snapshot_period=int(raw.get("snapshot_period", 10)),
    )
    _require(scenario.snapshot_period >= 1, "snapshot_period must be >= 1")

    if "primitive" in raw:
        name = raw["primitive"]
        _require(name in PRIMITIVE_NAMES, f"unknown primitive {name!r}")
        _require("horizon" in raw, "a primitive run requires 'horizon'")
        scenario.primitive = name
        scenario.parameters = dict(raw.get("parameters", {}))
        scenario.horizon = int(raw["horizon"])
        _require(scenario.horizon >= 0, "horizon must be >= 0")
    elif "schedule" in raw:
        _require("horizon" not in raw and "parameters" not in raw,
                 "schedule runs take durations per stage, not a horizon")
        stages = []
        _require(isinstance(raw["schedule"], list) and raw["schedule"],
                 "schedule must be a non-empty list")
        for entry in raw["schedule"]:
            _require(isinstance(entry, dict) and
                     set(entry) <= {"primitive", "duration", "parameters",
                                    "carryover"},
                     f"bad schedule entry {entry!r}")
            _require(entry.get("primitive") in PRIMITIVE_NAMES,
                     f"unknown primitive {entry.get('primitive')!r}")
            try:
                stages.append(Stage(
                    primitive=entry["primitive"],
                    duration=int(entry["duration"]),
                    parameters=dict(entry.get("parameters", {})),
                    carryover=tuple(entry.get("carryover", ())),
                ))
            except (KeyError, ValueError) as exc:
                raise ScenarioError(f"bad schedule entry: {exc}") from exc
        scenario.schedule = stages
    else:
        _require("horizon" in raw, "a layered run requires 'horizon'")
        _require(isinstance(raw["layers"], list) and raw["layers"],
                 "layers must be a non-empty list")
        layers = []
        seen = set()
        for entry in raw["layers"]:
            _require(isinstance(entry, dict) and
                     set(entry) <= {"channel", "primitive", "parameters"},
                     f"bad layer entry {entry!r}")
            _require(entry.get("primitive") in PRIMITIVE_NAMES,
                     f"unknown primitive {entry.get('primitive')!r}")
            channel = int(entry["channel"])
            _require(channel not in seen, f"duplicate channel id {channel}")
            seen.add(channel)
            layers.append({"channel": channel,
                           "primitive": entry["primitive"],
                           "parameters": dict(entry.get("parameters", {}))})
        scenario.layers = layers
        scenario.horizon = int(raw["horizon"])
        _require(scenario.horizon >= 0, "horizon must be >= 0")
    return scenario


def serialize_scenario(scenario: Scenario) -> str:
    sim = scenario.sim
    raw: dict = {
        "n_agents": sim.n_agents,
        "swarm_radius": sim.swarm_radius,
        "perception_range": sim.perception_range,
        "refractory_time": sim.refractory_time,
        "cycle_max": sim.cycle_max,
        "step_length": sim.step_length,
        "loss_probability": sim.loss_probability,
        "heading_noise_std": sim.heading_noise_std,
        "seed": sim.rng_seed,
        "snapshot_period": scenario.snapshot_period,
    }
    if scenario.primitive is not None:
        raw["primitive"] = scenario.primitive
        if scenario.parameters:
            raw["parameters"] = scenario.parameters
        raw["horizon"] = scenario.horizon
    elif scenario.schedule is not None:
        raw["schedule"] = [
            {"primitive": st.primitive, "duration": st.duration,
             "parameters": st.parameters, "carryover": list(st.carryover)}
            for st in scenario.schedule
        ]
    else:
        raw["layers"] = scenario.layers
        raw["horizon"] = scenario.horizon
    if scenario.stimulus is not None:
        raw["stimulus"] = {
            "x": float(scenario.stimulus.position[0]),
            "y": float(scenario.stimulus.position[1]),
            "detection_radius": scenario.stimulus.detection_radius,
        }
    if scenario.trace_path is not None:
        raw["trace"] = scenario.trace_path
    if scenario.metrics_path is not None:
        raw["metrics"] = scenario.metrics_path
    return json.dumps(raw, sort_keys=True, indent=2)


# ---------------------------------------------------------------------------
# persistence


def _metadata_line(config: SimConfig) -> str:
    cfg = dataclasses.asdict(config)
    return json.dumps(
        {"schema_version": SCHEMA_VERSION, "config": cfg,
         "seed": config.rng_seed},
        sort_keys=True)


TRACE_COLUMNS = ("timestep", "id", "x", "y", "state", "timer", "candidate",
                 "leader", "periphery", "estimate_x", "estimate_y", "n_est")


class TraceWriter:
    """Streams snapshot rows; one row per agent per snapshot."""

    def __init__(self, sink: io.TextIOBase, config: SimConfig):
        self.sink = sink
        self.sink.write(_metadata_line(config) + "\n")
        self.sink.write(",".join(TRACE_COLUMNS) + "\n")

    def on_snapshot(self, state: SwarmState) -> None:
        rows = []
        for i in range(state.n_agents):
            sc = state.scratch[i] if state.scratch else None
            timer = int(state.timers[i])
            est = sc.estimate_bearing if sc is not None else None
            rows.append(",".join((
                str(state.time),
                str(i),
                repr(float(state.positions[i, 0])),
                repr(float(state.positions[i, 1])),
                STATE_NAMES[int(state.states[i])],
                "" if timer == TIMER_OFF else str(timer),
                str(int(sc.candidate)) if sc is not None else "0",
                str(int(sc.leader)) if sc is not None else "0",
                str(int(sc.periphery)) if sc is not None else "0",
                "" if est is None else repr(float(est[0])),
                "" if est is None else repr(float(est[1])),
                repr(float(sc.n_est)) if sc is not None else "0.0",
            )))
        self.sink.write("\n".join(rows) + "\n")


class MetricsWriter:
    def __init__(self, sink: io.TextIOBase, config: SimConfig):
        self.sink = sink
        self.sink.write(_metadata_line(config) + "\n")
        self.sink.write("timestep,name,value\n")

    def write_samples(self, samples: list[MetricSample]) -> None:
        for s in samples:
            self.sink.write(f"{s.timestep},{s.name},{s.value!r}\n")

    def on_snapshot(self, state: SwarmState) -> None:
        self.write_samples(standard_samples(state))


class CollectSink:
    """In-memory sink used by sweeps and tests."""

    def __init__(self):
        self.samples: list[MetricSample] = []
        self.events: list = []

    def on_events(self, t, events) -> None:
        self.events.append((t, events))

    def on_snapshot(self, state: SwarmState) -> None:
        self.samples.extend(standard_samples(state))


class SimSession:
    """One live simulation: state, active binding, writers, step loop.

    Both the headless CLI runs and the steering gateway step through this
    class, so an uncommanded served run writes bytes identical to a headless
    run of the same scenario.
    """

    def __init__(self, scenario: Scenario, seed_override: Optional[int] = None,
                 steps_override: Optional[int] = None,
                 trace_sink: Optional[io.TextIOBase] = None,
                 metrics_sink: Optional[io.TextIOBase] = None,
                 collect: Optional[CollectSink] = None):
        self.scenario = scenario
        sim = scenario.sim
        if seed_override is not None:
            sim = dataclasses.replace(sim, rng_seed=seed_override)
        self.config = sim
        self.stimulus = scenario.stimulus
        self.snapshot_period = scenario.snapshot_period
        self.horizon = (steps_override if steps_override is not None
                        else scenario.total_horizon())
        self.collect = collect

        self.layer_set: Optional[LayerSet] = None
        self.schedule = scenario.schedule
        self._stage_index = -1
        self._stage_steps_left = 0
        self.binding: Optional[PrimitiveBinding] = None

        if scenario.layers is not None:
            self.state = init_swarm(sim)
            layers = [Layer(entry["channel"],
                            make_binding(entry["primitive"],
                                         entry["parameters"],
                                         stimulus=self.stimulus))
                      for entry in scenario.layers]
            self.layer_set = LayerSet(self.state, layers)
            self.active_binding = "+".join(
                la.binding.primitive_id for la in self.layer_set.layers)
        elif scenario.schedule is not None:
            self.state = init_swarm(sim)
            self._enter_stage(0)
        else:
            binding = make_binding(scenario.primitive, scenario.parameters,
                                   stimulus=self.stimulus)
            self.state = init_swarm(sim, binding)
            self.binding = binding
            self.active_binding = binding.primitive_id

        self.trace_writer = (TraceWriter(trace_sink, sim)
                             if trace_sink is not None else None)
        self.metrics_writer = (MetricsWriter(metrics_sink, sim)
                               if metrics_sink is not None else None)
        self._snapshot()  # initial state at t=0

    # -- stage handling ------------------------------------------------------

    def _enter_stage(self, index: int) -> None:
        assert self.schedule is not None
        if self.binding is not None and self.binding.finalize is not None:
            self.binding.finalize(self.state)
        stage = self.schedule[index]
        binding = _stage_binding(stage, self.state, self.stimulus)
        bind(self.state, binding, carryover=tuple(stage.carryover))
        self._stage_index = index
        self._stage_steps_left = stage.duration
        self.binding = binding
        self.active_binding = f"{binding.primitive_id}@{index}"

    # -- stepping --------------------------------------------------------

    @property
    def time(self) -> int:
        return self.state.time

    @property
    def done(self) -> bool:
        return self.state.time >= self.horizon

    def step_once(self):
        """Advance one timestep and emit the snapshot if one is due."""
        if self.layer_set is not None:
            events = self.layer_set.step_all(collect_events=False)
        else:
            if self.schedule is not None and self._stage_steps_left == 0:
                if self._stage_index + 1 < len(self.schedule):
                    self._enter_stage(self._stage_index + 1)
            _, events = step(self.state, self.binding, collect_events=False)
            if self.schedule is not None:
                self._stage_steps_left -= 1
        if self.state.time % self.snapshot_period == 0:
            self._snapshot()
        return events

    def _snapshot(self) -> None:
        st = self.state
        if self.trace_writer is not None:
            self.trace_writer.on_snapshot(st)
        if self.metrics_writer is not None:
            self.metrics_writer.on_snapshot(st)
        if self.collect is not None:
            self.collect.on_snapshot(st)

    def run_to_horizon(self) -> None:
        while not self.done:
            self.step_once()
        if (self.schedule is not None and self.binding is not None
                and self.binding.finalize is not None):
            self.binding.finalize(self.state)

    # -- live steering hooks (used by the gateway) -------------------------

    def switch_primitive(self, name: str, parameters: Optional[dict] = None,
                         carryover: tuple[str, ...] = ("leader",)) -> None:
        if self.layer_set is not None:
            raise ValueError("cannot switch primitives on a layered run")
        if self.binding is not None and self.binding.finalize is not None:
            self.binding.finalize(self.state)
        binding = make_binding(name, parameters, stimulus=self.stimulus)
        bind(self.state, binding, carryover=carryover)
        self.binding = binding
        self.schedule = None
        self.active_binding = binding.primitive_id

    def place_stimulus(self, x: float, y: float,
                       detection_radius: float = 1.0) -> None:
        self.stimulus = ObjectStimulus([x, y], detection_radius)
        self.state.stimulus = self.stimulus

    def reset(self, seed: Optional[int] = None) -> None:
        sim = self.config
        if seed is not None:
            sim = dataclasses.replace(sim, rng_seed=seed)
            self.config = sim
        if self.binding is None:
            raise ValueError("reset is only supported for primitive runs")
        name = self.binding.primitive_id
        binding = make_binding(name, self.scenario.parameters,
                               stimulus=self.stimulus)
        self.state = init_swarm(sim, binding)
        self.binding = binding


def execute(scenario: Scenario, seed_override: Optional[int] = None,
            steps_override: Optional[int] = None,
            trace_path: Optional[str] = None,
            metrics_path: Optional[str] = None,
            collect: Optional[CollectSink] = None) -> SimSession:
    """Headless run of a scenario, writing any requested output files."""
    trace_path = trace_path or scenario.trace_path
    metrics_path = metrics_path or scenario.metrics_path
    trace_sink = open(trace_path, "w") if trace_path else None
    metrics_sink = open(metrics_path, "w") if metrics_path else None
    try:
        session = SimSession(scenario, seed_override=seed_override,
                             steps_override=steps_override,
                             trace_sink=trace_sink, metrics_sink=metrics_sink,
                             collect=collect)
        session.run_to_horizon()
    finally:
        if trace_sink:
            trace_sink.close()
        if metrics_sink:
            metrics_sink.close()
    return session


def sweep(scenario: Scenario, n_seeds: int,
          base_seed: Optional[int] = None) -> dict:
    """Run consecutive seeds and aggregate metrics per (timestep, name).

    Returns {(timestep, name): (mean, std, count)} over runs with seeds
    base_seed .. base_seed + n_seeds - 1.
    """
    if n_seeds < 1:
        raise ValueError("n_seeds must be >= 1")
    if base_seed is None:
        base_seed = scenario.sim.rng_seed
    quiet = dataclasses.replace(scenario, trace_path=None, metrics_path=None)
    buckets: dict[tuple[int, str], list[float]] = {}
    for k in range(n_seeds):
        collect = CollectSink()
        execute(quiet, seed_override=base_seed + k, collect=collect)
        for s in collect.samples:
            buckets.setdefault((s.timestep, s.name), []).append(s.value)
    return {
        key: (float(np.mean(vals)), float(np.std(vals)), len(vals))
        for key, vals in sorted(buckets.items())
    }


def write_sweep(aggregated: dict, sink: io.TextIOBase, config: SimConfig,
                base_seed: int, n_seeds: int) -> None:
    meta = json.loads(_metadata_line(config))
    meta["sweep"] = {"base_seed": base_seed, "n_seeds": n_seeds}
    sink.write(json.dumps(meta, sort_keys=True) + "\n")
    sink.write("timestep,name,mean,std,count\n")
    for (t, name), (mean, std, count) in aggregated.items():
        sink.write(f"{t},{name},{mean!r},{std!r},{count}\n")
