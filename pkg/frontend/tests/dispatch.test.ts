import { describe, expect, it } from "vitest";
import { buildCommand, dispatch, DispatchError, UserAction }
  from "../src/dispatch.js";
import { CommandSchema, createRequestIds } from "../src/protocol.js";
import type { Snapshot } from "../src/protocol.js";
import { ViewTransform } from "../src/transform.js";
import { ViewState } from "../src/viewstate.js";

function fittedTransform(): ViewTransform {
  const t = new ViewTransform(800, 600);
  const snap: Snapshot = {
    v: 1, type: "snapshot", seq: 1, timestep: 0, paused: false,
    active_binding: null, metrics: {}, stimulus: null,
    agents: [[2, 0], [-2, 0], [0, 2], [0, -2]].map(([x, y], id) => ({
      id, x: x!, y: y!, state: "inactive" as const,
      candidate: false, leader: false, periphery: false, estimate: null,
    })),
  };
  t.fitInitial(snap);
  return t;
}

const ids = () => createRequestIds("t");

describe("buildCommand", () => {
  it("maps the control actions to their wire kinds", () => {
    const t = fittedTransform();
    expect(buildCommand({ type: "pause" }, t, ids()).kind).toBe("pause");
    expect(buildCommand({ type: "resume" }, t, ids()).kind).toBe("resume");
    const stepped = buildCommand({ type: "step", n: 5 }, t, ids());
    expect(stepped).toMatchObject({ kind: "step_n", n: 5 });
    const prim = buildCommand(
      { type: "selectPrimitive", name: "gas_expansion" }, t, ids());
    expect(prim).toMatchObject({ kind: "set_primitive",
                                 primitive: "gas_expansion" });
    const reset = buildCommand({ type: "reset", seed: 7 }, t, ids());
    expect(reset).toMatchObject({ kind: "reset", seed: 7 });
  });

  it("converts a canvas click to world units for place_stimulus", () => {
    const t = fittedTransform();
    const world = { x: 1.25, y: -0.75 };
    const screen = t.worldToScreen(world);
    const command = buildCommand(
      { type: "placeStimulus", screen, detectionRadius: 0.5 }, t, ids());
    expect(command.kind).toBe("place_stimulus");
    if (command.kind === "place_stimulus") {
      expect(command.x).toBeCloseTo(world.x, 10);
      expect(command.y).toBeCloseTo(world.y, 10);
      expect(command.detection_radius).toBe(0.5);
    }
  });

  it("refuses unknown primitives and non-whitelisted parameters", () => {
    const t = fittedTransform();
    expect(() => buildCommand(
      { type: "selectPrimitive", name: "teleport" }, t, ids()))
      .toThrow(DispatchError);
    expect(() => buildCommand(
      { type: "setParam", param: "n_agents", value: 9 }, t, ids()))
      .toThrow(DispatchError);
  });

  it("only ever emits schema-valid commands (fuzz over all actions)", () => {
    const t = fittedTransform();
    const next = ids();
    const actions: UserAction[] = [
      { type: "pause" },
      { type: "resume" },
      { type: "step", n: 3 },
      { type: "selectPrimitive", name: "aggregate" },
      { type: "setParam", param: "cycle_max", value: 250 },
      { type: "setParam", param: "loss_probability", value: 0.3 },
      { type: "placeStimulus", screen: { x: 10, y: 20 },
        detectionRadius: 1.0 },
      { type: "reset" },
      { type: "reset", seed: 11 },
    ];
    for (const action of actions) {
      const command = buildCommand(action, t, next);
      expect(CommandSchema.safeParse(command).success).toBe(true);
    }
  });
});

describe("dispatch", () => {
  it("registers the command as pending and sends one framed line", () => {
    const t = fittedTransform();
    const view = new ViewState();
    const sent: string[] = [];
    const message = dispatch({ type: "pause" }, view, t, ids(),
                             (line) => sent.push(line), 123);
    expect(sent).toHaveLength(1);
    expect(sent[0]!.endsWith("\n")).toBe(true);
    expect(JSON.parse(sent[0]!)).toEqual(message);
    expect(view.hasPending("pause")).toBe(true);
    expect(view.pending.get(message.request_id)?.sentAt).toBe(123);
  });

  it("uses a fresh request id per dispatch", () => {
    const t = fittedTransform();
    const view = new ViewState();
    const next = ids();
    const noop = () => {};
    const a = dispatch({ type: "pause" }, view, t, next, noop);
    const b = dispatch({ type: "resume" }, view, t, next, noop);
    expect(a.request_id).not.toBe(b.request_id);
    expect(view.pending.size).toBe(2);
  });
});
