/**
 * Maps user interactions to wire commands. Every outgoing message is built
 * here and re-validated against the command schema, so the UI cannot emit
 * anything the gateway does not understand.
 */
import {
  CommandMessage,
  CommandSchema,
  PARAM_WHITELIST,
  PRIMITIVE_NAMES,
  PROTOCOL_VERSION,
  TunableParam,
} from "./protocol.js";
import type { Point, ViewTransform } from "./transform.js";
import type { ViewState } from "./viewstate.js";

export type UserAction =
  | { type: "pause" }
  | { type: "resume" }
  | { type: "step"; n: number }
  | { type: "selectPrimitive"; name: string }
  | { type: "setParam"; param: string; value: number }
  | { type: "placeStimulus"; screen: Point; detectionRadius: number }
  | { type: "reset"; seed?: number };

export class DispatchError extends Error {}

/**
 * Build the CommandMessage for one user action. Canvas clicks arrive in
 * screen pixels and are converted to world units through the view
 * transform. Throws DispatchError for anything outside the schema.
 */
export function buildCommand(
  action: UserAction,
  transform: ViewTransform,
  nextRequestId: () => string,
): CommandMessage {
  const base = {
    v: PROTOCOL_VERSION,
    type: "command",
    request_id: nextRequestId(),
  } as const;
  let raw: unknown;
  switch (action.type) {
    case "pause":
      raw = { ...base, kind: "pause" };
      break;
    case "resume":
      raw = { ...base, kind: "resume" };
      break;
    case "step":
      raw = { ...base, kind: "step_n", n: action.n };
      break;
    case "selectPrimitive":
      if (!(PRIMITIVE_NAMES as readonly string[]).includes(action.name)) {
        throw new DispatchError(`unknown primitive: ${action.name}`);
      }
      raw = { ...base, kind: "set_primitive", primitive: action.name };
      break;
    case "setParam":
      if (!(PARAM_WHITELIST as readonly string[]).includes(action.param)) {
        throw new DispatchError(`parameter not live-tunable: ${action.param}`);
      }
      raw = {
        ...base,
        kind: "set_param",
        param: action.param as TunableParam,
        value: action.value,
      };
      break;
    case "placeStimulus": {
      const world = transform.screenToWorld(action.screen);
      raw = {
        ...base,
        kind: "place_stimulus",
        x: world.x,
        y: world.y,
        detection_radius: action.detectionRadius,
      };
      break;
    }
    case "reset":
      raw = action.seed === undefined
        ? { ...base, kind: "reset" }
        : { ...base, kind: "reset", seed: action.seed };
      break;
  }
  const checked = CommandSchema.safeParse(raw);
  if (!checked.success) {
    throw new DispatchError(`invalid command: ${checked.error.message}`);
  }
  return checked.data;
}

/**
 * Validate, register as pending, and hand the encoded command to the
 * transport. Returns the message for logging/tests.
 */
export function dispatch(
  action: UserAction,
  view: ViewState,
  transform: ViewTransform,
  nextRequestId: () => string,
  send: (line: string) => void,
  nowMs: number = Date.now(),
): CommandMessage {
  const message = buildCommand(action, transform, nextRequestId);
  view.markPending(message.request_id, message.kind, nowMs);
  send(JSON.stringify(message) + "\n");
  return message;
}
