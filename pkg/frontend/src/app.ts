/**
 * Browser entry point: wires the WebSocket transport, view state, canvas
 * renderer, and control panel together. All protocol work lives in the
 * imported modules; this file is DOM plumbing only.
 */
import {
  createLineParser,
  createRequestIds,
  parseServerMessage,
  PARAM_WHITELIST,
  PRIMITIVE_NAMES,
} from "./protocol.js";
import { ViewState } from "./viewstate.js";
import { ViewTransform } from "./transform.js";
import { render, Canvas2DLike } from "./render.js";
import { dispatch, UserAction } from "./dispatch.js";

function byId<T extends HTMLElement>(id: string): T {
  const el = document.getElementById(id);
  if (!el) throw new Error(`missing element #${id}`);
  return el as T;
}

export function startConsole(wsUrl: string): void {
  const canvas = byId<HTMLCanvasElement>("swarm");
  const ctx = canvas.getContext("2d") as unknown as Canvas2DLike;
  const view = new ViewState();
  const transform = new ViewTransform(canvas.width, canvas.height);
  const nextRequestId = createRequestIds();

  const socket = new WebSocket(wsUrl);
  const parser = createLineParser((raw) => {
    const message = parseServerMessage(raw);
    if (!message) return;
    if (message.type === "snapshot") {
      if (!transform.isFitted) transform.fitInitial(message);
      view.applySnapshot(message);
    } else {
      view.applyAck(message);
    }
  });
  socket.onopen = () => {
    view.connection = "connected";
  };
  socket.onmessage = (event) => parser.feed(String(event.data));
  socket.onclose = () => {
    view.connection = "disconnected";
  };
  socket.onerror = () => {
    view.connection = "disconnected";
  };

  const act = (action: UserAction) => {
    try {
      dispatch(action, view, transform, nextRequestId,
               (line) => socket.send(line));
    } catch (err) {
      view.lastError = err instanceof Error ? err.message : String(err);
    }
  };

  byId<HTMLButtonElement>("pause").onclick = () => act({ type: "pause" });
  byId<HTMLButtonElement>("resume").onclick = () => act({ type: "resume" });
  byId<HTMLButtonElement>("step").onclick = () => {
    const n = Number(byId<HTMLInputElement>("step-n").value) || 1;
    act({ type: "step", n });
  };
  byId<HTMLButtonElement>("reset").onclick = () => act({ type: "reset" });

  const primitiveSelect = byId<HTMLSelectElement>("primitive");
  for (const name of PRIMITIVE_NAMES) {
    const option = document.createElement("option");
    option.value = name;
    option.textContent = name;
    primitiveSelect.appendChild(option);
  }
  byId<HTMLButtonElement>("apply-primitive").onclick = () =>
    act({ type: "selectPrimitive", name: primitiveSelect.value });

  const paramSelect = byId<HTMLSelectElement>("param");
  for (const name of PARAM_WHITELIST) {
    const option = document.createElement("option");
    option.value = name;
    option.textContent = name;
    paramSelect.appendChild(option);
  }
  byId<HTMLButtonElement>("apply-param").onclick = () => {
    const value = Number(byId<HTMLInputElement>("param-value").value);
    if (Number.isFinite(value)) {
      act({ type: "setParam", param: paramSelect.value, value });
    }
  };

  canvas.onclick = (event) => {
    if (!byId<HTMLInputElement>("stimulus-tool").checked) return;
    const rect = canvas.getBoundingClientRect();
    const radius =
      Number(byId<HTMLInputElement>("stimulus-radius").value) || 1.0;
    act({
      type: "placeStimulus",
      screen: { x: event.clientX - rect.left, y: event.clientY - rect.top },
      detectionRadius: radius,
    });
  };

  const frame = () => {
    render(view, ctx, transform, canvas.width, canvas.height);
    requestAnimationFrame(frame);
  };
  requestAnimationFrame(frame);
}

declare global {
  interface Window {
    startConsole: typeof startConsole;
  }
}

if (typeof window !== "undefined") {
  window.startConsole = startConsole;
}
