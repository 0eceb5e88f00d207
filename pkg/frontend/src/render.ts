/**
 * Canvas drawing. Works against a minimal 2D-context interface so tests can
 * substitute a recording fake; the browser passes the real
 * CanvasRenderingContext2D.
 */
import type { Agent, Snapshot } from "./protocol.js";
import { CHARTED_METRICS, ViewState } from "./viewstate.js";
import type { ViewTransform } from "./transform.js";

/** Agent state colors: inactive black, active red, refractory green. */
export const STATE_COLORS: Record<Agent["state"], string> = {
  inactive: "#000000",
  active: "#d62728",
  refractory: "#2ca02c",
};

export const AGENT_RADIUS_PX = 4;
export const ESTIMATE_ARROW_PX = 18;

/** The subset of CanvasRenderingContext2D the renderer needs. */
export interface Canvas2DLike {
  fillStyle: string;
  strokeStyle: string;
  lineWidth: number;
  font: string;
  beginPath(): void;
  arc(x: number, y: number, r: number, a0: number, a1: number): void;
  moveTo(x: number, y: number): void;
  lineTo(x: number, y: number): void;
  rect(x: number, y: number, w: number, h: number): void;
  fill(): void;
  stroke(): void;
  clearRect(x: number, y: number, w: number, h: number): void;
  fillRect(x: number, y: number, w: number, h: number): void;
  fillText(text: string, x: number, y: number): void;
}

function drawAgent(ctx: Canvas2DLike, agent: Agent, t: ViewTransform): void {
  const p = t.worldToScreen(agent);
  if (agent.estimate) {
    // bearing estimates point along a unit vector in world axes
    ctx.strokeStyle = "#888888";
    ctx.lineWidth = 1;
    ctx.beginPath();
    ctx.moveTo(p.x, p.y);
    ctx.lineTo(
      p.x + agent.estimate[0] * ESTIMATE_ARROW_PX,
      p.y - agent.estimate[1] * ESTIMATE_ARROW_PX,
    );
    ctx.stroke();
  }
  ctx.fillStyle = STATE_COLORS[agent.state];
  ctx.beginPath();
  ctx.arc(p.x, p.y, AGENT_RADIUS_PX, 0, Math.PI * 2);
  ctx.fill();
  if (agent.leader || agent.candidate) {
    ctx.strokeStyle = agent.leader ? "#f5a623" : "#1f77b4";
    ctx.lineWidth = 2;
    ctx.beginPath();
    ctx.arc(p.x, p.y, AGENT_RADIUS_PX + 3, 0, Math.PI * 2);
    ctx.stroke();
  }
  if (agent.periphery) {
    ctx.strokeStyle = "#b06ad4";
    ctx.lineWidth = 1;
    ctx.beginPath();
    ctx.arc(p.x, p.y, AGENT_RADIUS_PX + 6, 0, Math.PI * 2);
    ctx.stroke();
  }
}

function drawStimulus(ctx: Canvas2DLike, snapshot: Snapshot,
                      t: ViewTransform): void {
  if (!snapshot.stimulus) return;
  const p = t.worldToScreen(snapshot.stimulus);
  ctx.strokeStyle = "#ff8c00";
  ctx.lineWidth = 2;
  ctx.beginPath();
  ctx.arc(p.x, p.y, snapshot.stimulus.detection_radius * t.pixelsPerUnit,
          0, Math.PI * 2);
  ctx.stroke();
  ctx.fillStyle = "#ff8c00";
  ctx.beginPath();
  ctx.arc(p.x, p.y, 3, 0, Math.PI * 2);
  ctx.fill();
}

function drawSparklines(ctx: Canvas2DLike, view: ViewState,
                        width: number, height: number): void {
  const laneWidth = width / CHARTED_METRICS.length;
  const laneHeight = 40;
  const top = height - laneHeight - 4;
  CHARTED_METRICS.forEach((name, lane) => {
    const values = view.charts.get(name)!.values();
    const x0 = lane * laneWidth + 6;
    ctx.fillStyle = "#555555";
    ctx.font = "10px sans-serif";
    const latest = values.length ? values[values.length - 1] : null;
    ctx.fillText(
      `${name}: ${latest === null || latest === undefined ? "-" : latest.toFixed(3)}`,
      x0, top - 2,
    );
    const finite = values.filter((v): v is number => v !== null);
    if (finite.length < 2) return;
    const lo = Math.min(...finite);
    const hi = Math.max(...finite);
    const span = hi - lo || 1;
    ctx.strokeStyle = "#1f77b4";
    ctx.lineWidth = 1;
    ctx.beginPath();
    let started = false;
    values.forEach((v, i) => {
      if (v === null) {
        started = false;
        return;
      }
      const x = x0 + (i / (values.length - 1)) * (laneWidth - 12);
      const y = top + laneHeight - ((v - lo) / span) * laneHeight;
      if (started) {
        ctx.lineTo(x, y);
      } else {
        ctx.moveTo(x, y);
        started = true;
      }
    });
    ctx.stroke();
  });
}

function drawHud(ctx: Canvas2DLike, view: ViewState): void {
  const s = view.snapshot!;
  ctx.fillStyle = "#333333";
  ctx.font = "12px sans-serif";
  const mode = s.paused ? "paused" : "running";
  ctx.fillText(
    `t=${s.timestep}  ${s.active_binding ?? "idle"}  ${mode}  seq=${s.seq}`,
    8, 16,
  );
  if (view.lastError) {
    ctx.fillStyle = "#c0392b";
    ctx.fillText(`error: ${view.lastError}`, 8, 32);
  }
}

/**
 * Draw one complete frame from the latest snapshot. On disconnect the last
 * frame is redrawn with a visible stale banner instead of going blank.
 */
export function render(view: ViewState, ctx: Canvas2DLike,
                       transform: ViewTransform,
                       width: number, height: number): void {
  ctx.clearRect(0, 0, width, height);
  ctx.fillStyle = "#fafafa";
  ctx.fillRect(0, 0, width, height);
  const snapshot = view.snapshot;
  if (!snapshot) {
    ctx.fillStyle = "#555555";
    ctx.font = "14px sans-serif";
    ctx.fillText("waiting for first snapshot...", 8, 20);
    return;
  }
  transform.follow(snapshot);
  drawStimulus(ctx, snapshot, transform);
  for (const agent of snapshot.agents) {
    drawAgent(ctx, agent, transform);
  }
  drawHud(ctx, view);
  drawSparklines(ctx, view, width, height);
  if (view.connection !== "connected") {
    ctx.fillStyle = "#c0392b";
    ctx.font = "14px sans-serif";
    ctx.fillText("STALE - connection lost", width / 2 - 80, 20);
  }
}
