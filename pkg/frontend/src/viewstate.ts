/**
 * Client-side session state: the latest complete snapshot, connection
 * status, commands awaiting acknowledgment, and per-metric history ring
 * buffers for the sparkline charts.
 */
import type { Ack, Snapshot } from "./protocol.js";

export type ConnectionStatus = "connecting" | "connected" | "disconnected";

export const CHARTED_METRICS = [
  "rms_to_centroid",
  "candidate_count",
  "delta_phi_max",
  "n_est_mean",
] as const;

export type ChartedMetric = (typeof CHARTED_METRICS)[number];

/** Fixed-capacity history; oldest values fall off the front. */
export class RingBuffer {
  private readonly data: (number | null)[];
  private start = 0;
  private count = 0;

  constructor(readonly capacity: number) {
    if (capacity < 1) throw new Error("capacity must be >= 1");
    this.data = new Array(capacity).fill(null);
  }

  push(value: number | null): void {
    const end = (this.start + this.count) % this.capacity;
    this.data[end] = value;
    if (this.count < this.capacity) {
      this.count += 1;
    } else {
      this.start = (this.start + 1) % this.capacity;
    }
  }

  get length(): number {
    return this.count;
  }

  /** Oldest-first copy of the stored values. */
  values(): (number | null)[] {
    const out: (number | null)[] = [];
    for (let i = 0; i < this.count; i++) {
      out.push(this.data[(this.start + i) % this.capacity]!);
    }
    return out;
  }
}

export interface PendingCommand {
  kind: string;
  sentAt: number; // ms clock, for stale-command display
}

export class ViewState {
  connection: ConnectionStatus = "connecting";
  snapshot: Snapshot | null = null;
  lastSeq = -1;
  readonly pending = new Map<string, PendingCommand>();
  lastError: string | null = null;
  readonly charts = new Map<ChartedMetric, RingBuffer>();

  constructor(chartCapacity = 240) {
    for (const name of CHARTED_METRICS) {
      this.charts.set(name, new RingBuffer(chartCapacity));
    }
  }

  /**
   * Accept a snapshot if it advances seq; stale or duplicate snapshots are
   * dropped so a rendered frame always reflects the newest complete state.
   */
  applySnapshot(snapshot: Snapshot): boolean {
    if (snapshot.seq <= this.lastSeq) return false;
    this.lastSeq = snapshot.seq;
    this.snapshot = snapshot;
    for (const name of CHARTED_METRICS) {
      const value = snapshot.metrics[name];
      this.charts.get(name)!.push(value === undefined ? null : value);
    }
    return true;
  }

  /** Resolve a pending command; a negative ack surfaces its reason. */
  applyAck(ack: Ack): void {
    if (ack.request_id !== null) this.pending.delete(ack.request_id);
    if (!ack.ok) this.lastError = ack.error ?? "command rejected";
  }

  markPending(requestId: string, kind: string, nowMs: number): void {
    this.pending.set(requestId, { kind, sentAt: nowMs });
  }

  /** True while a command of this kind awaits its ack (disables controls). */
  hasPending(kind: string): boolean {
    for (const entry of this.pending.values()) {
      if (entry.kind === kind) return true;
    }
    return false;
  }
}
