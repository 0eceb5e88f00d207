/**
 * Wire protocol for the steering gateway: one JSON object per line, UTF-8,
 * "v": 1 on every message. This module owns the schemas, the line framing,
 * and the command constructors; nothing else in the console builds raw
 * messages.
 */
import { z } from "zod";

export const PROTOCOL_VERSION = 1;

export const AGENT_STATES = ["inactive", "active", "refractory"] as const;

export const PRIMITIVE_NAMES = [
  "synchronization",
  "leader_election",
  "estimate_count",
  "localize_object",
  "localize_center",
  "periphery_detect",
  "aggregate",
  "aggregate_at_object",
  "follow_leader",
  "gas_expansion",
] as const;

/** Parameters the gateway accepts on a live run. */
export const PARAM_WHITELIST = [
  "cycle_max",
  "refractory_time",
  "loss_probability",
  "snapshot_period",
] as const;

export type TunableParam = (typeof PARAM_WHITELIST)[number];

const AgentSchema = z.object({
  id: z.number().int().nonnegative(),
  x: z.number(),
  y: z.number(),
  state: z.enum(AGENT_STATES),
  candidate: z.boolean(),
  leader: z.boolean(),
  periphery: z.boolean(),
  estimate: z.tuple([z.number(), z.number()]).nullable(),
});

const StimulusSchema = z.object({
  x: z.number(),
  y: z.number(),
  detection_radius: z.number().positive(),
});

export const SnapshotSchema = z.object({
  v: z.literal(PROTOCOL_VERSION),
  type: z.literal("snapshot"),
  seq: z.number().int().nonnegative(),
  timestep: z.number().int().nonnegative(),
  paused: z.boolean(),
  active_binding: z.string().nullable(),
  agents: z.array(AgentSchema),
  metrics: z.record(z.string(), z.number().nullable()),
  stimulus: StimulusSchema.nullable(),
});

export const AckSchema = z.object({
  v: z.literal(PROTOCOL_VERSION),
  type: z.literal("ack"),
  request_id: z.string().nullable(),
  ok: z.boolean(),
  applied_at: z.number().int().nonnegative().optional(),
  error: z.string().optional(),
});

export type Agent = z.infer<typeof AgentSchema>;
export type Stimulus = z.infer<typeof StimulusSchema>;
export type Snapshot = z.infer<typeof SnapshotSchema>;
export type Ack = z.infer<typeof AckSchema>;
export type ServerMessage = Snapshot | Ack;

const commandBase = {
  v: z.literal(PROTOCOL_VERSION),
  type: z.literal("command"),
  request_id: z.string().min(1),
};

/** Everything the console is allowed to put on the wire. */
export const CommandSchema = z.discriminatedUnion("kind", [
  z.object({ ...commandBase, kind: z.literal("pause") }).strict(),
  z.object({ ...commandBase, kind: z.literal("resume") }).strict(),
  z.object({
    ...commandBase,
    kind: z.literal("step_n"),
    n: z.number().int().positive(),
  }).strict(),
  z.object({
    ...commandBase,
    kind: z.literal("set_primitive"),
    primitive: z.enum(PRIMITIVE_NAMES),
    parameters: z.record(z.string(), z.number()).optional(),
  }).strict(),
  z.object({
    ...commandBase,
    kind: z.literal("set_param"),
    param: z.enum(PARAM_WHITELIST),
    value: z.number(),
  }).strict(),
  z.object({
    ...commandBase,
    kind: z.literal("place_stimulus"),
    x: z.number(),
    y: z.number(),
    detection_radius: z.number().positive(),
  }).strict(),
  z.object({
    ...commandBase,
    kind: z.literal("reset"),
    seed: z.number().int().nonnegative().optional(),
  }).strict(),
]);

export type CommandMessage = z.infer<typeof CommandSchema>;

/** Parse one decoded JSON value into a typed server message, or null. */
export function parseServerMessage(raw: unknown): ServerMessage | null {
  const snap = SnapshotSchema.safeParse(raw);
  if (snap.success) return snap.data;
  const ack = AckSchema.safeParse(raw);
  if (ack.success) return ack.data;
  return null;
}

export function encodeMessage(message: CommandMessage): string {
  return JSON.stringify(message) + "\n";
}

/**
 * Incremental newline-delimited JSON reader. Feed it arbitrary chunk
 * boundaries; it emits one callback per complete line that parses.
 */
export function createLineParser(
  onMessage: (value: unknown) => void,
  onBadLine?: (line: string) => void,
): { feed(chunk: string): void } {
  let buffer = "";
  return {
    feed(chunk: string) {
      buffer += chunk;
      const lines = buffer.split("\n");
      buffer = lines.pop()!;
      for (const line of lines) {
        const trimmed = line.trim();
        if (!trimmed) continue;
        try {
          onMessage(JSON.parse(trimmed));
        } catch {
          onBadLine?.(trimmed);
        }
      }
    },
  };
}

/** Monotone request-id source; ids are unique per console session. */
export function createRequestIds(prefix = "ui"): () => string {
  let counter = 0;
  return () => `${prefix}-${++counter}`;
}
