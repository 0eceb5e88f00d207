import { describe, expect, it } from "vitest";
import type { Snapshot } from "../src/protocol.js";
import { centroid, FIT_MARGIN, ViewTransform } from "../src/transform.js";

function snapshotAt(points: [number, number][], seq = 1): Snapshot {
  return {
    v: 1, type: "snapshot", seq, timestep: 0, paused: false,
    active_binding: null, metrics: {}, stimulus: null,
    agents: points.map(([x, y], id) => ({
      id, x, y, state: "inactive" as const,
      candidate: false, leader: false, periphery: false, estimate: null,
    })),
  };
}

describe("fitInitial", () => {
  it("fits the swarm disc with a 20% margin", () => {
    const t = new ViewTransform(800, 600);
    // radius-2 disc around (10, -5)
    t.fitInitial(snapshotAt([[12, -5], [8, -5], [10, -3], [10, -7]]));
    const halfExtent = 300; // min(800, 600) / 2
    expect(t.pixelsPerUnit).toBeCloseTo(halfExtent / (2 * (1 + FIT_MARGIN)));
    // the extreme agent lands exactly at the margin boundary
    const p = t.worldToScreen({ x: 12, y: -5 });
    expect(p.x).toBeCloseTo(400 + halfExtent / (1 + FIT_MARGIN));
    expect(p.y).toBeCloseTo(300);
  });

  it("centers the view on the swarm centroid", () => {
    const t = new ViewTransform(640, 640);
    const snap = snapshotAt([[3, 3], [5, 7]]);
    t.fitInitial(snap);
    const c = centroid(snap.agents);
    const p = t.worldToScreen(c);
    expect(p.x).toBeCloseTo(320);
    expect(p.y).toBeCloseTo(320);
  });
});

describe("follow", () => {
  it("tracks the centroid without changing scale", () => {
    const t = new ViewTransform(800, 600);
    t.fitInitial(snapshotAt([[1, 0], [-1, 0]]));
    const scale = t.pixelsPerUnit;
    t.follow(snapshotAt([[10, 4], [12, 4]], 2));
    expect(t.pixelsPerUnit).toBe(scale);
    const p = t.worldToScreen({ x: 11, y: 4 });
    expect(p.x).toBeCloseTo(400);
    expect(p.y).toBeCloseTo(300);
  });
});

describe("round trip", () => {
  it("screen -> world -> screen stays within one pixel", () => {
    const t = new ViewTransform(900, 640);
    t.fitInitial(snapshotAt([[0, 0], [2.5, 1.5], [-3, 0.5]]));
    // deterministic pseudo-grid over the full canvas
    for (let ix = 0; ix <= 10; ix++) {
      for (let iy = 0; iy <= 10; iy++) {
        const screen = { x: (ix / 10) * 900 + 0.37, y: (iy / 10) * 640 + 0.61 };
        const back = t.worldToScreen(t.screenToWorld(screen));
        expect(Math.hypot(back.x - screen.x, back.y - screen.y))
          .toBeLessThan(1.0);
      }
    }
  });

  it("world -> screen -> world inverts exactly up to float noise", () => {
    const t = new ViewTransform(800, 600);
    t.fitInitial(snapshotAtRing());
    const w = { x: -1.234, y: 5.678 };
    const back = t.screenToWorld(t.worldToScreen(w));
    expect(back.x).toBeCloseTo(w.x, 10);
    expect(back.y).toBeCloseTo(w.y, 10);
  });
});

function snapshotAtRing(): Snapshot {
  const pts: [number, number][] = [];
  for (let k = 0; k < 8; k++) {
    pts.push([Math.cos((k * Math.PI) / 4) * 3, Math.sin((k * Math.PI) / 4) * 3]);
  }
  return snapshotAt(pts);
}
