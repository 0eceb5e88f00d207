/**
 * World <-> screen mapping. The scale is fixed once from the first snapshot
 * so the initial swarm disc fits with a 20% margin; afterwards only the
 * center follows the swarm centroid, so a moving swarm (follow_leader)
 * stays in frame without the zoom breathing.
 */
import type { Snapshot } from "./protocol.js";

export const FIT_MARGIN = 0.2;

export interface Point {
  x: number;
  y: number;
}

export function centroid(points: readonly Point[]): Point {
  let sx = 0;
  let sy = 0;
  for (const p of points) {
    sx += p.x;
    sy += p.y;
  }
  const n = Math.max(points.length, 1);
  return { x: sx / n, y: sy / n };
}

export class ViewTransform {
  private scale = 1; // pixels per world unit
  private center: Point = { x: 0, y: 0 };
  private fitted = false;

  constructor(
    public width: number,
    public height: number,
  ) {}

  get pixelsPerUnit(): number {
    return this.scale;
  }

  get isFitted(): boolean {
    return this.fitted;
  }

  /** Fix the zoom so every agent of this snapshot fits with the margin. */
  fitInitial(snapshot: Snapshot): void {
    const c = centroid(snapshot.agents);
    let radius = 0;
    for (const a of snapshot.agents) {
      radius = Math.max(radius, Math.hypot(a.x - c.x, a.y - c.y));
    }
    if (radius === 0) radius = 1;
    const halfExtent = Math.min(this.width, this.height) / 2;
    this.scale = halfExtent / (radius * (1 + FIT_MARGIN));
    this.center = c;
    this.fitted = true;
  }

  /** Track the swarm centroid; scale stays fixed. */
  follow(snapshot: Snapshot): void {
    if (!this.fitted) {
      this.fitInitial(snapshot);
      return;
    }
    this.center = centroid(snapshot.agents);
  }

  /** World y grows upward, screen y grows downward. */
  worldToScreen(world: Point): Point {
    return {
      x: this.width / 2 + (world.x - this.center.x) * this.scale,
      y: this.height / 2 - (world.y - this.center.y) * this.scale,
    };
  }

  screenToWorld(screen: Point): Point {
    return {
      x: this.center.x + (screen.x - this.width / 2) / this.scale,
      y: this.center.y - (screen.y - this.height / 2) / this.scale,
    };
  }
}
