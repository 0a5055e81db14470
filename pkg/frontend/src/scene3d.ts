/** 3D segment view: polylines colored by leaf community, selection
 * highlighting, click picking. Renders straight to a 2D canvas through the
 * orbit camera (tube impostors intentionally omitted at this scale). */

import { OrbitCamera, distToSegment2D } from "./camera.js";
import { dimmed } from "./colors.js";
import { ViewState } from "./state.js";
import { Vec2, Vec3 } from "./types.js";

export interface Canvas2D {
  width: number;
  height: number;
  getContext(kind: "2d"): CanvasRenderingContext2D | null;
}

export class Scene3D {
  camera = new OrbitCamera();
  private fitted = false;

  constructor(
    private canvas: Canvas2D,
    private state: ViewState,
  ) {}

  fitOnce(): void {
    if (this.fitted || this.state.segments.length === 0) return;
    const min: Vec3 = [Infinity, Infinity, Infinity];
    const max: Vec3 = [-Infinity, -Infinity, -Infinity];
    for (const seg of this.state.segments) {
      for (const p of seg.points) {
        for (let d = 0; d < 3; d++) {
          min[d] = Math.min(min[d], p[d]);
          max[d] = Math.max(max[d], p[d]);
        }
      }
    }
    this.camera.fitBounds(min, max);
    this.fitted = true;
  }

  render(): void {
    const ctx = this.canvas.getContext("2d");
    if (!ctx) return;
    this.fitOnce();
    const { width, height } = this.canvas;
    ctx.clearRect(0, 0, width, height);
    ctx.lineWidth = 1.5;
    const selected = this.state.selectedSegmentIds();
    const anySelection = this.state.selected.size > 0;
    for (const seg of this.state.segments) {
      const base = this.state.colorOf(seg.node);
      const isSelected = selected.has(seg.id);
      ctx.strokeStyle = anySelection && !isSelected ? dimmed(base) : base;
      ctx.lineWidth = isSelected ? 2.5 : 1.5;
      ctx.beginPath();
      let started = false;
      for (const p of seg.points) {
        const proj = this.camera.project(p, width, height);
        if (!proj) {
          started = false;
          continue;
        }
        if (!started) {
          ctx.moveTo(proj.xy[0], proj.xy[1]);
          started = true;
        } else {
          ctx.lineTo(proj.xy[0], proj.xy[1]);
        }
      }
      ctx.stroke();
    }
  }

  /** Segment id whose projection passes nearest the click, within reach. */
  pick(x: number, y: number, reach = 6): number | null {
    const { width, height } = this.canvas;
    let best: { id: number; d: number } | null = null;
    for (const seg of this.state.segments) {
      let prev: Vec2 | null = null;
      for (const p of seg.points) {
        const proj = this.camera.project(p, width, height);
        if (!proj) {
          prev = null;
          continue;
        }
        if (prev) {
          const d = distToSegment2D([x, y], prev, proj.xy);
          if (d <= reach && (!best || d < best.d)) best = { id: seg.id, d };
        }
        prev = proj.xy;
      }
    }
    return best?.id ?? null;
  }

  /** Click -> community selection via the segment's membership. */
  handleClick(x: number, y: number, additive: boolean): number | null {
    const segId = this.pick(x, y);
    if (segId === null) return null;
    const community = this.state.communityOfSegment(segId);
    if (community === null) return null;
    this.state.toggleSelect(community, additive);
    return community;
  }
}
