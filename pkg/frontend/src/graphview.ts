/** Force-directed graph view: community circles sized by the layout radii,
 * quadratic arcs for edges (sagitta 10% of chord), dashed convex envelopes
 * around pinned groups, frame animation until the converged frame. */

import { convexHull, inflateHull } from "./hull.js";
import { ViewState } from "./state.js";
import { LayoutFrame, Vec2 } from "./types.js";
import { Canvas2D } from "./scene3d.js";

export class GraphView {
  frame: LayoutFrame | null = null;
  animating = false;
  private scale = 1;
  private offset: Vec2 = [0, 0];

  constructor(
    private canvas: Canvas2D,
    private state: ViewState,
  ) {}

  applyFrame(frame: LayoutFrame): void {
    this.frame = frame;
    this.animating = !frame.converged;
    this.fit();
  }

  private fit(): void {
    if (!this.frame || this.frame.nodes.length === 0) return;
    const xs = this.frame.nodes.map((n) => n.x);
    const ys = this.frame.nodes.map((n) => n.y);
    const rmax = Math.max(...this.frame.nodes.map((n) => n.r));
    const minX = Math.min(...xs) - rmax;
    const maxX = Math.max(...xs) + rmax;
    const minY = Math.min(...ys) - rmax;
    const maxY = Math.max(...ys) + rmax;
    const { width, height } = this.canvas;
    const spanX = Math.max(maxX - minX, 1e-6);
    const spanY = Math.max(maxY - minY, 1e-6);
    this.scale = 0.9 * Math.min(width / spanX, height / spanY);
    this.offset = [
      width / 2 - this.scale * ((minX + maxX) / 2),
      height / 2 - this.scale * ((minY + maxY) / 2),
    ];
  }

  toScreen(x: number, y: number): Vec2 {
    return [this.offset[0] + this.scale * x, this.offset[1] + this.scale * y];
  }

  render(): void {
    const ctx = this.canvas.getContext("2d");
    if (!ctx || !this.frame) return;
    const { width, height } = this.canvas;
    ctx.clearRect(0, 0, width, height);
    const pos = new Map(this.frame.nodes.map((n) => [n.id, this.toScreen(n.x, n.y)]));

    // Edges as quadratic arcs bulging 10% of the chord length.
    ctx.strokeStyle = "rgba(120,120,120,0.45)";
    const wmax = Math.max(...this.frame.edges.map((e) => e.w), 1e-12);
    for (const e of this.frame.edges) {
      const a = pos.get(e.u);
      const b = pos.get(e.v);
      if (!a || !b) continue;
      const [mx, my] = [(a[0] + b[0]) / 2, (a[1] + b[1]) / 2];
      const [dx, dy] = [b[0] - a[0], b[1] - a[1]];
      const chord = Math.hypot(dx, dy) || 1;
      const sagitta = 0.1 * chord;
      const cx = mx - (dy / chord) * sagitta;
      const cy = my + (dx / chord) * sagitta;
      ctx.lineWidth = 0.5 + 2.5 * (e.w / wmax);
      ctx.beginPath();
      ctx.moveTo(a[0], a[1]);
      ctx.quadraticCurveTo(cx, cy, b[0], b[1]);
      ctx.stroke();
    }

    // Nodes: spheres sized by the layout's radius (cardinality-driven).
    for (const n of this.frame.nodes) {
      const p = pos.get(n.id)!;
      const r = Math.max(2, n.r * this.scale);
      ctx.beginPath();
      ctx.arc(p[0], p[1], r, 0, 2 * Math.PI);
      ctx.fillStyle = this.state.colorOf(n.id);
      ctx.globalAlpha = this.state.selected.size === 0 || this.state.selected.has(n.id) ? 1 : 0.25;
      ctx.fill();
      ctx.globalAlpha = 1;
      if (this.state.selected.has(n.id)) {
        ctx.lineWidth = 3;
        ctx.strokeStyle = "#222";
        ctx.stroke();
      }
    }

    // Dashed convex envelopes around pinned groups.
    ctx.setLineDash([6, 4]);
    ctx.lineWidth = 1.5;
    ctx.strokeStyle = "#444";
    for (const group of this.state.pinnedHulls) {
      const pts: Vec2[] = [];
      for (const id of group) {
        const n = this.frame.nodes.find((nd) => nd.id === id);
        if (n) {
          const c = pos.get(n.id)!;
          const r = n.r * this.scale;
          pts.push([c[0] - r, c[1] - r], [c[0] + r, c[1] - r], [c[0] - r, c[1] + r], [c[0] + r, c[1] + r]);
        }
      }
      const hull = inflateHull(convexHull(pts), 6);
      if (hull.length >= 3) {
        ctx.beginPath();
        ctx.moveTo(hull[0][0], hull[0][1]);
        for (const p of hull.slice(1)) ctx.lineTo(p[0], p[1]);
        ctx.closePath();
        ctx.stroke();
      }
    }
    ctx.setLineDash([]);
  }

  /** Node under a click, if any. */
  pick(x: number, y: number): number | null {
    if (!this.frame) return null;
    for (const n of [...this.frame.nodes].reverse()) {
      const p = this.toScreen(n.x, n.y);
      const r = Math.max(2, n.r * this.scale);
      if (Math.hypot(x - p[0], y - p[1]) <= r) return n.id;
    }
    return null;
  }

  handleClick(x: number, y: number, additive: boolean): number | null {
    const id = this.pick(x, y);
    if (id !== null) this.state.toggleSelect(id, additive);
    return id;
  }
}
