/** Minimal orbit camera: world -> screen projection for the 3D polyline
 * view. Enough for polylines and picking; no external renderer needed. */

import { Vec2, Vec3 } from "./types.js";

export class OrbitCamera {
  yaw = 0.6;
  pitch = 0.4;
  distance = 10;
  target: Vec3 = [0, 0, 0];
  fov = 60; // degrees, vertical

  fitBounds(min: Vec3, max: Vec3): void {
    this.target = [
      (min[0] + max[0]) / 2,
      (min[1] + max[1]) / 2,
      (min[2] + max[2]) / 2,
    ];
    const span = Math.hypot(max[0] - min[0], max[1] - min[1], max[2] - min[2]);
    this.distance = Math.max(span, 1e-6) * 1.2;
  }

  orbit(dyaw: number, dpitch: number): void {
    this.yaw += dyaw;
    const cap = Math.PI / 2 - 0.01;
    this.pitch = Math.min(cap, Math.max(-cap, this.pitch + dpitch));
  }

  zoom(factor: number): void {
    this.distance = Math.min(1e6, Math.max(1e-3, this.distance * factor));
  }

  /** Camera-space coordinates: x right, y up, z depth away from the eye. */
  toCamera(p: Vec3): Vec3 {
    const [tx, ty, tz] = this.target;
    const x = p[0] - tx;
    const y = p[1] - ty;
    const z = p[2] - tz;
    const cy = Math.cos(this.yaw);
    const sy = Math.sin(this.yaw);
    const cp = Math.cos(this.pitch);
    const sp = Math.sin(this.pitch);
    const x1 = cy * x + sy * z;
    const z1 = -sy * x + cy * z;
    const y2 = cp * y - sp * z1;
    const z2 = sp * y + cp * z1;
    return [x1, y2, z2 + this.distance];
  }

  /** Screen position plus depth; null when behind the eye. */
  project(p: Vec3, width: number, height: number): { xy: Vec2; depth: number } | null {
    const [cx, cyy, cz] = this.toCamera(p);
    if (cz <= 1e-6) return null;
    const f = height / (2 * Math.tan(((this.fov / 2) * Math.PI) / 180));
    return {
      xy: [width / 2 + (f * cx) / cz, height / 2 - (f * cyy) / cz],
      depth: cz,
    };
  }
}

export function distToSegment2D(p: Vec2, a: Vec2, b: Vec2): number {
  const vx = b[0] - a[0];
  const vy = b[1] - a[1];
  const len2 = vx * vx + vy * vy;
  let t = len2 > 0 ? ((p[0] - a[0]) * vx + (p[1] - a[1]) * vy) / len2 : 0;
  t = Math.min(1, Math.max(0, t));
  return Math.hypot(p[0] - (a[0] + t * vx), p[1] - (a[1] + t * vy));
}
