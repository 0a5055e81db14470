import { describe, expect, it } from "vitest";

import { OrbitCamera, distToSegment2D } from "../src/camera.js";
import { colorFor, hashId } from "../src/colors.js";
import { convexHull, inflateHull } from "../src/hull.js";
import { Vec2 } from "../src/types.js";

describe("convex hull", () => {
  it("square with interior points", () => {
    const pts: Vec2[] = [
      [0, 0], [4, 0], [4, 4], [0, 4],
      [2, 2], [1, 3], [3, 1],
    ];
    const hull = convexHull(pts);
    expect(hull.length).toBe(4);
    const set = new Set(hull.map((p) => p.join(",")));
    expect(set).toEqual(new Set(["0,0", "4,0", "4,4", "0,4"]));
  });

  it("collinear points collapse to extremes", () => {
    const hull = convexHull([[0, 0], [1, 1], [2, 2], [3, 3]]);
    expect(hull.length).toBeLessThanOrEqual(2);
  });

  it("inflation pushes points outward from the centroid", () => {
    const hull: Vec2[] = [[0, 0], [2, 0], [2, 2], [0, 2]];
    const inflated = inflateHull(hull, 1);
    for (const [x, y] of inflated) {
      expect(Math.hypot(x - 1, y - 1)).toBeGreaterThan(Math.SQRT2 - 1e-9);
    }
  });
});

describe("orbit camera", () => {
  it("projects the target to the canvas center", () => {
    const cam = new OrbitCamera();
    cam.target = [1, 2, 3];
    const proj = cam.project([1, 2, 3], 800, 600)!;
    expect(proj.xy[0]).toBeCloseTo(400);
    expect(proj.xy[1]).toBeCloseTo(300);
  });

  it("nearer points get smaller depth", () => {
    const cam = new OrbitCamera();
    cam.yaw = 0;
    cam.pitch = 0;
    cam.target = [0, 0, 0];
    cam.distance = 10;
    const near = cam.project([0, 0, -2], 800, 600)!;
    const far = cam.project([0, 0, 2], 800, 600)!;
    expect(near.depth).toBeLessThan(far.depth);
  });

  it("points behind the eye are culled", () => {
    const cam = new OrbitCamera();
    cam.yaw = 0;
    cam.pitch = 0;
    cam.distance = 1;
    expect(cam.project([0, 0, -5], 800, 600)).toBeNull();
  });

  it("fitBounds centers the span", () => {
    const cam = new OrbitCamera();
    cam.fitBounds([0, 0, 0], [2, 2, 2]);
    expect(cam.target).toEqual([1, 1, 1]);
    expect(cam.distance).toBeGreaterThan(2);
  });

  it("distToSegment2D clamps to endpoints", () => {
    expect(distToSegment2D([0, 1], [0, 0], [2, 0])).toBeCloseTo(1);
    expect(distToSegment2D([-3, 4], [0, 0], [2, 0])).toBeCloseTo(5);
    expect(distToSegment2D([5, 4], [0, 0], [2, 0])).toBeCloseTo(5);
  });
});

describe("stable colors", () => {
  it("same id same color, deterministic across calls", () => {
    expect(colorFor(42)).toBe(colorFor(42));
    expect(hashId(7)).toBe(hashId(7));
  });

  it("nearby ids get distinct hues", () => {
    const hues = new Set([1, 2, 3, 4, 5, 6, 7, 8].map((i) => colorFor(i)));
    expect(hues.size).toBeGreaterThanOrEqual(7);
  });
});
