/** Documents exchanged with the session service. */

export interface TreeNode {
  id: number;
  parent: number | null;
  label: number;
  children: number[];
  cardinality: number;
  segments?: number[];
}

export interface TreeDoc {
  tree: TreeNode[];
  params: { resolution: number; seed: number };
  generation: number;
}

export interface LayoutNode {
  id: number;
  x: number;
  y: number;
  r: number;
  cardinality: number;
  parent: number;
}

export interface LayoutEdge {
  u: number;
  v: number;
  w: number;
}

export interface LayoutFrame {
  nodes: LayoutNode[];
  edges: LayoutEdge[];
  converged: boolean;
  iteration: number;
  generation?: number;
}

export interface SegmentRecord {
  id: number;
  node: number;
  points: [number, number, number][];
}

export interface SegmentsDoc {
  segments: SegmentRecord[];
  generation: number;
}

export interface AuditEntry {
  op: string;
  params: Record<string, unknown>;
  generation: number;
}

export type Vec3 = [number, number, number];
export type Vec2 = [number, number];
