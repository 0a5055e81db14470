/** Client view state: the server's tree is the single source of truth; the
 * client only tracks which communities are selected, hover, pinned hull
 * sets, and the last generation it has seen. */

import { colorFor } from "./colors.js";
import { SegmentRecord, TreeDoc, TreeNode } from "./types.js";

export class ViewState {
  tree: TreeDoc | null = null;
  segments: SegmentRecord[] = [];
  selected: Set<number> = new Set();
  hover: number | null = null;
  pinnedHulls: number[][] = [];
  resolution = 0.5;
  generation = 0;

  private colors = new Map<number, string>();

  applyTree(doc: TreeDoc): void {
    this.tree = doc;
    this.generation = doc.generation;
    const alive = new Set(doc.tree.map((n) => n.id));
    // Colors are keyed by node id: nodes that survived an edit keep theirs.
    for (const id of [...this.colors.keys()]) {
      if (!alive.has(id)) this.colors.delete(id);
    }
    for (const node of doc.tree) {
      if (!this.colors.has(node.id)) this.colors.set(node.id, colorFor(node.id));
    }
    this.selected = new Set([...this.selected].filter((id) => alive.has(id)));
    this.pinnedHulls = this.pinnedHulls
      .map((hull) => hull.filter((id) => alive.has(id)))
      .filter((hull) => hull.length > 0);
    if (this.hover !== null && !alive.has(this.hover)) this.hover = null;
  }

  applySegments(segments: SegmentRecord[], generation: number): void {
    this.segments = segments;
    this.generation = generation;
  }

  node(id: number): TreeNode | undefined {
    return this.tree?.tree.find((n) => n.id === id);
  }

  leaves(): TreeNode[] {
    return (this.tree?.tree ?? []).filter((n) => n.segments !== undefined);
  }

  colorOf(id: number): string {
    return this.colors.get(id) ?? colorFor(id);
  }

  /** Leaf ids under a node (a leaf is its own cover). */
  leafIdsUnder(id: number): number[] {
    const node = this.node(id);
    if (!node) return [];
    if (node.segments !== undefined) return [id];
    return node.children.flatMap((c) => this.leafIdsUnder(c));
  }

  /** The segment ids selected in the 3D view: exactly the union of the
   * selected communities' members. */
  selectedSegmentIds(): Set<number> {
    const out = new Set<number>();
    for (const id of this.selected) {
      for (const leaf of this.leafIdsUnder(id)) {
        for (const seg of this.node(leaf)?.segments ?? []) out.add(seg);
      }
    }
    return out;
  }

  /** Leaf community of a segment, from the last-received membership. */
  communityOfSegment(segId: number): number | null {
    const rec = this.segments.find((s) => s.id === segId);
    return rec ? rec.node : null;
  }

  toggleSelect(id: number, additive: boolean): void {
    if (!additive) {
      const only = this.selected.size === 1 && this.selected.has(id);
      this.selected.clear();
      if (!only) this.selected.add(id);
      return;
    }
    if (this.selected.has(id)) this.selected.delete(id);
    else this.selected.add(id);
  }

  clearSelection(): void {
    this.selected.clear();
  }

  pinSelectionAsHull(): void {
    if (this.selected.size > 0) this.pinnedHulls.push([...this.selected]);
  }
}
