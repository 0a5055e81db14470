import { describe, expect, it } from "vitest";

import { ViewState } from "../src/state.js";
import { TreeDoc } from "../src/types.js";

function tree(): TreeDoc {
  return {
    tree: [
      { id: 0, parent: null, label: -1, children: [1, 2], cardinality: 6 },
      { id: 1, parent: 0, label: 0, children: [], cardinality: 4, segments: [0, 1, 2, 3] },
      { id: 2, parent: 0, label: 1, children: [], cardinality: 2, segments: [4, 5] },
    ],
    params: { resolution: 1, seed: 0 },
    generation: 1,
  };
}

function segments() {
  return [0, 1, 2, 3].map((id) => ({ id, node: 1, points: [] as any })).concat(
    [4, 5].map((id) => ({ id, node: 2, points: [] as any })),
  );
}

describe("linked selection", () => {
  it("selected segments are exactly the union of selected communities", () => {
    const st = new ViewState();
    st.applyTree(tree());
    st.applySegments(segments(), 1);
    st.toggleSelect(1, false);
    expect([...st.selectedSegmentIds()].sort()).toEqual([0, 1, 2, 3]);
    st.toggleSelect(2, true);
    expect([...st.selectedSegmentIds()].sort()).toEqual([0, 1, 2, 3, 4, 5]);
  });

  it("clicking a segment maps back to its community", () => {
    const st = new ViewState();
    st.applyTree(tree());
    st.applySegments(segments(), 1);
    expect(st.communityOfSegment(4)).toBe(2);
    st.toggleSelect(st.communityOfSegment(4)!, false);
    expect([...st.selectedSegmentIds()].sort()).toEqual([4, 5]);
  });

  it("empty selection means nothing highlighted (full-color render path)", () => {
    const st = new ViewState();
    st.applyTree(tree());
    expect(st.selectedSegmentIds().size).toBe(0);
  });

  it("internal nodes cover their leaf descendants", () => {
    const st = new ViewState();
    const doc = tree();
    // Make node 1 internal with two children.
    doc.tree[1] = { id: 1, parent: 0, label: 0, children: [3, 4], cardinality: 4 };
    doc.tree.push(
      { id: 3, parent: 1, label: 2, children: [], cardinality: 2, segments: [0, 1] },
      { id: 4, parent: 1, label: 3, children: [], cardinality: 2, segments: [2, 3] },
    );
    st.applyTree(doc);
    st.toggleSelect(1, false);
    expect([...st.selectedSegmentIds()].sort()).toEqual([0, 1, 2, 3]);
  });
});

describe("selection semantics", () => {
  it("plain click selects exactly one; clicking again clears", () => {
    const st = new ViewState();
    st.applyTree(tree());
    st.toggleSelect(1, false);
    st.toggleSelect(2, false);
    expect([...st.selected]).toEqual([2]);
    st.toggleSelect(2, false);
    expect(st.selected.size).toBe(0);
  });

  it("modifier click multi-selects and toggles", () => {
    const st = new ViewState();
    st.applyTree(tree());
    st.toggleSelect(1, true);
    st.toggleSelect(2, true);
    expect(st.selected.size).toBe(2);
    st.toggleSelect(1, true);
    expect([...st.selected]).toEqual([2]);
  });

  it("selection and hulls drop ids that vanished from the tree", () => {
    const st = new ViewState();
    st.applyTree(tree());
    st.toggleSelect(1, true);
    st.toggleSelect(2, true);
    st.pinSelectionAsHull();
    const doc = tree();
    doc.tree = doc.tree.filter((n) => n.id !== 2);
    doc.tree[0].children = [1];
    doc.generation = 2;
    st.applyTree(doc);
    expect([...st.selected]).toEqual([1]);
    expect(st.pinnedHulls).toEqual([[1]]);
    expect(st.generation).toBe(2);
  });
});

describe("color stability", () => {
  it("untouched community colors persist across edits of other nodes", () => {
    const st = new ViewState();
    st.applyTree(tree());
    const before = st.colorOf(1);
    const doc = tree();
    doc.tree = doc.tree.filter((n) => n.id !== 2);
    doc.tree[0].children = [1];
    doc.tree.push({
      id: 7,
      parent: 0,
      label: 4,
      children: [],
      cardinality: 2,
      segments: [4, 5],
    });
    doc.generation = 2;
    st.applyTree(doc);
    expect(st.colorOf(1)).toBe(before);
    expect(st.colorOf(7)).not.toBe(st.colorOf(1));
  });
});
