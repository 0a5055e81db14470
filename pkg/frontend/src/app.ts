/** Explorer wiring: two linked panels (3D segments, community graph), a
 * toolbar for the steering loop, and a status line for errors. */

import { SessionClient } from "./api.js";
import { GraphView } from "./graphview.js";
import { Scene3D } from "./scene3d.js";
import { ViewState } from "./state.js";
import { Steering } from "./steering.js";
import { LayoutStream } from "./ws.js";

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing #${id}`);
  return node as T;
}

async function boot(): Promise<void> {
  const base = "";
  const fetchImpl = (url: string, init?: RequestInit) =>
    fetch(url, init as RequestInit);
  const state = new ViewState();
  const client = await SessionClient.create(base, fetchImpl as any);
  const scene = new Scene3D(el<HTMLCanvasElement>("view3d"), state);
  const graph = new GraphView(el<HTMLCanvasElement>("viewGraph"), state);
  const status = el<HTMLDivElement>("status");

  const steering = new Steering(client, state, fetchImpl as any, async () => {
    await refreshAll(steering.client);
  });

  function showNotice(): void {
    const n = steering.lastNotice;
    if (!n) return;
    status.textContent = n.text;
    status.className = `status ${n.kind}`;
  }

  async function refreshAll(cl: SessionClient): Promise<void> {
    const segs = await cl.segments().catch(() => null);
    if (segs) state.applySegments(segs.segments, segs.generation);
    const frame = await cl.layout().catch(() => null);
    if (frame) graph.applyFrame(frame);
    render();
    startStream(cl);
  }

  let stream: LayoutStream | null = null;
  function startStream(cl: SessionClient): void {
    stream?.stop();
    stream = new LayoutStream(
      cl.layoutStreamUrl(),
      (url) => new WebSocket(url) as any,
      (frame) => {
        graph.applyFrame(frame);
        render();
      },
      () => render(),
    );
    stream.start();
  }

  function render(): void {
    scene.render();
    graph.render();
    const counts = `${state.leaves().length} communities, ${state.segments.length} segments`;
    el<HTMLSpanElement>("counts").textContent = counts;
  }

  // Demo pipeline on the abc field so the explorer works out of the box.
  el<HTMLButtonElement>("btnDemo").onclick = async () => {
    status.textContent = "tracing...";
    await client.traceDataset(
      { kind: "abc" },
      { seeding: "uniform_grid", grid: [4, 4, 4], step_size: 0.05, max_steps: 120 },
    );
    await client.decompose(8);
    status.textContent = "building graph...";
    await client.buildGraph({ method: "knn", k: 10, metric: "longest" });
    status.textContent = "detecting communities...";
    const tree = await client.detect(Number(el<HTMLInputElement>("resolution").value), 0);
    state.applyTree(tree);
    await refreshAll(client);
    status.textContent = "ready";
  };

  el<HTMLButtonElement>("btnDetect").onclick = async () => {
    await steering.redetect(Number(el<HTMLInputElement>("resolution").value), 0);
    showNotice();
    render();
  };

  el<HTMLButtonElement>("btnSplit").onclick = async () => {
    await steering.split(Number(el<HTMLInputElement>("splitResolution").value), 0);
    showNotice();
    render();
  };

  el<HTMLButtonElement>("btnMerge").onclick = async () => {
    await steering.merge();
    showNotice();
    render();
  };

  el<HTMLButtonElement>("btnUndo").onclick = async () => {
    await steering.undo();
    showNotice();
    render();
  };

  el<HTMLButtonElement>("btnPinHull").onclick = () => {
    state.pinSelectionAsHull();
    render();
  };

  const canvas3d = el<HTMLCanvasElement>("view3d");
  let dragging = false;
  let last: [number, number] = [0, 0];
  let moved = false;
  canvas3d.addEventListener("mousedown", (ev) => {
    dragging = true;
    moved = false;
    last = [ev.offsetX, ev.offsetY];
  });
  canvas3d.addEventListener("mousemove", (ev) => {
    if (!dragging) return;
    const dx = ev.offsetX - last[0];
    const dy = ev.offsetY - last[1];
    if (Math.abs(dx) + Math.abs(dy) > 2) moved = true;
    scene.camera.orbit(dx * 0.008, dy * 0.008);
    last = [ev.offsetX, ev.offsetY];
    render();
  });
  canvas3d.addEventListener("mouseup", (ev) => {
    dragging = false;
    if (!moved) {
      scene.handleClick(ev.offsetX, ev.offsetY, ev.shiftKey);
      render();
    }
  });
  canvas3d.addEventListener("wheel", (ev) => {
    scene.camera.zoom(ev.deltaY > 0 ? 1.1 : 0.9);
    render();
    ev.preventDefault();
  });

  el<HTMLCanvasElement>("viewGraph").addEventListener("mouseup", (ev) => {
    graph.handleClick(ev.offsetX, ev.offsetY, ev.shiftKey);
    render();
  });

  status.textContent = "ready: run the demo pipeline or drive the API";
}

boot().catch((err) => {
  const status = document.getElementById("status");
  if (status) status.textContent = `boot failed: ${err}`;
});
