/** Steering actions: every edit round-trips through the API with
 * If-Generation; a 409 refreshes state and replays nothing (the user
 * retries); undo replays the audit log minus the last mutation onto a
 * fresh server session. */

import { ApiError, FetchLike, SessionClient, StaleGeneration, replayLog } from "./api.js";
import { ViewState } from "./state.js";

export type Notice = { kind: "info" | "error" | "conflict"; text: string };

export class Steering {
  lastNotice: Notice | null = null;

  constructor(
    public client: SessionClient,
    public state: ViewState,
    private fetchImpl: FetchLike,
    private onTreeChanged: () => Promise<void> = async () => {},
  ) {}

  private notify(notice: Notice): void {
    this.lastNotice = notice;
  }

  private async refreshTree(): Promise<void> {
    const doc = await this.client.segments();
    this.state.applySegments(doc.segments, doc.generation);
    await this.onTreeChanged();
  }

  async redetect(resolution: number, seed: number): Promise<boolean> {
    try {
      const tree = await this.client.detect(resolution, seed, this.state.generation);
      this.state.applyTree(tree);
      await this.refreshTree();
      this.notify({ kind: "info", text: `detected ${tree.tree.length - 1} communities` });
      return true;
    } catch (err) {
      return this.handle(err);
    }
  }

  async split(resolution: number, seed = 0): Promise<boolean> {
    const picked = [...this.state.selected];
    if (picked.length !== 1) {
      this.notify({ kind: "error", text: "select exactly one community to split" });
      return false;
    }
    try {
      const res = await this.client.split(picked[0], resolution, seed, this.state.generation);
      if (res.status === "no_split") {
        this.notify({ kind: "info", text: "no finer structure found" });
        return false;
      }
      this.state.applyTree(res.tree!);
      await this.refreshTree();
      this.notify({ kind: "info", text: `split into ${res.tree!.tree.length} nodes` });
      return true;
    } catch (err) {
      return this.handle(err);
    }
  }

  async merge(): Promise<boolean> {
    const picked = [...this.state.selected];
    if (picked.length < 2) {
      this.notify({ kind: "error", text: "select at least two communities to merge" });
      return false;
    }
    try {
      const res = await this.client.merge(picked, this.state.generation);
      this.state.applyTree(res.tree);
      await this.refreshTree();
      this.notify({ kind: "info", text: "merged" });
      return true;
    } catch (err) {
      return this.handle(err);
    }
  }

  /** Replay the audit log without its last mutating entry onto a fresh
   * session, then adopt that session and its tree. */
  async undo(): Promise<boolean> {
    const log = await this.client.auditLog();
    if (log.length === 0) {
      this.notify({ kind: "error", text: "nothing to undo" });
      return false;
    }
    const { client: fresh, tree } = await replayLog(
      this.client.base,
      this.fetchImpl,
      log.slice(0, -1),
    );
    this.client = fresh;
    if (tree) this.state.applyTree(tree);
    else this.state.tree = null;
    const doc = await fresh.segments().catch(() => null);
    if (doc) this.state.applySegments(doc.segments, doc.generation);
    this.notify({ kind: "info", text: "undone" });
    await this.onTreeChanged();
    return true;
  }

  private handle(err: unknown): boolean {
    if (err instanceof StaleGeneration) {
      // Conflict: refresh, replay nothing; the user retries deliberately.
      this.state.generation = err.current;
      this.notify({ kind: "conflict", text: "state changed elsewhere; refreshed, retry" });
      return false;
    }
    if (err instanceof ApiError && err.body?.error === "NotMergeableError") {
      const [a, b] = err.body.parents ?? [];
      this.notify({
        kind: "error",
        text: `not mergeable: parents ${a} and ${b} are on different branches`,
      });
      return false;
    }
    if (err instanceof ApiError) {
      this.notify({ kind: "error", text: `${err.body?.detail ?? err.message}` });
      return false;
    }
    throw err;
  }
}
