/** Thin typed client for the session service. Every mutation sends
 * If-Generation; a 409 reply surfaces as StaleGeneration so the caller can
 * refresh and let the user retry. Transport is injectable for tests. */

import { AuditEntry, LayoutFrame, SegmentsDoc, TreeDoc } from "./types.js";

export type FetchLike = (
  url: string,
  init?: { method?: string; headers?: Record<string, string>; body?: string },
) => Promise<{ status: number; json(): Promise<any> }>;

export class StaleGeneration extends Error {
  constructor(public current: number) {
    super(`stale generation; server is at ${current}`);
  }
}

export class ApiError extends Error {
  constructor(
    public status: number,
    public body: any,
  ) {
    super(`api error ${status}: ${JSON.stringify(body)}`);
  }
}

export class SessionClient {
  constructor(
    public base: string,
    public sessionId: string,
    private fetchImpl: FetchLike,
  ) {}

  static async create(base: string, fetchImpl: FetchLike): Promise<SessionClient> {
    const res = await fetchImpl(`${base}/sessions`, { method: "POST" });
    const body = await res.json();
    return new SessionClient(base, body.session, fetchImpl);
  }

  private async request(
    method: string,
    path: string,
    body?: unknown,
    ifGeneration?: number,
  ): Promise<any> {
    const headers: Record<string, string> = { "Content-Type": "application/json" };
    if (ifGeneration !== undefined) headers["If-Generation"] = String(ifGeneration);
    const res = await this.fetchImpl(`${this.base}/sessions/${this.sessionId}${path}`, {
      method,
      headers,
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    const parsed = await res.json();
    if (res.status === 409 && parsed.parents === undefined) {
      throw new StaleGeneration(await this.generation());
    }
    if (res.status >= 400) throw new ApiError(res.status, parsed);
    return parsed;
  }

  async generation(): Promise<number> {
    const info = await this.request("GET", "");
    return info.generation;
  }

  async setDatasetLines(lines: unknown, ifGen?: number): Promise<any> {
    return this.request("POST", "/dataset", { lines }, ifGen);
  }

  async traceDataset(field: unknown, cfg: unknown, ifGen?: number): Promise<any> {
    return this.request("POST", "/dataset", { trace: { field, cfg } }, ifGen);
  }

  async decompose(L: number, ifGen?: number): Promise<any> {
    return this.request("POST", "/decompose", { L }, ifGen);
  }

  async buildGraph(params: Record<string, unknown>, ifGen?: number): Promise<any> {
    return this.request("POST", "/graph", params, ifGen);
  }

  async detect(resolution: number, seed: number, ifGen?: number): Promise<TreeDoc> {
    const res = await this.request("POST", "/communities", { resolution, seed }, ifGen);
    return res.tree;
  }

  async split(
    nodeId: number,
    resolution: number,
    seed: number,
    ifGen?: number,
  ): Promise<{ status: string; tree?: TreeDoc }> {
    return this.request(
      "POST",
      `/communities/${nodeId}/split`,
      { resolution, seed },
      ifGen,
    );
  }

  async merge(nodeIds: number[], ifGen?: number): Promise<{ tree: TreeDoc }> {
    return this.request("POST", "/communities/merge", { node_ids: nodeIds }, ifGen);
  }

  async segments(nodeIds?: number[]): Promise<SegmentsDoc> {
    const query = nodeIds && nodeIds.length ? `?nodes=${nodeIds.join(",")}` : "";
    return this.request("GET", `/segments${query}`);
  }

  async layout(): Promise<LayoutFrame> {
    return this.request("GET", "/layout");
  }

  async auditLog(): Promise<AuditEntry[]> {
    const res = await this.request("GET", "/log");
    return res.log;
  }

  layoutStreamUrl(): string {
    const ws = this.base.replace(/^http/, "ws");
    return `${ws}/sessions/${this.sessionId}/layout/stream`;
  }
}

/** Re-apply an audit log (optionally truncated) to a fresh session: the undo
 * mechanism: state n-1 is "replay everything but the last mutation". The
 * last tree document seen during replay is returned so the caller can adopt
 * it (there is no standalone tree GET; trees ride on mutation responses). */
export async function replayLog(
  base: string,
  fetchImpl: FetchLike,
  log: AuditEntry[],
): Promise<{ client: SessionClient; tree: TreeDoc | null }> {
  const fresh = await SessionClient.create(base, fetchImpl);
  let tree: TreeDoc | null = null;
  for (const entry of log) {
    const p = entry.params as any;
    switch (entry.op) {
      case "dataset":
        if (p.trace) await fresh.traceDataset(p.trace.field, p.trace.cfg);
        else await fresh.setDatasetLines(p.lines);
        break;
      case "decompose":
        await fresh.decompose(p.L);
        break;
      case "graph":
        await fresh.buildGraph(p);
        break;
      case "communities":
        tree = await fresh.detect(p.resolution, p.seed);
        break;
      case "split": {
        const res = await fresh.split(p.node, p.resolution, p.seed);
        if (res.tree) tree = res.tree;
        break;
      }
      case "merge":
        tree = (await fresh.merge(p.node_ids)).tree;
        break;
      default:
        throw new Error(`unknown audit op ${entry.op}`);
    }
  }
  return { client: fresh, tree };
}
