/** Typed client for the riskdag HTTP service. Every number shown anywhere in
 * the UI comes out of one of these payloads; the panels never compute
 * probabilities themselves. */

export interface NodePayload {
  id: string;
  name: string;
  kind: string;
  states: string[];
  activation: boolean;
  parents: string[];
  evidence_source: { url: string; mode: string } | null;
  notify_targets: { url: string; threshold: number }[];
}

export interface ModelPayload {
  id: string;
  nodes: NodePayload[];
  edges: { parent: string; child: string }[];
  evidence: Record<string, number>;
  config: { estimator: string; p0: number; k_prior: number; kappa: number; half_life: number | null };
  has_bowtie: boolean;
  ui_positions: Record<string, [number, number]>;
}

export interface CptRowPayload {
  config: number[];
  values: number[] | null;
  status: string;
}

export interface CptPayload {
  node: string;
  states: string[];
  parents: string[];
  cards: number[];
  parent_states: string[][];
  k: number;
  stale: boolean;
  deterministic: boolean;
  rows: CptRowPayload[];
}

export interface EstimateRow {
  question_id: string;
  node: string;
  text: string;
  n: number;
  values: number[];
  estimates: Record<string, number>;
  location: number | null;
  residuals: number[];
  sample_sd: number | null;
  spread: [number, number] | null;
  anchored_interval: [number, number] | null;
  consensus_sd: number | null;
  consensus_interval: [number, number] | null;
}

export interface QuestionPayload {
  id: string;
  node: string;
  node_name: string;
  target_state: string;
  target_state_index: number;
  conditions: { node: string; node_name: string; state: string }[];
  text: string;
}

export interface CapturePage {
  model: string;
  scope: string[];
  expires_at: string;
  questions: QuestionPayload[];
}

export interface PosteriorEntry {
  states: string[];
  probabilities: number[];
}

export type PosteriorPayload = Record<string, PosteriorEntry>;

export interface RankEntryPayload {
  node: string;
  state_index: number;
  state: string;
  result: number;
  delta: number;
}

export interface RankPayload {
  target: string;
  state: number;
  baseline: number;
  entries: RankEntryPayload[];
}

export interface ValidationPayload {
  findings: { code: string; message: string; nodes: string[] }[];
  warnings: { code: string; message: string; nodes: string[] }[];
  runtime_ready: boolean;
}

export class ApiError extends Error {
  constructor(public status: number, public detail: unknown) {
    super(typeof detail === "string" ? detail : JSON.stringify(detail));
  }
}

type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  constructor(private base: string = "", private fetchFn: FetchLike = fetch) {}

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const init: RequestInit = { method, headers: {} };
    if (body !== undefined) {
      init.headers = { "content-type": "application/json" };
      init.body = JSON.stringify(body);
    }
    const response = await this.fetchFn(this.base + path, init);
    const payload = response.status === 204 ? null : await response.json();
    if (!response.ok) {
      throw new ApiError(response.status, (payload as { detail?: unknown })?.detail ?? payload);
    }
    return payload as T;
  }

  listModels() {
    return this.request<{ id: string; nodes: number; edges: number }[]>("GET", "/models");
  }
  getModel(id: string) {
    return this.request<ModelPayload>("GET", `/models/${id}`);
  }
  validate(id: string) {
    return this.request<ValidationPayload>("GET", `/models/${id}/validate`);
  }
  addNode(id: string, body: { name: string; kind?: string; states?: string[] }) {
    return this.request<NodePayload>("POST", `/models/${id}/nodes`, body);
  }
  editNode(id: string, node: string, body: { name?: string; states?: string[]; activation?: boolean }) {
    return this.request<{ node: NodePayload }>("PATCH", `/models/${id}/nodes/${node}`, body);
  }
  deleteNode(id: string, node: string) {
    return this.request<null>("DELETE", `/models/${id}/nodes/${node}`);
  }
  addEdge(id: string, parent: string, child: string) {
    return this.request<{ parent: string; child: string }>("POST", `/models/${id}/edges`, { parent, child });
  }
  deleteEdge(id: string, parent: string, child: string) {
    return this.request<null>(
      "DELETE",
      `/models/${id}/edges?parent=${encodeURIComponent(parent)}&child=${encodeURIComponent(child)}`,
    );
  }
  saveUiPositions(id: string, positions: Record<string, [number, number]>) {
    return this.request<{ count: number }>("PUT", `/models/${id}/ui-positions`, positions);
  }
  getCpt(id: string, node: string) {
    return this.request<CptPayload>("GET", `/models/${id}/cpts/${node}`);
  }
  setCptRow(id: string, node: string, config: number[], probabilities: number[]) {
    return this.request<CptRowPayload>("PUT", `/models/${id}/cpts/${node}/rows`, { config, probabilities });
  }
  estimates(id: string, estimator?: string) {
    const q = estimator ? `?estimator=${encodeURIComponent(estimator)}` : "";
    return this.request<EstimateRow[]>("GET", `/models/${id}/estimates${q}`);
  }
  capturePage(token: string) {
    return this.request<CapturePage>("GET", `/capture/${token}`);
  }
  submitAnswer(token: string, body: { question_id: string; value?: number; quick_set?: string; respondent?: string }) {
    return this.request<{ question_id: string; value: number; n: number }>(
      "POST",
      `/capture/${token}/answers`,
      body,
    );
  }
  setEvidence(id: string, evidence: Record<string, string | number>) {
    return this.request<{ evidence: Record<string, number> }>("PUT", `/models/${id}/evidence`, evidence);
  }
  clearEvidence(id: string) {
    return this.request<{ evidence: Record<string, number> }>("DELETE", `/models/${id}/evidence`);
  }
  posterior(id: string, nodes?: string[]) {
    const q = nodes && nodes.length ? `?nodes=${encodeURIComponent(nodes.join(","))}` : "";
    return this.request<PosteriorPayload>("GET", `/models/${id}/posterior${q}`);
  }
  rank(id: string, target: string, state: string, candidates?: string[]) {
    const params = new URLSearchParams({ target, state });
    if (candidates && candidates.length) params.set("candidates", candidates.join(","));
    return this.request<RankPayload>("GET", `/models/${id}/interventions/rank?${params}`);
  }
  dsep(id: string, x: string, y: string, z: string[]) {
    const params = new URLSearchParams({ x, y, z: z.join(",") });
    return this.request<{ separated: boolean }>("GET", `/models/${id}/causal/dsep?${params}`);
  }
  trails(id: string, x: string, y: string, z: string[]) {
    const params = new URLSearchParams({ x, y, z: z.join(",") });
    return this.request<{ trails: string[][] }>("GET", `/models/${id}/causal/trails?${params}`);
  }
  backdoor(id: string, x: string, y: string, mode: "minimal" | "all") {
    const params = new URLSearchParams({ x, y, mode });
    return this.request<{ mode: string; sets: string[][] }>("GET", `/models/${id}/causal/backdoor?${params}`);
  }
}
