/**
 * Typed client for the serve backend. Every control value maps 1:1 into the
 * request JSON (no hidden transforms), and stale responses are dropped by
 * request id so only the newest request paints the panel.
 */

import type { ControlState } from "./state.js";

export interface InfoResponse {
  latent_size: number;
  blocks: number;
  max_res: number;
  nonzero_weights: number;
  total_weights: number;
}

export interface DeltaItem {
  dim: number;
  delta: number;
}

export interface PerturbRequest {
  seed: number;
  scale: number;
  deltas: DeltaItem[];
  w_space: boolean;
  count: number;
  unbounded: boolean;
}

export interface PerturbResponse {
  original: string[];
  modified: string[];
  distances: number[];
}

export interface GenerateRequest {
  seed: number;
  count: number;
  truncation_psi: number;
}

export interface PruneResponse {
  threshold: number;
  nonzero_weights: number;
  total_weights: number;
  mean_d_score: number;
}

export const BATCH_COUNT = 32;

/** The exact /api/perturb body for a control state: {deltas: [{dim, delta}]}. */
export function perturbBody(state: ControlState, count = BATCH_COUNT): PerturbRequest {
  return {
    seed: state.seed,
    scale: state.scale,
    deltas: state.dims.map((dim) => ({ dim, delta: state.deltas[dim] ?? 0 })),
    w_space: state.wSpace,
    count,
    unbounded: state.unbounded,
  };
}

export class ApiError extends Error {
  constructor(public status: number, message: string) {
    super(message);
  }
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  constructor(
    private baseUrl: string = "",
    private fetchFn: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private async post<T>(path: string, body: unknown): Promise<T> {
    const resp = await this.fetchFn(this.baseUrl + path, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(body),
    });
    if (!resp.ok) {
      const detail = await resp.text();
      throw new ApiError(resp.status, `${path} failed (${resp.status}): ${detail}`);
    }
    return (await resp.json()) as T;
  }

  async info(): Promise<InfoResponse> {
    const resp = await this.fetchFn(this.baseUrl + "/api/info");
    if (!resp.ok) throw new ApiError(resp.status, "info failed");
    return (await resp.json()) as InfoResponse;
  }

  generate(req: GenerateRequest): Promise<{ images: string[] }> {
    return this.post("/api/generate", req);
  }

  perturb(req: PerturbRequest): Promise<PerturbResponse> {
    return this.post("/api/perturb", req);
  }

  prune(threshold: number, inPlace = false): Promise<PruneResponse> {
    return this.post("/api/prune", { threshold, in_place: inPlace });
  }
}

/**
 * Keeps one request in flight per panel: a response resolves to null when a
 * newer request has superseded it.
 */
export class LatestOnly {
  private current = 0;

  async run<T>(work: () => Promise<T>): Promise<T | null> {
    const ticket = ++this.current;
    const result = await work();
    return ticket === this.current ? result : null;
  }

  get inFlightTicket(): number {
    return this.current;
  }
}
