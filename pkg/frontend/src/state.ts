/**
 * Control-panel state: seed, selected dimensions with quantized delta
 * sliders, global scale, truncation, prune threshold.
 *
 * The whole state round-trips through the URL query string so a session
 * is shareable and reloading reproduces identical images.
 */

export interface ControlState {
  seed: number;
  dims: number[]; // selected dimensions, ascending
  deltas: Record<number, number>; // per selected dim, quantized to 0.1
  scale: number;
  psi: number;
  threshold: number;
  wSpace: boolean;
  unbounded: boolean;
}

export const SCALE_PRESETS = [0.05, 0.1, 0.25, 0.5, 1.0, 1.5, 2.5, 5.0, 10.0];
export const DELTA_MIN = -10.0;
export const DELTA_MAX = 10.0;
export const DELTA_STEP = 0.1;

export function defaultState(): ControlState {
  return {
    seed: 0,
    dims: [],
    deltas: {},
    scale: 1.0,
    psi: 1.0,
    threshold: 0.0,
    wSpace: false,
    unbounded: false,
  };
}

/** Snap a slider value onto the 0.1 grid inside [-10, +10]. */
export function quantizeDelta(value: number, unbounded = false): number {
  const v = unbounded ? value : Math.min(DELTA_MAX, Math.max(DELTA_MIN, value));
  return Math.round(v * 10) / 10;
}

export function selectDim(state: ControlState, dim: number): ControlState {
  if (state.dims.includes(dim)) return state;
  const dims = [...state.dims, dim].sort((a, b) => a - b);
  return { ...state, dims, deltas: { ...state.deltas, [dim]: 0.0 } };
}

/** Deselecting a dimension clears its delta (state invariant). */
export function deselectDim(state: ControlState, dim: number): ControlState {
  const dims = state.dims.filter((d) => d !== dim);
  const deltas: Record<number, number> = {};
  for (const d of dims) deltas[d] = state.deltas[d] ?? 0.0;
  return { ...state, dims, deltas };
}

export function setDelta(state: ControlState, dim: number, value: number): ControlState {
  if (!state.dims.includes(dim)) return state;
  return {
    ...state,
    deltas: { ...state.deltas, [dim]: quantizeDelta(value, state.unbounded) },
  };
}

export function toQuery(state: ControlState): string {
  const q = new URLSearchParams();
  q.set("seed", String(state.seed));
  if (state.dims.length > 0) {
    q.set("dims", state.dims.join(","));
    q.set("deltas", state.dims.map((d) => String(state.deltas[d] ?? 0)).join(","));
  }
  if (state.scale !== 1.0) q.set("scale", String(state.scale));
  if (state.psi !== 1.0) q.set("psi", String(state.psi));
  if (state.threshold !== 0.0) q.set("threshold", String(state.threshold));
  if (state.wSpace) q.set("w", "1");
  if (state.unbounded) q.set("unbounded", "1");
  return q.toString();
}

export function fromQuery(query: string): ControlState {
  const q = new URLSearchParams(query);
  const state = defaultState();
  if (q.has("seed")) state.seed = Number(q.get("seed"));
  if (q.has("dims") && q.get("dims") !== "") {
    state.dims = q
      .get("dims")!
      .split(",")
      .map((t) => Number(t))
      .sort((a, b) => a - b);
    const deltas = (q.get("deltas") ?? "").split(",").map((t) => Number(t));
    state.dims.forEach((d, i) => {
      state.deltas[d] = Number.isFinite(deltas[i]) ? deltas[i] : 0.0;
    });
  }
  if (q.has("scale")) state.scale = Number(q.get("scale"));
  if (q.has("psi")) state.psi = Number(q.get("psi"));
  if (q.has("threshold")) state.threshold = Number(q.get("threshold"));
  state.wSpace = q.get("w") === "1";
  state.unbounded = q.get("unbounded") === "1";
  return state;
}
