/**
 * Interactive latent steering panel: pick dimensions, drag delta sliders,
 * generate before/after grids, and probe magnitude pruning, all through
 * the JSON API, with the whole control state mirrored into the URL.
 */

import { ApiClient, ApiError, BATCH_COUNT, LatestOnly, perturbBody } from "./api.js";
import type { InfoResponse, PerturbResponse, PruneResponse } from "./api.js";
import { lineChartSvg } from "./chart.js";
import {
  ControlState,
  DELTA_MAX,
  DELTA_MIN,
  DELTA_STEP,
  SCALE_PRESETS,
  deselectDim,
  fromQuery,
  quantizeDelta,
  selectDim,
  setDelta,
  toQuery,
} from "./state.js";

const api = new ApiClient("");
const perturbQueue = new LatestOnly();

let state: ControlState = fromQuery(window.location.search);
let info: InfoResponse | null = null;
let inFlight = false;
const pruneHistory: PruneResponse[] = [];

const $ = (id: string) => document.getElementById(id)!;

function syncUrl() {
  const query = toQuery(state);
  history.replaceState(null, "", query ? `?${query}` : window.location.pathname);
}

function setState(next: ControlState) {
  state = next;
  syncUrl();
  renderControls();
}

function showError(message: string | null) {
  const box = $("error-box");
  box.textContent = message ?? "";
  box.style.display = message ? "block" : "none";
}

function renderRequestPreview() {
  // every value on screen equals the value sent in the next request
  $("request-preview").textContent = JSON.stringify(perturbBody(state), null, 1);
}

function renderControls() {
  ($("seed") as HTMLInputElement).value = String(state.seed);
  ($("psi") as HTMLInputElement).value = String(state.psi);
  $("psi-value").textContent = state.psi.toFixed(2);
  ($("scale-free") as HTMLInputElement).value = String(state.scale);
  ($("w-space") as HTMLInputElement).checked = state.wSpace;
  ($("unbounded") as HTMLInputElement).checked = state.unbounded;
  ($("threshold") as HTMLInputElement).value = String(state.threshold);

  const presets = $("scale-presets");
  presets.innerHTML = "";
  for (const factor of SCALE_PRESETS) {
    const btn = document.createElement("button");
    btn.textContent = String(factor);
    btn.className = state.scale === factor ? "preset active" : "preset";
    btn.onclick = () => setState({ ...state, scale: factor });
    presets.appendChild(btn);
  }

  const dimSelect = $("dims") as HTMLSelectElement;
  if (info && dimSelect.options.length !== info.latent_size) {
    dimSelect.innerHTML = "";
    for (let d = 0; d < info.latent_size; d++) {
      const opt = document.createElement("option");
      opt.value = String(d);
      opt.textContent = `dim ${d}`;
      dimSelect.appendChild(opt);
    }
  }
  for (const opt of Array.from(dimSelect.options)) {
    opt.selected = state.dims.includes(Number(opt.value));
  }

  const sliders = $("sliders");
  sliders.innerHTML = "";
  for (const dim of state.dims) {
    const row = document.createElement("div");
    row.className = "slider-row";
    const label = document.createElement("label");
    label.textContent = `Delta ${dim}`;
    const slider = document.createElement("input");
    slider.type = "range";
    slider.min = String(DELTA_MIN);
    slider.max = String(DELTA_MAX);
    slider.step = String(DELTA_STEP);
    slider.value = String(state.deltas[dim] ?? 0);
    const value = document.createElement("span");
    value.className = "delta-value";
    value.textContent = (state.deltas[dim] ?? 0).toFixed(1);
    slider.oninput = () => {
      setState(setDelta(state, dim, Number(slider.value)));
    };
    const free = document.createElement("input");
    free.type = "number";
    free.step = String(DELTA_STEP);
    free.value = String(state.deltas[dim] ?? 0);
    free.onchange = () => setState(setDelta(state, dim, Number(free.value)));
    row.append(label, slider, value, free);
    sliders.appendChild(row);
  }

  ($("generate") as HTMLButtonElement).disabled = inFlight;
  renderRequestPreview();
}

function imageCell(b64: string, badge: string, badgeClass: string): HTMLElement {
  const cell = document.createElement("div");
  cell.className = "cell";
  const img = document.createElement("img");
  img.src = `data:image/png;base64,${b64}`;
  img.width = 64;
  img.height = 64;
  const tag = document.createElement("span");
  tag.className = `badge ${badgeClass}`;
  tag.textContent = badge;
  cell.append(img, tag);
  return cell;
}

function renderResults(resp: PerturbResponse) {
  if (resp.original.length !== resp.modified.length) {
    showError("render error: original/modified image counts differ");
    return;
  }
  const grid = $("pairs");
  grid.innerHTML = "";
  resp.original.forEach((orig, i) => {
    const pair = document.createElement("div");
    pair.className = "pair";
    const dist = resp.distances[i] ?? 0;
    pair.appendChild(imageCell(orig, "original", "muted"));
    pair.appendChild(
      imageCell(
        resp.modified[i],
        dist === 0 ? "no change" : `L2 ${dist.toFixed(2)}`,
        dist === 0 ? "nochange" : "dist",
      ),
    );
    grid.appendChild(pair);
  });
  $("result-caption").textContent =
    `${resp.original.length} aligned pairs - seed ${state.seed}`;
}

async function generate() {
  if (inFlight) return;
  inFlight = true;
  showError(null);
  renderControls();
  try {
    const resp = await perturbQueue.run(() => api.perturb(perturbBody(state, BATCH_COUNT)));
    if (resp !== null) renderResults(resp);
  } catch (err) {
    showError(err instanceof ApiError ? err.message : String(err));
  } finally {
    inFlight = false;
    renderControls();
  }
}

function renderPruneCharts() {
  const sorted = [...pruneHistory].sort((a, b) => a.threshold - b.threshold);
  $("prune-count-chart").innerHTML = lineChartSvg(
    sorted.map((r) => ({ x: r.threshold, y: r.nonzero_weights })),
    { xLabel: "threshold", yLabel: "nonzero weights" },
  );
  $("prune-score-chart").innerHTML = lineChartSvg(
    sorted.map((r) => ({ x: r.threshold, y: r.mean_d_score })),
    { xLabel: "threshold", yLabel: "mean D score" },
  );
}

async function prune() {
  showError(null);
  try {
    const resp = await api.prune(state.threshold);
    pruneHistory.push(resp);
    $("prune-status").textContent =
      `threshold ${resp.threshold}: ${resp.nonzero_weights.toLocaleString()} / ` +
      `${resp.total_weights.toLocaleString()} weights, mean D score ${resp.mean_d_score.toFixed(4)}`;
    renderPruneCharts();
  } catch (err) {
    showError(err instanceof ApiError ? err.message : String(err));
  }
}

function wire() {
  ($("seed") as HTMLInputElement).onchange = (e) =>
    setState({ ...state, seed: Number((e.target as HTMLInputElement).value) });
  ($("psi") as HTMLInputElement).oninput = (e) =>
    setState({ ...state, psi: Number((e.target as HTMLInputElement).value) });
  ($("scale-free") as HTMLInputElement).onchange = (e) =>
    setState({ ...state, scale: Number((e.target as HTMLInputElement).value) });
  ($("w-space") as HTMLInputElement).onchange = (e) =>
    setState({ ...state, wSpace: (e.target as HTMLInputElement).checked });
  ($("unbounded") as HTMLInputElement).onchange = (e) => {
    const next = { ...state, unbounded: (e.target as HTMLInputElement).checked };
    // re-quantize existing deltas back inside the slider range if needed
    for (const dim of next.dims) {
      next.deltas = { ...next.deltas, [dim]: quantizeDelta(next.deltas[dim] ?? 0, next.unbounded) };
    }
    setState(next);
  };
  ($("threshold") as HTMLInputElement).onchange = (e) =>
    setState({ ...state, threshold: Number((e.target as HTMLInputElement).value) });
  ($("dims") as HTMLSelectElement).onchange = (e) => {
    const selected = Array.from((e.target as HTMLSelectElement).selectedOptions).map((o) =>
      Number(o.value),
    );
    let next = state;
    for (const dim of state.dims.filter((d) => !selected.includes(d))) {
      next = deselectDim(next, dim);
    }
    for (const dim of selected.filter((d) => !next.dims.includes(d))) {
      next = selectDim(next, dim);
    }
    setState(next);
  };
  ($("generate") as HTMLButtonElement).onclick = () => void generate();
  ($("prune") as HTMLButtonElement).onclick = () => void prune();
}

async function start() {
  wire();
  renderControls();
  try {
    info = await api.info();
    $("model-info").textContent =
      `latent ${info.latent_size} - ${info.blocks} blocks - ${info.max_res}x${info.max_res} - ` +
      `${info.nonzero_weights.toLocaleString()} / ${info.total_weights.toLocaleString()} nonzero weights`;
    renderControls();
  } catch (err) {
    showError(`backend unreachable: ${String(err)}`);
  }
}

void start();
