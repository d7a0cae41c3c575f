/** Minimal dependency-free SVG line chart for the pruning-sweep curves. */

export interface Point {
  x: number;
  y: number;
}

export function lineChartSvg(
  points: Point[],
  opts: { width?: number; height?: number; xLabel?: string; yLabel?: string } = {},
): string {
  const width = opts.width ?? 360;
  const height = opts.height ?? 200;
  const pad = 34;
  if (points.length === 0) {
    return `<svg width="${width}" height="${height}"></svg>`;
  }
  const xs = points.map((p) => p.x);
  const ys = points.map((p) => p.y);
  const xMin = Math.min(...xs);
  const xMax = Math.max(...xs);
  const yMin = Math.min(...ys);
  const yMax = Math.max(...ys);
  const sx = (x: number) =>
    pad + ((x - xMin) / Math.max(xMax - xMin, 1e-12)) * (width - 2 * pad);
  const sy = (y: number) =>
    height - pad - ((y - yMin) / Math.max(yMax - yMin, 1e-12)) * (height - 2 * pad);
  const path = points
    .map((p, i) => `${i === 0 ? "M" : "L"}${sx(p.x).toFixed(1)},${sy(p.y).toFixed(1)}`)
    .join(" ");
  const fmt = (v: number) => (Math.abs(v) >= 1000 ? v.toExponential(1) : String(Math.round(v * 1000) / 1000));
  return [
    `<svg width="${width}" height="${height}" xmlns="http://www.w3.org/2000/svg">`,
    `<rect width="${width}" height="${height}" fill="#fff"/>`,
    `<path d="${path}" fill="none" stroke="#2563eb" stroke-width="1.5"/>`,
    `<line x1="${pad}" y1="${height - pad}" x2="${width - pad}" y2="${height - pad}" stroke="#888"/>`,
    `<line x1="${pad}" y1="${pad}" x2="${pad}" y2="${height - pad}" stroke="#888"/>`,
    `<text x="${width / 2}" y="${height - 6}" font-size="10" text-anchor="middle">${opts.xLabel ?? ""}</text>`,
    `<text x="${pad}" y="${pad - 8}" font-size="10">${opts.yLabel ?? ""}</text>`,
    `<text x="${pad}" y="${height - pad + 12}" font-size="9">${fmt(xMin)}</text>`,
    `<text x="${width - pad}" y="${height - pad + 12}" font-size="9" text-anchor="end">${fmt(xMax)}</text>`,
    `<text x="${pad - 4}" y="${height - pad}" font-size="9" text-anchor="end">${fmt(yMin)}</text>`,
    `<text x="${pad - 4}" y="${pad + 4}" font-size="9" text-anchor="end">${fmt(yMax)}</text>`,
    `</svg>`,
  ].join("");
}
