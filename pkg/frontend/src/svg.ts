/** Hand-rolled SVG line charts; no rasterizer, output is a static image. */

export interface ChartSeries {
  label: string;
  points: number[]; // y value at x = index (simulated seconds)
}

const PALETTE = [
  "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e",
  "#8c564b", "#17becf", "#7f7f7f", "#bcbd22", "#e377c2",
];

const W = 920;
const H = 540;
const MARGIN = { top: 36, right: 24, bottom: 52, left: 86 };

export function formatBytes(value: number): string {
  if (value >= 1e9) return `${(value / 1e9).toFixed(1)} GB`;
  if (value >= 1e6) return `${(value / 1e6).toFixed(1)} MB`;
  if (value >= 1e3) return `${(value / 1e3).toFixed(1)} KB`;
  return `${Math.round(value)} B`;
}

function niceTicks(max: number, count: number): number[] {
  if (max <= 0) return [0];
  const rough = max / count;
  const power = Math.pow(10, Math.floor(Math.log10(rough)));
  const step = [1, 2, 5, 10].map((m) => m * power).find((s) => s >= rough) ?? power * 10;
  const ticks: number[] = [];
  for (let v = 0; v <= max + 1e-9; v += step) ticks.push(v);
  return ticks;
}

function esc(text: string): string {
  return text.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;");
}

export function renderLineChart(
  series: ChartSeries[],
  title: string,
  xLabel = "simulated seconds",
  yLabel = "cumulative transmission (bytes)",
): string {
  if (series.length === 0) {
    throw new Error("cannot render a chart with no series");
  }
  const xMax = Math.max(1, ...series.map((s) => s.points.length - 1));
  const yMax = Math.max(1, ...series.map((s) => Math.max(...s.points, 0)));
  const plotW = W - MARGIN.left - MARGIN.right;
  const plotH = H - MARGIN.top - MARGIN.bottom;
  const sx = (x: number) => MARGIN.left + (x / xMax) * plotW;
  const sy = (y: number) => MARGIN.top + plotH - (y / yMax) * plotH;

  const parts: string[] = [];
  parts.push(
    `<svg xmlns="http://www.w3.org/2000/svg" width="${W}" height="${H}" ` +
      `viewBox="0 0 ${W} ${H}" font-family="sans-serif" font-size="13">`,
  );
  parts.push(`<rect width="${W}" height="${H}" fill="white"/>`);
  parts.push(
    `<text x="${W / 2}" y="20" text-anchor="middle" font-size="16">${esc(title)}</text>`,
  );

  for (const tick of niceTicks(yMax, 6)) {
    const y = sy(tick);
    parts.push(
      `<line x1="${MARGIN.left}" y1="${y}" x2="${W - MARGIN.right}" y2="${y}" ` +
        `stroke="#dddddd"/>`,
      `<text x="${MARGIN.left - 8}" y="${y + 4}" text-anchor="end">${esc(formatBytes(tick))}</text>`,
    );
  }
  for (const tick of niceTicks(xMax, 8)) {
    const x = sx(tick);
    parts.push(
      `<line x1="${x}" y1="${MARGIN.top + plotH}" x2="${x}" y2="${MARGIN.top + plotH + 5}" stroke="#333"/>`,
      `<text x="${x}" y="${MARGIN.top + plotH + 20}" text-anchor="middle">${tick}</text>`,
    );
  }
  parts.push(
    `<line x1="${MARGIN.left}" y1="${MARGIN.top}" x2="${MARGIN.left}" ` +
      `y2="${MARGIN.top + plotH}" stroke="#333"/>`,
    `<line x1="${MARGIN.left}" y1="${MARGIN.top + plotH}" x2="${W - MARGIN.right}" ` +
      `y2="${MARGIN.top + plotH}" stroke="#333"/>`,
    `<text x="${W / 2}" y="${H - 12}" text-anchor="middle">${esc(xLabel)}</text>`,
    `<text x="18" y="${H / 2}" text-anchor="middle" ` +
      `transform="rotate(-90 18 ${H / 2})">${esc(yLabel)}</text>`,
  );

  series.forEach((s, i) => {
    const color = PALETTE[i % PALETTE.length];
    const path = s.points
      .map((y, x) => `${x === 0 ? "M" : "L"}${sx(x).toFixed(1)},${sy(y).toFixed(1)}`)
      .join("");
    parts.push(`<path d="${path}" fill="none" stroke="${color}" stroke-width="1.8"/>`);
    const ly = MARGIN.top + 10 + i * 18;
    parts.push(
      `<line x1="${MARGIN.left + 10}" y1="${ly}" x2="${MARGIN.left + 34}" y2="${ly}" ` +
        `stroke="${color}" stroke-width="3"/>`,
      `<text x="${MARGIN.left + 40}" y="${ly + 4}">${esc(s.label)}</text>`,
    );
  });
  parts.push("</svg>");
  return parts.join("\n");
}
