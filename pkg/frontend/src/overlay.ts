/** Static node-link snapshot of the overlay's final sampled tick. */

import { OverlaySample } from "./csv";

export function renderOverlaySnapshot(samples: OverlaySample[]): string {
  if (samples.length === 0) {
    throw new Error("overlay dump holds no samples");
  }
  const lastTick = Math.max(...samples.map((s) => s.tick));
  const atLast = samples.filter((s) => s.tick === lastTick);
  const nodes = [...new Set(atLast.map((s) => s.node))].sort();
  const edges = new Set<string>();
  for (const sample of atLast) {
    for (const peer of sample.activePeers) {
      const pair = [sample.node, peer].sort();
      edges.add(`${pair[0]}|${pair[1]}`);
    }
  }

  const size = 640;
  const cx = size / 2;
  const cy = size / 2;
  const radius = size / 2 - 60;
  const position = new Map<string, [number, number]>();
  nodes.forEach((node, i) => {
    const angle = (2 * Math.PI * i) / nodes.length - Math.PI / 2;
    position.set(node, [cx + radius * Math.cos(angle), cy + radius * Math.sin(angle)]);
  });

  const parts: string[] = [];
  parts.push(
    `<svg xmlns="http://www.w3.org/2000/svg" width="${size}" height="${size}" ` +
      `viewBox="0 0 ${size} ${size}" font-family="sans-serif" font-size="10">`,
  );
  parts.push(`<rect width="${size}" height="${size}" fill="white"/>`);
  parts.push(
    `<text x="${cx}" y="22" text-anchor="middle" font-size="14">` +
      `overlay at tick ${lastTick}: ${nodes.length} nodes, ${edges.size} links</text>`,
  );
  for (const edge of [...edges].sort()) {
    const [a, b] = edge.split("|");
    const pa = position.get(a);
    const pb = position.get(b);
    if (!pa || !pb) continue;
    parts.push(
      `<line x1="${pa[0].toFixed(1)}" y1="${pa[1].toFixed(1)}" ` +
        `x2="${pb[0].toFixed(1)}" y2="${pb[1].toFixed(1)}" stroke="#99b" stroke-width="0.7"/>`,
    );
  }
  for (const node of nodes) {
    const [x, y] = position.get(node)!;
    parts.push(`<circle cx="${x.toFixed(1)}" cy="${y.toFixed(1)}" r="4" fill="#1f77b4"/>`);
    if (nodes.length <= 64) {
      parts.push(`<text x="${(x + 6).toFixed(1)}" y="${(y + 3).toFixed(1)}">${node}</text>`);
    }
  }
  parts.push("</svg>");
  return parts.join("\n");
}
