import { describe, expect, it } from "vitest";

import { formatBytes, renderLineChart } from "../src/svg";
import { renderOverlaySnapshot } from "../src/overlay";

describe("line chart rendering", () => {
  it("draws one path per series with a legend", () => {
    const svg = renderLineChart(
      [
        { label: "hyparview/state/32", points: [0, 100, 250] },
        { label: "hyparview/delta/32", points: [0, 40, 90] },
      ],
      "test chart",
    );
    expect(svg).toContain("<svg");
    expect((svg.match(/<path /g) ?? []).length).toBe(2);
    expect(svg).toContain("hyparview/state/32");
    expect(svg).toContain("hyparview/delta/32");
    expect(svg).toContain("simulated seconds");
  });

  it("rejects an empty series list", () => {
    expect(() => renderLineChart([], "empty")).toThrowError(/no series/);
  });

  it("formats byte magnitudes", () => {
    expect(formatBytes(512)).toBe("512 B");
    expect(formatBytes(2048)).toBe("2.0 KB");
    expect(formatBytes(3_500_000)).toBe("3.5 MB");
    expect(formatBytes(7_200_000_000)).toBe("7.2 GB");
  });
});

describe("overlay snapshot", () => {
  it("renders nodes and deduplicated undirected links", () => {
    const svg = renderOverlaySnapshot([
      { tick: 5, node: "a", activePeers: ["b"] },
      { tick: 5, node: "b", activePeers: ["a", "c"] },
      { tick: 5, node: "c", activePeers: [] },
      { tick: 0, node: "stale", activePeers: ["a"] },
    ]);
    expect(svg).toContain("3 nodes, 2 links");
    expect((svg.match(/<circle /g) ?? []).length).toBe(3);
    expect((svg.match(/<line /g) ?? []).length).toBe(2);
  });

  it("rejects an empty dump", () => {
    expect(() => renderOverlaySnapshot([])).toThrowError(/no samples/);
  });
});
