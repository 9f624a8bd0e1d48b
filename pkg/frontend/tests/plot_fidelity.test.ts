/**
 * End-to-end plot fidelity against real simulator output: generate a
 * state/delta pair of gossip runs through the simulator CLI (paper
 * default timing, 32 clients), chart them, and check that the delta
 * series ends strictly below the state series and that each plotted
 * total equals its run summary exactly.
 */

import { execFileSync } from "child_process";
import * as fs from "fs";
import * as os from "os";
import * as path from "path";

import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { buildChartSeries, run as runCli } from "../src/main";
import { expandGlob, loadRun } from "../src/series";

const out = fs.mkdtempSync(path.join(os.tmpdir(), "fidelity-"));
afterAll(() => fs.rmSync(out, { recursive: true, force: true }));

function simulate(mode: string): void {
  execFileSync(
    "python3",
    [
      "-m", "crdtsim.cli", "run",
      "--clients", "32",
      "--topology", "hyparview",
      "--mode", mode,
      "--impression-interval", "10",
      "--propagation-interval", "5",
      "--duration", "1800",
      "--seed", "1",
      "--overlay-dump",
      "--out", out,
    ],
    { stdio: "pipe" },
  );
}

beforeAll(() => {
  simulate("state");
  simulate("delta");
}, 300_000);

describe("plot fidelity on simulator output", () => {
  it("delta lies strictly below state at the final tick, totals exact", () => {
    const csvs = expandGlob(path.join(out, "*", "metrics.csv"));
    expect(csvs).toHaveLength(2);
    const runs = csvs.map(loadRun); // loadRun enforces csv==summary totals
    for (const run of runs) {
      const final = run.cumulative[run.cumulative.length - 1];
      expect(final).toBe(run.summary.totalInstrumentedBytes);
    }
    const series = buildChartSeries(runs, ["topology", "mode", "clients"]);
    const byLabel = new Map(series.map((s) => [s.label, s.points]));
    const state = byLabel.get("hyparview/state/32")!;
    const delta = byLabel.get("hyparview/delta/32")!;
    expect(state).toBeDefined();
    expect(delta).toBeDefined();
    expect(delta[delta.length - 1]).toBeLessThan(state[state.length - 1]);
  }, 120_000);

  it("the command line writes the chart and overlay snapshot", () => {
    const fig = path.join(out, "fig.svg");
    const code = runCli([
      "--glob", path.join(out, "*", "metrics.csv"),
      "--group", "topology,mode,clients",
      "--out", fig,
      "--overlay-dump", expandGlob(path.join(out, "*", "overlay.csv"))[0],
    ]);
    expect(code).toBe(0);
    expect(fs.existsSync(fig)).toBe(true);
    expect(fs.readFileSync(fig, "utf-8")).toContain("hyparview/delta/32");
    expect(fs.existsSync(path.join(out, "fig-overlay.svg"))).toBe(true);
  }, 120_000);
});
