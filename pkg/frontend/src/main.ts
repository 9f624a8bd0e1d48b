#!/usr/bin/env node
/**
 * metrics-plot: cumulative-transmission charts from simulator metrics.
 *
 * Usage:
 *   metrics-plot --glob 'results/*\/metrics.csv' --group topology,mode,clients --out fig.svg
 *   metrics-plot --overlay-dump results/<id>/overlay.csv --out overlay.svg
 *
 * Output is always SVG (a static image; no rasterizer dependency).
 */

import * as fs from "fs";
import * as path from "path";

import { parseOverlayCsv } from "./csv";
import { averageAcross } from "./aggregate";
import { renderOverlaySnapshot } from "./overlay";
import { RunData, expandGlob, groupRuns, loadRun } from "./series";
import { ChartSeries, renderLineChart } from "./svg";

interface Args {
  glob?: string;
  group: string[];
  out: string;
  overlayDump?: string;
}

export function parseArgs(argv: string[]): Args {
  const args: Args = { group: ["topology", "mode", "clients"], out: "fig.svg" };
  for (let i = 0; i < argv.length; i++) {
    const flag = argv[i];
    const value = () => {
      const v = argv[++i];
      if (v === undefined) throw new Error(`flag ${flag} needs a value`);
      return v;
    };
    if (flag === "--glob") args.glob = value();
    else if (flag === "--group") args.group = value().split(",");
    else if (flag === "--out") args.out = value();
    else if (flag === "--overlay-dump") args.overlayDump = value();
    else throw new Error(`unknown flag ${flag}`);
  }
  if (!args.glob && !args.overlayDump) {
    throw new Error("nothing to do: pass --glob and/or --overlay-dump");
  }
  return args;
}

export function buildChartSeries(runs: RunData[], group: string[]): ChartSeries[] {
  const groups = groupRuns(runs, group);
  const series: ChartSeries[] = [];
  for (const label of [...groups.keys()].sort()) {
    const members = groups.get(label)!;
    series.push({ label, points: averageAcross(members.map((r) => r.cumulative)) });
  }
  return series;
}

function overlayOutPath(out: string, chartAlsoWritten: boolean): string {
  if (!chartAlsoWritten) return out;
  const ext = path.extname(out);
  return out.slice(0, out.length - ext.length) + "-overlay" + (ext || ".svg");
}

export function run(argv: string[]): number {
  const args = parseArgs(argv);
  let wroteChart = false;
  if (args.glob) {
    const csvPaths = expandGlob(args.glob).filter((p) => fs.existsSync(p) && fs.statSync(p).isFile());
    if (csvPaths.length === 0) {
      throw new Error(`glob ${args.glob} matches no files`);
    }
    const runs = csvPaths.map(loadRun);
    const series = buildChartSeries(runs, args.group);
    const svg = renderLineChart(series, `cumulative instrumented transmission by ${args.group.join("/")}`);
    fs.writeFileSync(args.out, svg);
    wroteChart = true;
    console.log(`wrote ${args.out} (${series.length} series, ${runs.length} runs)`);
    for (const s of series) {
      const final = s.points.length ? s.points[s.points.length - 1] : 0;
      console.log(`  ${s.label}: final cumulative ${final.toFixed(0)} bytes`);
    }
  }
  if (args.overlayDump) {
    const samples = parseOverlayCsv(
      fs.readFileSync(args.overlayDump, "utf-8"),
      args.overlayDump,
    );
    const target = overlayOutPath(args.out, wroteChart);
    fs.writeFileSync(target, renderOverlaySnapshot(samples));
    console.log(`wrote ${target}`);
  }
  return 0;
}

if (require.main === module) {
  try {
    process.exit(run(process.argv.slice(2)));
  } catch (err) {
    console.error(String(err instanceof Error ? err.message : err));
    process.exit(2);
  }
}
