/** Run loading, glob expansion, and grouping into chart series. */

import * as fs from "fs";
import * as path from "path";

import { MetricRow, parseMetricsCsv } from "./csv";
import { RunSummary, parseSummary } from "./summary";
import { cumulativeInstrumented } from "./aggregate";

export interface RunData {
  dir: string;
  csvPath: string;
  rows: MetricRow[];
  summary: RunSummary;
  cumulative: number[];
}

export class RunConsistencyError extends Error {}

export function loadRun(csvPath: string): RunData {
  const dir = path.dirname(csvPath);
  const rows = parseMetricsCsv(fs.readFileSync(csvPath, "utf-8"), csvPath);
  const summaryPath = path.join(dir, "summary.txt");
  const summary = parseSummary(fs.readFileSync(summaryPath, "utf-8"), summaryPath);
  const cumulative = cumulativeInstrumented(rows);
  const total = cumulative.length ? cumulative[cumulative.length - 1] : 0;
  if (total !== summary.totalInstrumentedBytes) {
    throw new RunConsistencyError(
      `${csvPath}: cumulative instrumented bytes ${total} != summary total ` +
        `${summary.totalInstrumentedBytes}`,
    );
  }
  return { dir, csvPath, rows, summary, cumulative };
}

/** Expand a glob with `*` (one path segment or part of one) and `**`. */
export function expandGlob(pattern: string): string[] {
  const segments = path.normalize(pattern).split(path.sep);
  let bases: string[] = [segments[0] === "" ? path.sep : "."];
  if (path.isAbsolute(pattern)) {
    segments.shift();
  }
  for (const segment of segments) {
    if (segment === "" || segment === ".") continue;
    const next: string[] = [];
    for (const base of bases) {
      if (segment === "**") {
        const walk = (d: string) => {
          next.push(d);
          for (const entry of safeReaddir(d)) {
            const full = path.join(d, entry);
            if (fs.statSync(full).isDirectory()) walk(full);
          }
        };
        walk(base);
      } else if (segment.includes("*")) {
        const re = new RegExp(
          "^" + segment.split("*").map(escapeRegExp).join(".*") + "$",
        );
        for (const entry of safeReaddir(base)) {
          if (re.test(entry)) next.push(path.join(base, entry));
        }
      } else {
        const full = path.join(base, segment);
        if (fs.existsSync(full)) next.push(full);
      }
    }
    bases = next;
  }
  return bases.sort();
}

function safeReaddir(dir: string): string[] {
  try {
    return fs.readdirSync(dir);
  } catch {
    return [];
  }
}

function escapeRegExp(text: string): string {
  return text.replace(/[.*+?^${}()|[\]\\]/g, "\\$&");
}

const GROUP_FIELDS: Record<string, (s: RunSummary) => string> = {
  topology: (s) => s.topology,
  mode: (s) => s.mode,
  clients: (s) => String(s.clients),
  seed: (s) => String(s.seed),
};

export function groupLabel(summary: RunSummary, keys: string[]): string {
  return keys
    .map((key) => {
      const get = GROUP_FIELDS[key];
      if (!get) throw new Error(`unknown group field ${key}`);
      return get(summary);
    })
    .join("/");
}

/** Group runs (repetitions share a label) and check shared timing. */
export function groupRuns(runs: RunData[], keys: string[]): Map<string, RunData[]> {
  const groups = new Map<string, RunData[]>();
  for (const run of runs) {
    const label = groupLabel(run.summary, keys);
    const entry = groups.get(label);
    if (entry) entry.push(run);
    else groups.set(label, [run]);
  }
  let timing: string | null = null;
  for (const run of runs) {
    const t =
      `${run.summary.impressionInterval}/${run.summary.propagationInterval}/` +
      `${run.summary.duration}`;
    if (timing === null) timing = t;
    else if (timing !== t) {
      throw new RunConsistencyError(
        `${run.csvPath}: timing parameters ${t} differ from other sources (${timing})`,
      );
    }
  }
  return groups;
}
