/** Parsing for the run summary ("key: value" lines) written beside each CSV. */

export interface RunSummary {
  raw: Map<string, string>;
  topology: string;
  mode: string;
  clients: number;
  seed: number;
  totalInstrumentedBytes: number;
  totalControlBytes: number;
  convergenceTick: number;
  impressionInterval: number;
  propagationInterval: number;
  duration: number;
}

export class SummaryFormatError extends Error {
  constructor(file: string, detail: string) {
    super(`${file}: ${detail}`);
    this.name = "SummaryFormatError";
  }
}

function need(raw: Map<string, string>, file: string, key: string): string {
  const value = raw.get(key);
  if (value === undefined) {
    throw new SummaryFormatError(file, `missing field ${key}`);
  }
  return value;
}

export function parseSummary(content: string, file: string): RunSummary {
  const raw = new Map<string, string>();
  for (const line of content.split("\n")) {
    if (line === "") continue;
    const sep = line.indexOf(": ");
    if (sep < 0) {
      throw new SummaryFormatError(file, `line without "key: value" shape: ${JSON.stringify(line)}`);
    }
    raw.set(line.slice(0, sep), line.slice(sep + 2));
  }
  return {
    raw,
    topology: need(raw, file, "topology"),
    mode: need(raw, file, "mode"),
    clients: parseInt(need(raw, file, "clients"), 10),
    seed: parseInt(need(raw, file, "seed"), 10),
    totalInstrumentedBytes: parseInt(need(raw, file, "total_instrumented_bytes"), 10),
    totalControlBytes: parseInt(need(raw, file, "total_control_bytes"), 10),
    convergenceTick: parseInt(need(raw, file, "convergence_tick"), 10),
    impressionInterval: parseInt(need(raw, file, "impression_interval"), 10),
    propagationInterval: parseInt(need(raw, file, "propagation_interval"), 10),
    duration: parseInt(need(raw, file, "duration"), 10),
  };
}
