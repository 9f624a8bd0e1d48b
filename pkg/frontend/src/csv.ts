/** Parsing for the simulator's metrics CSV stream. */

export interface MetricRow {
  tick: number;
  sender: string;
  receiver: string;
  payloadKind: string;
  variableId: string;
  bytes: number;
  instrumented: boolean;
  phase: number;
}

export const METRICS_HEADER =
  "tick,sender,receiver,payload_kind,variable_id,bytes,instrumented,phase";

export class CsvFormatError extends Error {
  constructor(file: string, line: number, detail: string) {
    super(`${file}:${line}: ${detail}`);
    this.name = "CsvFormatError";
  }
}

function parseIntStrict(
  text: string,
  file: string,
  line: number,
  field: string,
): number {
  if (!/^-?\d+$/.test(text)) {
    throw new CsvFormatError(file, line, `field ${field} is not an integer: ${JSON.stringify(text)}`);
  }
  return parseInt(text, 10);
}

export function parseMetricsCsv(content: string, file: string): MetricRow[] {
  const lines = content.split("\n");
  if (lines[0] !== METRICS_HEADER) {
    throw new CsvFormatError(file, 1, `unexpected header: ${JSON.stringify(lines[0])}`);
  }
  const rows: MetricRow[] = [];
  for (let i = 1; i < lines.length; i++) {
    const line = lines[i];
    if (line === "") continue; // trailing newline
    const cells = line.split(",");
    if (cells.length !== 8) {
      throw new CsvFormatError(file, i + 1, `expected 8 fields, got ${cells.length}`);
    }
    const instrumented = cells[6];
    if (instrumented !== "0" && instrumented !== "1") {
      throw new CsvFormatError(file, i + 1, `instrumented flag must be 0 or 1, got ${instrumented}`);
    }
    rows.push({
      tick: parseIntStrict(cells[0], file, i + 1, "tick"),
      sender: cells[1],
      receiver: cells[2],
      payloadKind: cells[3],
      variableId: cells[4],
      bytes: parseIntStrict(cells[5], file, i + 1, "bytes"),
      instrumented: instrumented === "1",
      phase: parseIntStrict(cells[7], file, i + 1, "phase"),
    });
  }
  return rows;
}

export interface OverlaySample {
  tick: number;
  node: string;
  activePeers: string[];
}

export const OVERLAY_HEADER = "tick,node,active_peers";

export function parseOverlayCsv(content: string, file: string): OverlaySample[] {
  const lines = content.split("\n");
  if (lines[0] !== OVERLAY_HEADER) {
    throw new CsvFormatError(file, 1, `unexpected header: ${JSON.stringify(lines[0])}`);
  }
  const samples: OverlaySample[] = [];
  for (let i = 1; i < lines.length; i++) {
    if (lines[i] === "") continue;
    const cells = lines[i].split(",");
    if (cells.length !== 3) {
      throw new CsvFormatError(file, i + 1, `expected 3 fields, got ${cells.length}`);
    }
    samples.push({
      tick: parseIntStrict(cells[0], file, i + 1, "tick"),
      node: cells[1],
      activePeers: cells[2] === "" ? [] : cells[2].split(";"),
    });
  }
  return samples;
}
