"""Metrics CSV stream and run summary documents.

The CSV carries one row per payload sent; the summary is a flat
``key: value`` text file echoing the configuration, headline results
and the CSV checksum, which downstream tooling parses for grouping.
"""

from __future__ import annotations

import hashlib
from pathlib import Path

from .simulator import RunReport

CSV_HEADER = "tick,sender,receiver,payload_kind,variable_id,bytes,instrumented,phase"
OVERLAY_HEADER = "tick,node,active_peers"


class CsvMetricsSink:
    """Streams metric rows to disk while hashing the exact file bytes."""

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self._fh = open(self.path, "w", newline="")
        self._hash = hashlib.sha256()
        self._write(CSV_HEADER + "\n")

    def _write(self, text: str) -> None:
        self._fh.write(text)
        self._hash.update(text.encode("utf-8"))

    def write_row(self, tick, sender, receiver, kind, var_id, nbytes, instrumented, phase):
        self._write(
            f"{tick},{sender},{receiver},{kind},{var_id},{nbytes},"
            f"{1 if instrumented else 0},{phase}\n"
        )

    def close(self) -> str:
        """Close the file and return the content's sha256 hex digest."""
        self._fh.close()
        return self._hash.hexdigest()


class OverlayDumpSink:
    """One line per node per sampling interval: tick, node, active peers."""

    def __init__(self, path: str | Path):
        self._fh = open(Path(path), "w", newline="")
        self._fh.write(OVERLAY_HEADER + "\n")

    def write_row(self, tick, node, active_peers):
        self._fh.write(f"{tick},{node},{';'.join(active_peers)}\n")

    def close(self) -> None:
        self._fh.close()


def run_id_for(config) -> str:
    text = ";".join(f"{k}={v}" for k, v in config.key_values())
    return hashlib.sha256(text.encode("utf-8")).hexdigest()[:12]


def summary_lines(report: RunReport, run_id: str, csv_sha256: str | None) -> list[str]:
    lines = [f"run_id: {run_id}"]
    for key, value in report.config.key_values():
        lines.append(f"{key}: {value}")
    lines.append(f"ticks_run: {report.ticks_run}")
    lines.append(f"event_start_tick: {report.start_tick}")
    lines.append(f"last_event_tick: {report.last_event_tick}")
    conv = report.convergence_tick if report.convergence_tick is not None else -1
    inband = (
        report.inband_convergence_tick
        if report.inband_convergence_tick is not None
        else -1
    )
    lines.append(f"convergence_tick: {conv}")
    lines.append(f"inband_convergence_tick: {inband}")
    lines.append(f"done_tick: {report.done_tick}")
    lines.append(f"total_instrumented_bytes: {report.total_instrumented_bytes}")
    lines.append(f"total_control_bytes: {report.total_control_bytes}")
    lines.append(f"payloads_sent: {report.payloads_sent}")
    samples = ";".join(f"{t}:{d}" for t, d in report.diameter_samples)
    lines.append(f"diameter_samples: {samples}")
    counts = ";".join(f"{ad}={n}" for ad, n in sorted(report.ad_counts.items()))
    lines.append(f"ad_counts: {counts}")
    lines.append(f"spillover_count: {report.spillover_count}")
    lines.append(f"impressions_total: {report.impressions_total}")
    lines.append(f"retirements: {len(report.retirements)}")
    lines.append(f"churn_kills: {len(report.churn_kills)}")
    lines.append(f"max_delta_buffer_len: {report.max_buffer_len}")
    lines.append(f"csv_sha256: {csv_sha256 if csv_sha256 else '-'}")
    return lines


def write_summary(path: str | Path, report: RunReport, run_id: str, csv_sha256: str | None) -> str:
    text = "\n".join(summary_lines(report, run_id, csv_sha256)) + "\n"
    Path(path).write_text(text)
    return text
