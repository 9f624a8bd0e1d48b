import hashlib
from pathlib import Path

from crdtsim.cli import main
from crdtsim.reporting import CSV_HEADER


BASE = [
    "--impression-interval", "10", "--propagation-interval", "5",
    "--duration", "100", "--ads", "3", "--threshold", "15", "--seed", "2",
]


def run_cli(args):
    return main(args)


def only_run_dir(root: Path) -> Path:
    dirs = [d for d in root.iterdir() if d.is_dir()]
    assert len(dirs) == 1
    return dirs[0]


def read_summary(path: Path) -> dict:
    out = {}
    for line in path.read_text().splitlines():
        key, _, value = line.partition(": ")
        out[key] = value
    return out


def test_run_writes_metrics_and_summary(tmp_path, capsys):
    rc = run_cli(["run", "--clients", "6", "--topology", "star", "--mode", "state",
                  "--out", str(tmp_path)] + BASE)
    assert rc == 0
    run_dir = only_run_dir(tmp_path)
    csv = run_dir / "metrics.csv"
    summary = read_summary(run_dir / "summary.txt")
    assert csv.read_text().splitlines()[0] == CSV_HEADER
    assert summary["topology"] == "star"
    assert summary["csv_sha256"] == hashlib.sha256(csv.read_bytes()).hexdigest()
    assert "run_id:" in capsys.readouterr().out.splitlines()[0].replace(summary["run_id"], "run_id:")


def test_summary_totals_match_csv(tmp_path):
    run_cli(["run", "--clients", "5", "--topology", "hyparview", "--mode", "delta",
             "--out", str(tmp_path)] + BASE)
    run_dir = only_run_dir(tmp_path)
    summary = read_summary(run_dir / "summary.txt")
    instrumented = control = 0
    for line in (run_dir / "metrics.csv").read_text().splitlines()[1:]:
        cells = line.split(",")
        if cells[6] == "1":
            instrumented += int(cells[5])
        else:
            control += int(cells[5])
    assert instrumented == int(summary["total_instrumented_bytes"])
    assert control == int(summary["total_control_bytes"])


def test_star_delta_combination_rejected(tmp_path, capsys):
    rc = run_cli(["run", "--clients", "4", "--topology", "star", "--mode", "delta",
                  "--out", str(tmp_path)] + BASE)
    assert rc == 2
    assert "state mode only" in capsys.readouterr().err


def test_rerun_same_flags_reproduces_identical_csv(tmp_path):
    args = ["run", "--clients", "4", "--topology", "hyparview", "--mode", "delta",
            "--out", str(tmp_path)] + BASE
    run_cli(args)
    run_dir = only_run_dir(tmp_path)
    first = (run_dir / "metrics.csv").read_bytes()
    run_cli(args)  # same run id, overwrites in place
    assert (run_dir / "metrics.csv").read_bytes() == first


def test_sweep_skips_invalid_cells(tmp_path, capsys):
    rc = run_cli(["sweep", "--clients", "4,5", "--repeat", "2",
                  "--out", str(tmp_path)] + BASE)
    assert rc == 0
    # 2 sizes x (star/state, hyparview/state, hyparview/delta) x 2 repeats
    dirs = [d for d in Path(tmp_path).iterdir() if d.is_dir()]
    assert len(dirs) == 12
    lines = [l for l in capsys.readouterr().out.splitlines() if "->" in l]
    assert len(lines) == 12
    assert not any("star/delta" in l for l in lines)


def test_latency_flag_parsed_and_validated(tmp_path, capsys):
    ok = run_cli(["run", "--clients", "4", "--topology", "hyparview", "--mode", "delta",
                  "--latency", "1,3", "--out", str(tmp_path)] + BASE)
    assert ok == 0
    bad = run_cli(["run", "--clients", "4", "--latency", "fast",
                   "--out", str(tmp_path)] + BASE)
    assert bad == 2
    assert "MIN,MAX" in capsys.readouterr().err


def test_overlay_dump_written_when_requested(tmp_path):
    run_cli(["run", "--clients", "4", "--topology", "hyparview", "--mode", "delta",
             "--overlay-dump", "--out", str(tmp_path)] + BASE)
    run_dir = only_run_dir(tmp_path)
    lines = (run_dir / "overlay.csv").read_text().splitlines()
    assert lines[0] == "tick,node,active_peers"
    assert any(line.split(",")[1] == "s0" for line in lines[1:])
