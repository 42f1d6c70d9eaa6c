import json
import subprocess
import sys

import numpy as np
import pytest

from dosnes.cli import config_from_args, main, read_config_file
from dosnes.errors import InputError
from dosnes.experiments import gaussian_clusters
from dosnes.ingest import read_embedding


def _error_line(capsys):
    lines = capsys.readouterr().err.strip().splitlines()
    assert len(lines) == 1
    return json.loads(lines[0])


def test_two_node_edge_list(tmp_path):
    src = tmp_path / "g.txt"
    src.write_text("0 1 1.0\n")
    out = tmp_path / "coords.csv"
    assert main(["--input", str(src), "--out-coords", str(out), "--iters", "50"]) == 0
    Y, _ = read_embedding(out.read_text())
    assert Y.shape == (2, 3)


def test_bipartite_empty_row(tmp_path, capsys):
    src = tmp_path / "b.txt"
    src.write_text("0 0 1\n2 1 1\n")
    code = main(["--input", str(src), "--format", "bipartite"])
    assert code == 2
    err = _error_line(capsys)
    assert err["exit_code"] == 2 and "row 1" in err["reason"]


def test_vectors_sphere_pipeline(tmp_path):
    X, _ = gaussian_clusters(0)
    src = tmp_path / "x.csv"
    np.savetxt(src, X, delimiter=",")
    report = tmp_path / "out" / "report.json"
    snap = tmp_path / "out" / "view.svg"
    argv = [
        "--input", str(src), "--format", "vectors", "--perplexity", "15", "--iters", "300",
        "--out-report", str(report), "--out-snapshot", str(snap),
        "--viewpoint", "0,0,1", "--viewpoint", "1,1,0",
    ]
    assert main(argv) == 0
    rep = json.loads(report.read_text())
    assert rep["normalization"]["method"] == "random_walk"
    assert rep["sphericity"]["radius_cv"] < 1e-12
    assert rep["run"]["final_kl"] < rep["run"]["initial_kl"]
    assert rep["propositions"]["prop2"]["lower_holds"] == 150
    assert [s["path"] for s in rep["snapshots"]] == [
        str(tmp_path / "out" / "view_v1.svg"),
        str(tmp_path / "out" / "view_v2.svg"),
    ]
    assert (tmp_path / "out" / "view_v2.svg").read_text().startswith("<svg")


def test_report_schema_stable(tmp_path):
    src = tmp_path / "g.txt"
    src.write_text("0 1 1\n1 2 1\n2 3 1\n3 0 1\n0 2 1\n1 3 1\n")
    keys = []
    for seed in ("1", "2"):
        out = tmp_path / f"r{seed}.json"
        assert main(["--input", str(src), "--seed", seed, "--iters", "30", "--out-report", str(out)]) == 0
        rep = json.loads(out.read_text())
        keys.append((sorted(rep), sorted(rep["run"]), sorted(rep["sphericity"])))
    assert keys[0] == keys[1]


def test_pipeline_deterministic(tmp_path):
    src = tmp_path / "g.txt"
    src.write_text("0 1 1\n1 2 2\n2 3 1\n3 0 2\n0 2 1\n1 3 1\n")
    outs = []
    for k in range(2):
        out = tmp_path / f"c{k}.csv"
        assert main(["--input", str(src), "--iters", "40", "--out-coords", str(out)]) == 0
        outs.append(out.read_text())
    assert outs[0] == outs[1]


def test_normalization_failure_exit_code(tmp_path, capsys):
    src = tmp_path / "star.txt"
    src.write_text("".join(f"0 {j} 1\n" for j in range(1, 5)))
    assert main(["--input", str(src), "--sinkhorn-iters", "20"]) == 3
    assert _error_line(capsys)["kind"] == "normalization"


def test_divergence_exit_code(tmp_path, capsys):
    src = tmp_path / "g.txt"
    src.write_text("0 1 1\n1 2 1\n0 2 5\n2 3 1\n0 3 2\n1 3 1\n")
    argv = ["--input", str(src), "--kernel", "gaussian", "--lr", "1e300", "--no-sphere", "--dim", "2"]
    with np.errstate(all="ignore"):
        assert main(argv) == 4
    assert _error_line(capsys)["kind"] == "divergence"


def test_missing_input_is_io_error(tmp_path, capsys):
    assert main(["--input", str(tmp_path / "nope.txt")]) == 5
    assert _error_line(capsys)["kind"] == "io"


def test_inconsistent_config_rejected(capsys):
    assert main(["--input", "x", "--sphere", "--dim", "2"]) == 2
    assert main(["--input", "x", "--normalize", "random-walk"]) == 2


def test_config_file_and_overrides(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text(
        "# experiment record\n"
        "input = data.txt\n"
        "kernel = gaussian\n"
        "iters = 10\n"
        "sphere = false\n"
        "dim = 2\n"
        "viewpoint = 0,0,1; 1,0,0\n"
    )
    c = config_from_args(["--config", str(cfg), "--iters", "25"])
    assert (c.kernel, c.iters, c.sphere, c.dim) == ("gaussian", 25, False, 2)
    assert c.viewpoint == [(0.0, 0.0, 1.0), (1.0, 0.0, 0.0)]
    c = config_from_args(["--config", str(cfg), "--viewpoint", "0,1,0"])
    assert c.viewpoint == [(0.0, 1.0, 0.0)]


def test_config_file_unknown_key(tmp_path):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("colour = blue\n")
    with pytest.raises(InputError, match="bad.cfg:1"):
        read_config_file(cfg)


def test_figure1_smoke(tmp_path):
    out = tmp_path / "fig1.json"
    snap = tmp_path / "fig1.svg"
    argv = ["--figure1", "50", "--iters", "200", "--out-report", str(out), "--out-snapshot", str(snap)]
    assert main(argv) == 0
    rep = json.loads(out.read_text())
    assert rep["n"] == 50 and rep["raw_radius_cv"] > 0
    assert (tmp_path / "fig1_raw.svg").exists() and (tmp_path / "fig1_ds.svg").exists()


def test_module_entry_point(tmp_path):
    src = tmp_path / "g.txt"
    src.write_text("0 1 1.0\n")
    res = subprocess.run(
        [sys.executable, "-m", "dosnes", "--input", str(src), "--iters", "5"],
        capture_output=True,
        text=True,
    )
    assert res.returncode == 0, res.stderr


def test_report_to_stdout_by_default(tmp_path, capsys):
    src = tmp_path / "g.txt"
    src.write_text("0 1 1\n1 2 1\n2 0 1\n")
    assert main(["--input", str(src), "--iters", "20"]) == 0
    rep = json.loads(capsys.readouterr().out)
    assert rep["status"] == "ok"
