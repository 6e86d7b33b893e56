import json

import numpy as np
import pytest

from nilwalk.cli import default_checkpoints, main, validate_config
from nilwalk.errors import SchemaError
from nilwalk.manifest import read_csv_columns, sha256_file
from nilwalk.splitting import delta, lift_from_json


def run(args):
    return main([str(a) for a in args])


def read_json(path):
    with open(path) as fh:
        return json.load(fh)


def test_default_checkpoints_are_dyadic_plus_endpoint():
    assert default_checkpoints(64) == (4, 8, 16, 32, 64)
    assert default_checkpoints(100) == (4, 8, 16, 32, 64, 100)
    assert default_checkpoints(4) == (4,)
    assert default_checkpoints(3) == (3,)


def test_validate_config_fills_defaults():
    cfg = validate_config({"schema_version": 1, "kind": "walk"})
    assert cfg["seed"] == 0 and cfg["gauge"] == "bracket_hull"
    with pytest.raises(SchemaError):
        validate_config({"schema_version": 2, "kind": "walk"})
    with pytest.raises(SchemaError):
        validate_config({"schema_version": 1, "kind": "walk", "step_count": 5})


def test_walk_writes_artifacts_with_matching_hashes(tmp_path):
    out = tmp_path / "run"
    code = run(["walk", "--preset", "heisenberg-srw", "--n", 64,
                "--reps", 50, "--out", out])
    assert code == 0
    csv_path = out / "walk.csv"
    man = read_json(out / "manifest.json")
    assert man["files"]["walk.csv"] == sha256_file(str(csv_path))
    assert man["config"]["preset"] == "heisenberg-srw"
    assert man["config"]["checkpoints"] == [4, 8, 16, 32, 64]
    assert man["derived"]["scaling_exponent"] == 0.5
    head = csv_path.read_text().splitlines()[0]
    assert head.startswith("# nilwalk-walk-csv 1")
    data, names = read_csv_columns(str(csv_path))
    assert data.shape == (50 * 5, len(names))
    for want in ("replicate", "n", "M", "M_scaled", "y_norm", "q_index"):
        assert want in names


def test_walk_byte_identical_across_thread_counts(tmp_path, monkeypatch):
    outs = []
    for env, sub in (("1", "a"), ("6", "b")):
        monkeypatch.setenv("NILWALK_THREADS", env)
        out = tmp_path / sub
        assert run(["walk", "--preset", "r2-c4", "--n", 32, "--reps", 600,
                    "--out", out]) == 0
        outs.append(out)
    for name in ("walk.csv", "manifest.json"):
        assert (outs[0] / name).read_bytes() == (outs[1] / name).read_bytes()


def test_config_file_with_flag_override(tmp_path):
    cfgp = tmp_path / "cfg.json"
    cfgp.write_text(json.dumps({
        "schema_version": 1, "kind": "walk", "preset": "heisenberg-srw",
        "n": 32, "reps": 40, "seed": 3}))
    out = tmp_path / "out"
    assert run(["walk", "--config", cfgp, "--reps", 60, "--out", out]) == 0
    man = read_json(out / "manifest.json")
    assert man["config"]["reps"] == 60       # flag wins
    assert man["config"]["seed"] == 3        # file value kept
    assert man["seed"] == 3


def test_walk_checkpoint_flag_parsing(tmp_path):
    out = tmp_path / "out"
    assert run(["walk", "--preset", "heisenberg-srw", "--n", 64,
                "--reps", 10, "--checkpoints", "8,32,64", "--out", out]) == 0
    man = read_json(out / "manifest.json")
    assert man["config"]["checkpoints"] == [8, 32, 64]
    data, _ = read_csv_columns(str(out / "walk.csv"))
    assert data.shape[0] == 30
    bad = run(["walk", "--preset", "heisenberg-srw", "--n", 64,
               "--reps", 10, "--checkpoints", "8,banana", "--out", out])
    assert bad == 2


def test_walk_rejects_unknown_preset_from_config(tmp_path):
    cfgp = tmp_path / "cfg.json"
    cfgp.write_text(json.dumps({
        "schema_version": 1, "kind": "walk", "preset": "brownian"}))
    assert run(["walk", "--config", cfgp, "--out", tmp_path / "o"]) == 2


def test_walk_work_ceiling_exit_code(tmp_path):
    assert run(["walk", "--preset", "heisenberg-srw", "--n", 4096,
                "--reps", 4096, "--max-work", 2 ** 20,
                "--out", tmp_path / "o"]) == 3


def test_flip_walk_reports_stay_probability(tmp_path):
    out = tmp_path / "o"
    assert run(["walk", "--preset", "r1-flip-eps", "--eps", "0.05",
                "--n", 32, "--reps", 500, "--out", out]) == 0
    man = read_json(out / "manifest.json")
    stay = man["derived"]["stay_probability"]
    assert stay["exact"] == pytest.approx(0.95 ** 32)
    assert man["derived"]["kappa_mu"] == pytest.approx(0.1)
    assert man["derived"]["conjugated"] is True


def test_fit_pipeline_over_walk_csv(tmp_path):
    wout = tmp_path / "w"
    assert run(["walk", "--preset", "heisenberg-srw", "--n", 256,
                "--reps", 300, "--out", wout]) == 0
    fout = tmp_path / "f"
    assert run(["fit", "--csv", wout / "walk.csv", "--column", "M_scaled",
                "--bootstrap", 20, "--lil-alpha", "0.5", "--svg",
                "--out", fout]) == 0
    report = read_json(fout / "fit-report.json")
    assert 0 < report["alpha_tail"] < 6
    assert report["groups"] == {"4": 300, "8": 300, "16": 300, "32": 300,
                                "64": 300, "128": 300, "256": 300}
    assert "lil" in report and report["lil"]["dyadic_n"][0] == 4
    assert (fout / "fit-tail.csv").exists()
    assert (fout / "tail.svg").read_text().startswith("<svg")
    man = read_json(fout / "manifest.json")
    assert man["inputs"]["walk.csv"] == sha256_file(str(wout / "walk.csv"))


def test_fit_missing_csv_is_io_error(tmp_path):
    assert run(["fit", "--csv", tmp_path / "nope.csv",
                "--out", tmp_path / "o"]) == 5


def test_fit_wrong_columns_is_schema_error(tmp_path):
    wout = tmp_path / "w"
    assert run(["walk", "--preset", "heisenberg-srw", "--n", 32,
                "--reps", 40, "--out", wout]) == 0
    fout = tmp_path / "f"
    assert run(["fit", "--csv", wout / "walk.csv", "--bootstrap", 5,
                "--out", fout]) == 0
    # tail CSV has t/p/lo/hi columns, not walk columns
    assert run(["fit", "--csv", fout / "fit-tail.csv",
                "--out", tmp_path / "g"]) == 2


def test_split_scan_artifacts(tmp_path):
    out = tmp_path / "s"
    assert run(["split-scan", "--preset", "d4-r2", "--reps", 128,
                "--svg", "--out", out]) == 0
    man = read_json(out / "manifest.json")
    assert man["derived"]["c_hat"] > 0
    assert man["derived"]["group_order"] == 8
    assert set(man["files"]) == {"scan.csv", "best-lift.json", "scan-hist.svg"}
    best = lift_from_json(read_json(out / "best-lift.json"))
    val, _ = delta(best)
    assert val == pytest.approx(1.0, rel=1e-9)
    head = (out / "scan.csv").read_text().splitlines()
    assert head[0].startswith("# nilwalk-scan-csv 1")


def test_split_scan_requires_known_preset(tmp_path):
    cfgp = tmp_path / "cfg.json"
    cfgp.write_text(json.dumps({"schema_version": 1, "kind": "split-scan"}))
    assert run(["split-scan", "--config", cfgp, "--out", tmp_path / "o"]) == 2


def test_algebra_check_preset_and_drift(tmp_path):
    out = tmp_path / "a"
    assert run(["algebra-check", "--preset", "heisenberg", "--v", "1,0,0",
                "--out", out]) == 0
    report = read_json(out / "algebra-report.json")
    assert report["step"] == 2
    assert report["filtration"]["depth"] == 3
    assert report["filtration"]["layer_dims"] == [2, 0, 1]
    assert run(["algebra-check", "--preset", "heisenberg", "--v", "1,0",
                "--out", tmp_path / "b"]) == 2


def test_algebra_check_inline_payload(tmp_path):
    from nilwalk.algebra import algebra_to_json
    from nilwalk.presets import filiform_algebra
    payload = tmp_path / "alg.json"
    payload.write_text(json.dumps(algebra_to_json(filiform_algebra(4))))
    out = tmp_path / "a"
    assert run(["algebra-check", "--algebra", payload, "--out", out]) == 0
    assert read_json(out / "algebra-report.json")["dim"] == 4


def test_algebra_check_rejects_non_jacobi_tensor(tmp_path):
    # [e1,e2] = e3 and [e1,e3] = e1 cannot satisfy the Jacobi identity
    # for a nilpotent bracket
    t = np.zeros((3, 3, 3))
    t[0, 1, 2], t[1, 0, 2] = 1.0, -1.0
    t[0, 2, 0], t[2, 0, 0] = 1.0, -1.0
    payload = tmp_path / "alg.json"
    payload.write_text(json.dumps({"dim": 3, "step": 2, "tensor": t.tolist()}))
    assert run(["algebra-check", "--algebra", payload,
                "--out", tmp_path / "o"]) == 4


def test_replay_reproduces_and_detects_tampering(tmp_path):
    src = tmp_path / "src"
    assert run(["walk", "--preset", "heisenberg-srw", "--n", 32,
                "--reps", 80, "--out", src]) == 0
    assert run(["replay", "--manifest", src / "manifest.json",
                "--out", tmp_path / "fresh"]) == 0

    man = read_json(src / "manifest.json")
    man["files"]["walk.csv"] = "0" * 64
    tampered = tmp_path / "tampered.json"
    tampered.write_text(json.dumps(man))
    assert run(["replay", "--manifest", tampered,
                "--out", tmp_path / "fresh2"]) == 4


def test_replay_split_scan(tmp_path):
    src = tmp_path / "src"
    assert run(["split-scan", "--preset", "s3-r2", "--reps", 96,
                "--out", src]) == 0
    assert run(["replay", "--manifest", src / "manifest.json",
                "--out", tmp_path / "again"]) == 0
