import json
import subprocess
import sys

import numpy as np
import pytest

from cvsroi.cli import main, read_tensor, write_tensor
from cvsroi.label_io import FUSED, STREAM1, STREAM2, LabelMap, load_label_map, make_label_map, save_label_map
from cvsroi.sobel_loss import random_pair
from cvsroi.synth import canonical_spec, generate_scene, write_frame


def run(argv, capsys):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def error_code(err):
    return json.loads(err.strip().splitlines()[-1])["error"]


@pytest.fixture(scope="module")
def corpus(tmp_path_factory):
    d = tmp_path_factory.mktemp("corpus")
    assert main(["synth", "12", "5", str(d)]) == 0
    return d


# --- fuse ---


def test_fuse_valid_pair(tmp_path, capsys):
    save_label_map(make_label_map([[0, 2]], STREAM1), tmp_path / "a.pgm")
    save_label_map(make_label_map([[1, 1]], STREAM2), tmp_path / "b.pgm")
    code, _, _ = run(["fuse", tmp_path / "a.pgm", tmp_path / "b.pgm", tmp_path / "f.pgm"], capsys)
    assert code == 0
    assert load_label_map(tmp_path / "f.pgm", expect=FUSED).data.tolist() == [[7, 2]]
    code, _, _ = run(["fuse", tmp_path / "a.pgm", tmp_path / "b.pgm", tmp_path / "g.pgm", "--mode", "fat-overwrite"],
                     capsys)
    assert load_label_map(tmp_path / "g.pgm").data.tolist() == [[7, 7]]


def test_fuse_mode_from_config(tmp_path, capsys):
    save_label_map(make_label_map([[2]], STREAM1), tmp_path / "a.pgm")
    save_label_map(make_label_map([[1]], STREAM2), tmp_path / "b.pgm")
    (tmp_path / "run.cfg").write_text("fusion.mode = fat-overwrite\n")
    code, _, _ = run(["--config", tmp_path / "run.cfg", "fuse", tmp_path / "a.pgm", tmp_path / "b.pgm",
                      tmp_path / "f.pgm"], capsys)
    assert code == 0 and load_label_map(tmp_path / "f.pgm").data.tolist() == [[7]]


def test_fuse_size_mismatch(tmp_path, capsys):
    save_label_map(make_label_map([[0, 0]], STREAM1), tmp_path / "a.pgm")
    save_label_map(make_label_map([[1]], STREAM2), tmp_path / "b.pgm")
    code, _, err = run(["fuse", tmp_path / "a.pgm", tmp_path / "b.pgm", tmp_path / "f.pgm"], capsys)
    assert code == 2 and error_code(err) == "DimensionMismatch"


def test_missing_input_file(tmp_path, capsys):
    code, _, err = run(["fuse", tmp_path / "x.pgm", tmp_path / "y.pgm", tmp_path / "f.pgm"], capsys)
    assert code == 2 and error_code(err) == "MissingFile"


def test_bad_config(tmp_path, capsys):
    (tmp_path / "bad.cfg").write_text("rules.t_liver = lots\n")
    code, _, err = run(["--config", tmp_path / "bad.cfg", "assess", tmp_path], capsys)
    assert code == 2 and error_code(err) == "ConfigError"


# --- assess ---


def test_assess_positive_frame(tmp_path, capsys):
    write_frame(generate_scene(canonical_spec()), tmp_path, "pos")
    code, out, _ = run(["assess", tmp_path], capsys)
    rec = json.loads(out)
    assert code == 0
    assert rec["frame"] == "pos" and rec["cvs"] is True
    assert set(rec) == {"frame", "c1", "c2", "c3", "cvs", "evidence", "roi"}
    assert len(rec["roi"]) == 4


def test_assess_no_duct(tmp_path, capsys):
    d = generate_scene(canonical_spec()).label_map.data.copy()
    d[d == FUSED.id_of("cystic_duct")] = 0
    save_label_map(LabelMap(d, FUSED), tmp_path / "noduct.pgm")
    code, out, _ = run(["assess", tmp_path], capsys)
    rec = json.loads(out)
    assert code == 0
    assert rec["roi"] == {"failure": "DuctMissing"}
    assert not any(rec[k] for k in ("c1", "c2", "c3", "cvs"))


def test_assess_bad_frame_does_not_abort(tmp_path, capsys):
    write_frame(generate_scene(canonical_spec()), tmp_path, "b_good")
    (tmp_path / "a_bad.pgm").write_bytes(b"garbage")
    code, out, _ = run(["assess", tmp_path], capsys)
    lines = [json.loads(line) for line in out.splitlines()]
    assert code == 0
    assert [r["frame"] for r in lines] == ["a_bad", "b_good"]
    assert lines[0]["roi"] == {"failure": "MissingFile"}
    assert lines[1]["cvs"] is True


def test_assess_empty_directory(tmp_path, capsys):
    code, out, _ = run(["assess", tmp_path], capsys)
    assert code == 0 and out == ""


def test_assess_overlay(corpus, tmp_path, capsys):
    code, _, _ = run(["assess", corpus, "-o", tmp_path / "r.jsonl", "--overlay", tmp_path / "ov"], capsys)
    assert code == 0
    raw = (tmp_path / "ov" / "frame_0000.overlay.pgm").read_bytes()
    assert raw.startswith(b"P5\n256 256\n255\n")
    assert 250 in raw[len(b"P5\n256 256\n255\n"):]


def test_assess_jobs_do_not_change_output(corpus, tmp_path, capsys):
    run(["assess", corpus, "-o", tmp_path / "one.jsonl"], capsys)
    run(["assess", corpus, "-o", tmp_path / "four.jsonl", "--jobs", "4"], capsys)
    assert (tmp_path / "one.jsonl").read_bytes() == (tmp_path / "four.jsonl").read_bytes()


# --- eval ---


def truth_report(corpus, path, transform=lambda t: t):
    lines = []
    for p in sorted(corpus.glob("*.truth.json")):
        t = json.loads(p.read_text())
        lines.append(json.dumps({"frame": p.name[: -len(".truth.json")], **transform(t)}))
    path.write_text("\n".join(lines) + "\n")


def test_eval_truth_report_is_perfect(corpus, tmp_path, capsys):
    truth_report(corpus, tmp_path / "r.jsonl")
    code, out, _ = run(["eval", tmp_path / "r.jsonl", corpus], capsys)
    res = json.loads(out)
    assert code == 0 and res["frames"] == 12
    for k in ("c1", "c2", "c3", "cvs"):
        assert [res[k][n] for n in ("acc", "bacc", "ppv", "npv")] == [1.0] * 4


def test_eval_all_negative_ppv_null(corpus, tmp_path, capsys):
    truth_report(corpus, tmp_path / "r.jsonl", lambda t: {"c1": False, "c2": False, "c3": False, "cvs": False})
    code, out, _ = run(["eval", tmp_path / "r.jsonl", corpus], capsys)
    assert code == 0
    assert '"ppv": null' in out


def test_eval_disjoint_frames(corpus, tmp_path, capsys):
    (tmp_path / "r.jsonl").write_text(json.dumps({"frame": "elsewhere", "c1": 1, "c2": 1, "c3": 1, "cvs": 1}) + "\n")
    code, _, err = run(["eval", tmp_path / "r.jsonl", corpus], capsys)
    assert code == 2 and error_code(err) == "MissingTruth"


# --- loss ---


@pytest.fixture
def tensors(tmp_path):
    g, p = random_pair(np.random.default_rng(0))
    write_tensor(g, tmp_path / "g.txt")
    write_tensor(p, tmp_path / "p.txt")
    return tmp_path / "g.txt", tmp_path / "p.txt"


def test_tensor_round_trip(tensors):
    g = read_tensor(tensors[0])
    write_tensor(g, tensors[0].with_name("again.txt"))
    assert tensors[0].with_name("again.txt").read_text() == tensors[0].read_text()


def test_loss_identical_inputs(tensors, capsys):
    code, out, _ = run(["loss", tensors[0], tensors[0]], capsys)
    assert code == 0 and json.loads(out)["total"] == 0.0


def test_loss_lambda_zero(tensors, capsys):
    _, out, _ = run(["loss", *tensors, "--lambda", "0"], capsys)
    res = json.loads(out)
    assert res["total"] == res["ce"]


def test_loss_check_grad(tensors, capsys):
    code, out, _ = run(["loss", *tensors, "--check-grad"], capsys)
    assert code == 0 and json.loads(out)["max_rel_err"] < 1e-5


def test_loss_grad_output(tensors, tmp_path, capsys):
    code, _, _ = run(["loss", *tensors, "--grad", tmp_path / "grad.txt"], capsys)
    assert code == 0 and read_tensor(tmp_path / "grad.txt").shape == (3, 8, 8)


def test_loss_shape_mismatch(tensors, tmp_path, capsys):
    write_tensor(np.zeros((3, 4, 8)), tmp_path / "small.txt")
    code, _, err = run(["loss", tensors[0], tmp_path / "small.txt"], capsys)
    assert code == 2 and error_code(err) == "ShapeMismatch"


def test_loss_malformed_tensor(tmp_path, capsys):
    (tmp_path / "t.txt").write_text("1 2 2\n0 0 0\n")
    code, _, err = run(["loss", tmp_path / "t.txt", tmp_path / "t.txt"], capsys)
    assert code == 2 and error_code(err) == "ShapeMismatch"


# --- synth ---


def listing(d):
    return {p.name: p.read_bytes() for p in sorted(d.iterdir())}


def test_synth_ten_frames(tmp_path, capsys):
    code, _, _ = run(["synth", 10, 1, tmp_path / "a"], capsys)
    assert code == 0
    assert len(list((tmp_path / "a").glob("*.pgm"))) == 10
    assert len(list((tmp_path / "a").iterdir())) == 30


def test_synth_repeatable_with_jobs(tmp_path, capsys):
    run(["synth", 6, 1, tmp_path / "a"], capsys)
    run(["synth", 6, 1, tmp_path / "b", "--jobs", "3"], capsys)
    assert listing(tmp_path / "a") == listing(tmp_path / "b")


def test_synth_flip_rate(tmp_path, capsys):
    run(["synth", 3, 2, tmp_path / "clean"], capsys)
    run(["synth", 3, 2, tmp_path / "noisy", "--flip-rate", "0.01"], capsys)
    n = changed = 0
    for p in sorted((tmp_path / "clean").glob("*.pgm")):
        a = load_label_map(p).data
        b = load_label_map(tmp_path / "noisy" / p.name).data
        n += a.size
        changed += int(np.count_nonzero(a != b))
    sigma = (n * 0.01 * 0.99) ** 0.5
    assert abs(changed - 0.01 * n) <= 3 * sigma


def test_synth_unwritable_target(tmp_path, capsys):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    code, _, err = run(["synth", 1, 1, blocker / "sub"], capsys)
    assert code == 2 and error_code(err) == "IoFailure"


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "cvsroi", "assess", str(tmp_path)], capture_output=True, text=True)
    assert proc.returncode == 0 and proc.stdout == ""


def test_invariant_violation_exit_code(capsys):
    from cvsroi.cli import _emit_error
    from cvsroi.errors import InvariantViolation

    assert _emit_error(InvariantViolation("broken")) == 3
    assert error_code(capsys.readouterr().err) == "InvariantViolation"
