import csv
import json

import numpy as np
import pytest

from bpnmf import checkpoint
from bpnmf.audio import write_wav
from bpnmf.cli import main, read_scores
from bpnmf.metrics import DB_CAP
from fixtures import harmonic_sources


@pytest.fixture(scope="module")
def synth_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("syn")
    assert main(["synth", "--out", str(out), "--seed", "1", "--F", "8", "--T", "30", "--L", "10"]) == 0
    return out


def _fit(data, out, *extra):
    return main(["fit", "--data", str(data), "--out", str(out), "--K", "6", "--seed", "3", *extra])


def test_synth_outputs_reload(synth_dir):
    data = checkpoint.load(synth_dir / "data.json")
    truth = checkpoint.load(synth_dir / "truth.json")
    assert data.arrays["X"].shape == (8, 30)
    assert np.array_equal(truth.arrays["S"].shape, (10, 30))
    manifest = [json.loads(line) for line in (synth_dir / "manifest.jsonl").read_text().splitlines()]
    assert len(manifest) == 1 and manifest[0]["seed"] == 1
    assert set(manifest[0]["outputs"]) == {"data.json", "truth.json"}


def test_fit_writes_checkpoint_trace_and_manifest(synth_dir, tmp_path):
    out = tmp_path / "nested" / "fit"
    assert _fit(synth_dir / "data.json", out, "--iters", "8", "--checkpoint-every", "4") == 0
    ck = checkpoint.load(out / "checkpoint.json")
    assert ck.kind == "ssmf" and ck.iteration == 8 and ck.arrays["S"].shape == (6, 30)
    assert (out / "checkpoint_000004.json").exists() and (out / "checkpoint_000008.json").exists()
    rows = list(csv.reader(open(out / "trace.csv")))
    assert rows[0] == ["iteration", "step_size", "loglik", "active", "wall_time"]
    assert len(rows) == 9
    assert len((out / "manifest.jsonl").read_text().splitlines()) == 1


def test_fit_same_seed_same_bytes(synth_dir, tmp_path):
    for name, threads in (("a", "1"), ("b", "1"), ("c", "3")):
        assert _fit(synth_dir / "data.json", tmp_path / name, "--iters", "5", "--threads", threads) == 0
    a = (tmp_path / "a" / "checkpoint.json").read_bytes()
    assert a == (tmp_path / "b" / "checkpoint.json").read_bytes()
    assert a == (tmp_path / "c" / "checkpoint.json").read_bytes()


def test_threads_from_environment(synth_dir, tmp_path, monkeypatch):
    monkeypatch.setenv("BPNMF_THREADS", "2")
    assert _fit(synth_dir / "data.json", tmp_path / "env", "--iters", "3") == 0
    monkeypatch.setenv("BPNMF_THREADS", "many")
    assert _fit(synth_dir / "data.json", tmp_path / "bad", "--iters", "3") == 1


def test_config_file_precedence(synth_dir, tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"K": 4, "iters": 2, "seed": 9}))
    assert main(["fit", "--data", str(synth_dir / "data.json"), "--out", str(tmp_path / "f"),
                 "--config", str(cfg), "--K", "5"]) == 0
    ck = checkpoint.load(tmp_path / "f" / "checkpoint.json")
    assert ck.hyperparams.K == 5 and ck.iteration == 2 and ck.seed == 9


def test_gibbs_fit_and_diag(synth_dir, tmp_path):
    assert _fit(synth_dir / "data.json", tmp_path / "g", "--algorithm", "gibbs", "--burn-in", "5") == 0
    ck = checkpoint.load(tmp_path / "g" / "checkpoint.json")
    assert ck.kind == "gibbs" and ck.iteration == 6
    assert main(["diag", "--model", str(tmp_path / "g" / "checkpoint.json"), "--out", str(tmp_path / "d")]) == 0
    rows = list(csv.reader(open(tmp_path / "d" / "pi.csv")))
    assert len(rows) == 1 + 6
    assert np.loadtxt(tmp_path / "d" / "components.csv", delimiter=",", skiprows=1).shape == (8, 6)
    assert np.loadtxt(tmp_path / "d" / "activations.csv", delimiter=",", skiprows=1).shape == (6, 30)


@pytest.mark.parametrize("argv,code", [
    (["fit", "--data", "missing.json", "--out", "o"], "file-not-found"),
    (["fit", "--data", "DATA", "--out", "o", "--algorithm", "em"], "invalid-algorithm"),
    (["fit", "--data", "DATA", "--out", "o", "--K", "1"], "truncation-too-small"),
    (["fit", "--data", "DATA", "--out", "o", "--a", "0"], "nonpositive-hyperparameter"),
    (["diag", "--model", "DATA", "--out", "o"], "format-mismatch"),
])
def test_errors_are_one_line(argv, code, synth_dir, tmp_path, capsys, monkeypatch):
    monkeypatch.chdir(tmp_path)
    argv = [str(synth_dir / "data.json") if a == "DATA" else a for a in argv]
    assert main(argv) == 1
    err = capsys.readouterr().err.strip()
    assert err.count("\n") == 0
    assert err.startswith(f"bpnmf: error: code={code}:")


def test_usage_error_exit_code():
    with pytest.raises(SystemExit) as exc:
        main(["fit"])
    assert exc.value.code == 2


@pytest.fixture(scope="module")
def audio_dir(tmp_path_factory):
    root = tmp_path_factory.mktemp("audio")
    refs = harmonic_sources(1, duration=1.5)
    (root / "refs").mkdir()
    for j, s in enumerate(refs):
        write_wav(root / "refs" / f"r{j}.wav", s)
    write_wav(root / "mix.wav", refs.sum(axis=0))
    assert main(["fit", "--data", str(root / "mix.wav"), "--out", str(root / "fit"), "--K", "10",
                 "--iters", "10", "--seed", "0", "--fft-size", "512"]) == 0
    return root


def test_separate_and_eval(audio_dir, tmp_path):
    refs = ",".join(str(audio_dir / "refs" / f"r{j}.wav") for j in range(3))
    assert main(["separate", "--mix", str(audio_dir / "mix.wav"), "--model",
                 str(audio_dir / "fit" / "checkpoint.json"), "--refs", refs, "--out", str(tmp_path / "est")]) == 0
    assert sorted(p.name for p in (tmp_path / "est").glob("*.wav")) == ["r0.wav", "r1.wav", "r2.wav"]
    assert main(["eval", "--est", str(tmp_path / "est"), "--refs", str(audio_dir / "refs")]) == 0
    rows = read_scores(tmp_path / "est" / "scores.csv")
    assert [r["source"] for r in rows] == ["r0", "r1", "r2", "mean", "stderr"]


def test_eval_of_references_hits_cap(audio_dir, tmp_path):
    out = tmp_path / "s.csv"
    assert main(["eval", "--est", str(audio_dir / "refs"), "--refs", str(audio_dir / "refs"),
                 "--out", str(out)]) == 0
    assert out.read_text().startswith("# ")
    for row in read_scores(out)[:3]:
        assert row["SDR"] == row["SIR"] == row["SAR"] == DB_CAP


def test_separate_rejects_mismatched_model(audio_dir, synth_dir, tmp_path):
    assert _fit(synth_dir / "data.json", tmp_path / "m", "--iters", "2") == 0
    assert main(["separate", "--mix", str(audio_dir / "mix.wav"), "--model", str(tmp_path / "m" / "checkpoint.json"),
                 "--refs", str(audio_dir / "refs" / "r0.wav"), "--out", str(tmp_path / "e")]) == 1
