import subprocess
import sys

import numpy as np
import pytest

from spectral_mom.cli import main
from spectral_mom.corpus import read_corpus
from spectral_mom.model import load_model


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


@pytest.fixture(scope="module")
def synth_files(tmp_path_factory):
    d = tmp_path_factory.mktemp("cli")
    data, truth = d / "train.txt", d / "truth.smom"
    code = main([
        "synth", "--k", "5", "--words", "100", "--labels", "50", "--n-docs", "50000",
        "--concentration", "0.1", "--prior-concentration", "10", "--seed", "1", "--truth-seed", "0",
        "--out", str(data), "--truth", str(truth),
    ])
    assert code == 0
    return d, data, truth


@pytest.fixture(scope="module")
def trained(synth_files):
    d, data, _ = synth_files
    model = d / "model.smom"
    assert main(["train", "--data", str(data), "--model", str(model), "--k", "5"]) == 0
    return model


def test_synth_writes_corpus_and_truth(synth_files):
    _, data, truth = synth_files
    corpus, labels = read_corpus(data)
    assert (corpus.n_docs, corpus.n_words, labels.n_labels) == (50000, 100, 50)
    t = load_model(truth)
    assert t.O.shape == (100, 5) and np.array_equal(t.pi, t.pi_raw)


def test_train_summary(capsys, synth_files, tmp_path):
    _, data, _ = synth_files
    code, out, err = run(capsys, "train", "--data", data, "--model", tmp_path / "m", "--k", "5")
    assert code == 0
    fields = dict(line.split(None, 1) for line in out.splitlines())
    assert fields["passes"] == "3"
    assert {"sigma_1", "sigma_K", "lambda_min", "lambda_max"} <= set(fields)
    assert "pass2_third" in err and "time total" in err


def test_train_then_eval_auc(capsys, synth_files, trained):
    _, data, _ = synth_files
    code, out, _ = run(capsys, "eval", "--data", data, "--model", trained)
    assert code == 0
    report = dict(line.split() for line in out.splitlines())
    assert float(report["macro_auc"]) > 0.9
    assert report["n_skipped"] == "0"


def test_eval_csv(capsys, synth_files, trained, tmp_path):
    _, data, _ = synth_files
    path = tmp_path / "r.csv"
    assert run(capsys, "eval", "--data", data, "--model", trained, "--at", "1,2", "--csv", path)[0] == 0
    assert path.read_text().splitlines()[0] == "metric,value"


def test_predict_format(capsys, synth_files, trained):
    _, data, _ = synth_files
    code, out, _ = run(capsys, "predict", "--data", data, "--model", trained, "--top", "3")
    assert code == 0
    lines = out.splitlines()
    assert len(lines) == 50000
    parts = lines[7].split("\t")
    assert parts[0] == "7" and len(parts) == 4
    scores = [float(p.split(":")[1]) for p in parts[1:]]
    assert scores == sorted(scores, reverse=True)
    full = run(capsys, "predict", "--data", data, "--model", trained)[1].splitlines()[0].split("\t")
    assert len(full) == 51
    assert sum(float(p.split(":")[1]) for p in full[1:]) == pytest.approx(1.0, abs=1e-4)


def test_byte_identical_reruns(capsys, synth_files, tmp_path):
    _, data, _ = synth_files
    outs = []
    for i in range(2):
        m, p = tmp_path / f"m{i}", tmp_path / f"p{i}.tsv"
        assert run(capsys, "train", "--data", data, "--model", m, "--k", "5", "--threads", "1")[0] == 0
        assert run(capsys, "predict", "--data", data, "--model", m, "--out", p)[0] == 0
        outs.append((m.read_bytes(), p.read_bytes()))
    assert outs[0] == outs[1]


def test_bounds_output(capsys, synth_files, trained):
    _, data, _ = synth_files
    code, out, _ = run(capsys, "bounds", "--data", data, "--k", "5", "--delta", "0.5", "--model", trained)
    assert code == 0
    fields = dict(line.split()[:2] for line in out.splitlines())
    assert fields["eps1"] == "1.58871"
    for key in ("mu_bound", "gamma_bound", "pi_bound", "n1", "n2", "n3"):
        assert float(fields[key]) >= 0
    assert out.count("(up to constants)") == 2


def test_single_topic_roundtrip(capsys, tmp_path):
    data, truth, model = tmp_path / "c.txt", tmp_path / "t", tmp_path / "m"
    assert run(capsys, "synth", "--k", "1", "--n-docs", "100000", "--seed", "3", "--out", data, "--truth", truth)[0] == 0
    assert run(capsys, "train", "--data", data, "--model", model, "--k", "1")[0] == 0
    assert np.abs(load_model(model).O[:, 0] - load_model(truth).O[:, 0]).sum() <= 0.05


def test_experiment_command(capsys, tmp_path):
    truth = tmp_path / "t"
    run(capsys, "synth", "--k", "2", "--words", "20", "--labels", "10", "--n-docs", "10",
        "--prior-concentration", "10", "--out", tmp_path / "c", "--truth", truth)
    code, out, _ = run(capsys, "experiment", "--truth", truth, "--grid", "5000,20000", "--trials", "2")
    assert code == 0
    lines = out.splitlines()
    assert lines[0] == "N,mu_err,gamma_err,pi_err" and len(lines) == 3


# ---- exit codes


@pytest.mark.parametrize("argv", [
    ["train", "--data", "x", "--model", "y", "--k", "0"],
    ["train", "--data", "x", "--model", "y"],
    ["bounds", "--data", "x", "--k", "-1"],
    ["predict", "--data", "x", "--model", "y", "--top", "zero"],
    ["nonsense"],
])
def test_usage_errors(capsys, argv):
    assert run(capsys, *argv)[0] == 2


def test_k_exceeds_vocabulary(capsys, tmp_path):
    data = tmp_path / "c.txt"
    data.write_text("2 2 1\n0 0:1 1:1\n0 0:2\n")
    code, _, err = run(capsys, "train", "--data", data, "--model", tmp_path / "m", "--k", "3")
    assert code == 2 and "vocabulary" in err


def test_data_errors(capsys, tmp_path, trained):
    code, _, err = run(capsys, "train", "--data", tmp_path / "missing", "--model", tmp_path / "m", "--k", "2")
    assert code == 3 and "[read]" in err
    bad = tmp_path / "bad.txt"
    bad.write_text("2 3 1\n0 0:1\n0 9:1\n")
    code, _, err = run(capsys, "train", "--data", bad, "--model", tmp_path / "m", "--k", "2")
    assert code == 3 and "line 3" in err
    junk = tmp_path / "junk.smom"
    junk.write_bytes(b"nope")
    code, _, err = run(capsys, "eval", "--data", bad, "--model", junk)
    assert code == 3 and "bad magic" in err
    small = tmp_path / "small.txt"
    small.write_text("1 3 1\n0 0:1\n")
    code, _, err = run(capsys, "predict", "--data", small, "--model", trained)
    assert code == 3 and "words" in err


def test_numerical_error_exit(capsys, tmp_path):
    data = tmp_path / "c.txt"
    data.write_text("3 3 1\n0 0:2\n0 0:3\n0 0:2\n")
    code, _, err = run(capsys, "train", "--data", data, "--model", tmp_path / "m", "--k", "2")
    assert code == 4 and "[train]" in err and "smaller k" in err


def test_small_n_warning(capsys, tmp_path):
    data = tmp_path / "c.txt"
    data.write_text("2 3 2\n0 0:2 1:1\n1 1:2 2:1\n")
    _, _, err = run(capsys, "train", "--data", data, "--model", tmp_path / "m", "--k", "2")
    assert "warning: N=2 < K^2=4" in err


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "spectral_mom", "--help"], capture_output=True, text=True)
    assert res.returncode == 0 and "train" in res.stdout
