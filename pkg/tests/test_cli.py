import subprocess
import sys

import pytest

from modof.cli import main

from conftest import DATA

HP = "hidden_dim = 16\nz_dim = 4\nt_a = 2\nt_n = 2\nbatch = 8\nlr = 0.003\nepochs = 2\n"


def run(*args):
    return main([str(a) for a in args])


def body(path):
    return [line for line in path.read_text().splitlines() if not line.startswith("#")]


@pytest.fixture(scope="module")
def work(tmp_path_factory):
    d = tmp_path_factory.mktemp("cli")
    (d / "hp.cfg").write_text(HP)
    assert run("pairs", DATA / "corpus200.smi", "--sim", 0.5, "--prop", "logp", "-o", d / "pairs.tsv",
               "--vocab", d / "vocab.txt", "--hist", d / "hist.tsv") == 0
    assert run("train", d / "pairs.tsv", "--config", d / "hp.cfg", "-o", d / "m.ckpt", "--log", d / "train.log") == 0
    return d


@pytest.mark.parametrize("prop", ["plogp", "logp", "sa", "cycle"])
def test_score_matches_golden_files(tmp_path, prop):
    extra = ["--calib", DATA / "plogp.cfg"] if prop == "plogp" else []
    out = tmp_path / "s.tsv"
    assert run("score", DATA / "corpus100.smi", "--prop", prop, "-o", out, *extra) == 0
    assert body(out) == body(DATA / f"golden_{prop}.tsv")
    head = [line for line in out.read_text().splitlines() if line.startswith("#")]
    assert any("prop = " + prop in line for line in head)


def test_score_to_stdout(capsys):
    assert run("score", DATA / "corpus100.smi", "--prop", "logp") == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0].startswith("# modof")
    assert len([x for x in lines if not x.startswith("#")]) == 101


def test_calibration_is_reproducible(tmp_path):
    a, b = tmp_path / "a.cfg", tmp_path / "b.cfg"
    assert run("calibrate", DATA / "corpus200.smi", "-o", a) == 0
    assert run("calibrate", DATA / "corpus200.smi", "-o", b) == 0
    assert a.read_bytes() == b.read_bytes()
    assert body(a) == body(DATA / "plogp.cfg")


def test_pairs_outputs(work):
    head = [line for line in (work / "pairs.tsv").read_text().splitlines() if line.startswith("#")]
    assert any(line.startswith("# kept") or "kept" in line for line in head)
    rows = body(work / "pairs.tsv")
    assert rows[0].split("\t")[:2] == ["mx_smiles", "my_smiles"] and len(rows) > 10
    hist = body(work / "hist.tsv")
    assert hist[0] == "sites\tpairs\tpercent"
    assert (work / "vocab.txt").exists()


def test_training_log_and_resume(work, tmp_path):
    log = body(work / "train.log")
    assert log[0].split("\t")[:4] == ["epoch", "batch", "beta", "loss"]
    (tmp_path / "hp.cfg").write_text(HP.replace("epochs = 2", "epochs = 1"))
    ck = tmp_path / "m.ckpt"
    assert run("train", work / "pairs.tsv", "--config", tmp_path / "hp.cfg", "-o", ck, "--log", tmp_path / "t.log") == 0
    assert run("train", work / "pairs.tsv", "--resume", "--epochs", 2, "-o", ck, "--log", tmp_path / "t.log") == 0
    assert ck.read_bytes() == (work / "m.ckpt").read_bytes()
    assert (tmp_path / "t.log").read_text() == (work / "train.log").read_text()
    # a conflicting setting on resume is refused
    assert run("train", work / "pairs.tsv", "--resume", "--lr", 0.5, "-o", ck) == 2


def test_optimize_is_reproducible_across_workers(work, tmp_path):
    corpus = tmp_path / "few.smi"
    corpus.write_text("\n".join((DATA / "corpus100.smi").read_text().splitlines()[:6]) + "\n")
    outs = []
    for threads in (1, 2, 1):
        out = tmp_path / f"o{len(outs)}.tsv"
        assert run("optimize", corpus, "--model", work / "m.ckpt", "--prop", "logp", "--k", 4, "--iters", 2,
                   "--seed", 7, "--threads", threads, "-o", out) == 0
        outs.append(out.read_bytes())
    assert outs[0] == outs[1] == outs[2]
    text = outs[0].decode()
    assert text.count("seed = 7") == 1
    rows = body(tmp_path / "o0.tsv")
    assert rows[0].split("\t") == ["input_smiles", "output_smiles", "score_before", "score_after", "sim",
                                   "iterations_used"]
    assert len(rows) == 7


def test_optimize_multi_and_reports(work, tmp_path):
    corpus = tmp_path / "few.smi"
    corpus.write_text("\n".join((DATA / "corpus100.smi").read_text().splitlines()[:4]) + "\n")
    out = tmp_path / "o.tsv"
    assert run("optimize", corpus, "--model", work / "m.ckpt", "--prop", "logp", "--k", 4, "--iters", 2, "--multi",
               "--m", 2, "--b", 2, "--trace", tmp_path / "tr.tsv", "--report", tmp_path / "rep.tsv", "-o", out) == 0
    rows = [r.split("\t") for r in body(out)[1:]]
    per_input = {}
    for r in rows:
        per_input[r[0]] = per_input.get(r[0], 0) + 1
    assert len(per_input) == 4 and all(1 <= n <= 2 for n in per_input.values())
    assert body(tmp_path / "tr.tsv")[0].startswith("input_index\titeration")
    assert body(tmp_path / "rep.tsv")[-1].startswith("all")


def test_default_beam_fits_small_k(work, tmp_path):
    corpus = tmp_path / "one.smi"
    corpus.write_text("CCOC(=O)c1ccccc1\n")
    assert run("optimize", corpus, "--model", work / "m.ckpt", "--prop", "logp", "--k", 3, "--multi",
               "--iters", 1, "-o", tmp_path / "o.tsv") == 0


def test_stats(work, tmp_path):
    out = tmp_path / "st.tsv"
    assert run("stats", work / "pairs.tsv", "--top", 5, "-o", out) == 0
    rows = body(out)
    assert rows[0] == "side\tfragment\tcount\tpercent"
    assert 0 < len(rows) - 1 <= 10
    empty = tmp_path / "empty.tsv"
    head = [line for line in (work / "pairs.tsv").read_text().splitlines() if not line.startswith("#")][0]
    empty.write_text(head + "\n")
    assert run("stats", empty, "-o", out) == 0
    assert body(out) == ["side\tfragment\tcount\tpercent"]


def test_input_errors_exit_2(tmp_path, capsys):
    bad = tmp_path / "bad.smi"
    bad.write_text("CCO\nC1CC\n")
    assert run("score", bad, "--prop", "logp") == 2
    assert ":2:" in capsys.readouterr().err
    assert run("score", tmp_path / "missing.smi") == 2
    assert run("train", tmp_path / "missing.tsv", "-o", tmp_path / "m.ckpt") == 2


def test_unknown_config_key_exits_2(work, tmp_path):
    cfg = tmp_path / "x.cfg"
    cfg.write_text("hidden = 3\n")
    assert run("train", work / "pairs.tsv", "--config", cfg, "-o", tmp_path / "m.ckpt") == 2


def test_model_errors_exit_3(work, tmp_path):
    other = tmp_path / "other.tsv"
    lines = (work / "pairs.tsv").read_text().splitlines()
    head = [x for x in lines if not x.startswith("#")]
    other.write_text("\n".join(head[:4]) + "\n")
    ck = tmp_path / "m.ckpt"
    ck.write_bytes((work / "m.ckpt").read_bytes())
    assert run("train", other, "--resume", "--epochs", 3, "-o", ck) == 3
    junk = tmp_path / "junk.ckpt"
    junk.write_bytes(b"not a checkpoint")
    assert run("optimize", DATA / "corpus100.smi", "--model", junk) == 3


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_numeric_failure_exits_4(work, tmp_path):
    cfg = tmp_path / "hp.cfg"
    cfg.write_text(HP.replace("lr = 0.003", "lr = 1e300"))
    assert run("train", work / "pairs.tsv", "--config", cfg, "-o", tmp_path / "m.ckpt") == 4


def test_console_script_help():
    out = subprocess.run([sys.executable, "-m", "modof.cli", "--help"], capture_output=True, text=True)
    assert out.returncode == 0
    for cmd in ("score", "calibrate", "pairs", "train", "optimize", "stats"):
        assert cmd in out.stdout
