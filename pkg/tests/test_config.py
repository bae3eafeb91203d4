from dataclasses import dataclass

import pytest

from modof.config import InputError, dump_kv, header, parse_kv, read_corpus, resolve
from modof.net import HyperParams
from modof.pipe import PipeConfig


@dataclass
class Knobs:
    rate: float = 0.5
    steps: int = 3
    name: str = "x"
    flag: bool = False


def test_parse_kv_ignores_comments_and_blanks():
    text = "# top\n\nrate = 0.25  # inline\n  steps=7\n"
    assert parse_kv(text) == {"rate": "0.25", "steps": "7"}


@pytest.mark.parametrize("text", ["rate 0.2\n", "rate = 1\nrate = 2\n"])
def test_parse_kv_rejects(text):
    with pytest.raises(InputError, match=":[12]:"):
        parse_kv(text)


def test_resolve_precedence(tmp_path):
    cfg = tmp_path / "k.cfg"
    cfg.write_text("rate = 0.1\nsteps = 9\nflag = yes\n")
    assert resolve(Knobs) == Knobs()
    assert resolve(Knobs, cfg) == Knobs(rate=0.1, steps=9, flag=True)
    got = resolve(Knobs, cfg, {"steps": 2, "name": None})
    assert got == Knobs(rate=0.1, steps=2, name="x", flag=True)
    assert resolve(Knobs, None, {"name": "y"}, base=Knobs(rate=3.0)) == Knobs(rate=3.0, name="y")


@pytest.mark.parametrize("body,match", [("speed = 1\n", "unknown key"), ("steps = many\n", "as int"),
                                        ("flag = maybe\n", "as bool")])
def test_resolve_rejects_bad_files(tmp_path, body, match):
    cfg = tmp_path / "k.cfg"
    cfg.write_text(body)
    with pytest.raises(InputError, match=match):
        resolve(Knobs, cfg)


def test_resolve_reports_invalid_values_and_missing_files(tmp_path):
    cfg = tmp_path / "p.cfg"
    cfg.write_text("m = 9\nK = 4\n")
    with pytest.raises(InputError, match="cannot exceed"):
        resolve(PipeConfig, cfg)
    with pytest.raises(InputError, match="cannot read"):
        resolve(Knobs, tmp_path / "missing.cfg")


def test_real_configs_round_trip(tmp_path):
    hp = HyperParams(hidden_dim=8, lr=0.01)
    cfg = tmp_path / "hp.cfg"
    cfg.write_text("\n".join(line.replace("'", "") for line in dump_kv(hp)) + "\n")
    assert resolve(HyperParams, cfg) == hp


def test_header_lines():
    lines = header("score", seed=3, settings=["a = 1"])
    assert lines[0].startswith("modof ") and lines[0].endswith(" score")
    assert lines[1:] == ["seed = 3", "a = 1"]


def test_read_corpus(tmp_path):
    f = tmp_path / "c.smi"
    f.write_text("# comment\nCCO ethanol\n\n  c1ccccc1\n")
    rows = read_corpus(f)
    assert [(n, s) for n, s, _ in rows] == [(2, "CCO"), (4, "c1ccccc1")]
    assert len(rows[1][2].atoms) == 6
    f.write_text("CCO\nC1CC\n")
    with pytest.raises(InputError, match=":2:"):
        read_corpus(f)
    with pytest.raises(InputError):
        read_corpus(tmp_path / "nope.smi")
