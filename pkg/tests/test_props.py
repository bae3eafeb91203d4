import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from modof.chem import Molecule, parse_smiles
from modof.props import (AtomTypeError, Fingerprint, PlogpConfig, SAScorer, atom_environments, calibrate,
                         crippen_logp, cycle_score, fnv1a64, get_scorer, morgan_fp, plogp, plogp_components,
                         sa_score, tanimoto)
from modof.props import crippen

from conftest import DATA, read_smiles

CORPUS = read_smiles("corpus200.smi")


def _fnv_bytes(data: bytes) -> int:
    h = 0xCBF29CE484222325
    for byte in data:
        h = ((h ^ byte) * 0x100000001B3) % 2**64
    return h


def test_fnv_matches_byte_level_reference():
    assert fnv1a64([]) == 0xCBF29CE484222325
    assert _fnv_bytes(b"a") == 0xAF63DC4C8601EC8C
    vals = [6, 0, -3, 2**40, -(2**62)]
    ref = _fnv_bytes(b"".join(v.to_bytes(8, "little", signed=True) for v in vals))
    assert fnv1a64(vals) == ref


@pytest.mark.parametrize("nbits", [64, 256, 1024, 2048, 4096])
def test_methane_sets_one_bit(nbits):
    assert morgan_fp(parse_smiles("C"), 2, nbits).popcount() == 1


def test_width_must_be_power_of_two():
    with pytest.raises(ValueError):
        morgan_fp(parse_smiles("C"), 2, 1000)


def test_benzene_fp_independent_of_order():
    m = parse_smiles("c1ccccc1")
    fps = {morgan_fp(m.permuted(p)) for p in ([0, 1, 2, 3, 4, 5], [2, 4, 0, 1, 5, 3])}
    assert len(fps) == 1


def test_ethanol_vs_dimethyl_ether_environments():
    # ethanol: 3 atom classes at layer 0, three new bond sets at layer 1, none new at layer 2
    # dimethyl ether: 2 atom classes, the two methyl environments hash alike at layer 1
    eth = atom_environments(parse_smiles("CCO"))
    ether = atom_environments(parse_smiles("COC"))
    assert len(eth) == 6 and sum(eth.values()) == 6
    assert len(ether) == 4 and sum(ether.values()) == 6
    assert morgan_fp(parse_smiles("CCO")) != morgan_fp(parse_smiles("COC"))


def test_tanimoto_examples():
    a = Fingerprint.from_bits({1, 2, 3}, 64)
    b = Fingerprint.from_bits({2, 3, 4}, 64)
    assert tanimoto(a, b) == 0.5
    assert tanimoto(a, a) == 1.0
    assert tanimoto(a, Fingerprint.from_bits({10, 11}, 64)) == 0.0
    empty = Fingerprint.from_bits(set(), 64)
    assert tanimoto(empty, empty) == 1.0
    with pytest.raises(ValueError):
        tanimoto(a, Fingerprint.from_bits({1}, 128))


@settings(max_examples=100, deadline=None)
@given(st.sets(st.integers(0, 255)), st.sets(st.integers(0, 255)))
def test_tanimoto_against_set_formula(x, y):
    a, b = Fingerprint.from_bits(x, 256), Fingerprint.from_bits(y, 256)
    expect = 1.0 if not (x | y) else len(x & y) / len(x | y)
    assert tanimoto(a, b) == pytest.approx(expect, abs=0)
    assert tanimoto(a, b) == tanimoto(b, a)
    assert 0.0 <= tanimoto(a, b) <= 1.0
    assert sorted(a.on_bits()) == sorted(x)


def test_crippen_reference_values():
    assert crippen_logp(Molecule([], [])) == 0.0
    assert crippen_logp(parse_smiles("C")) == pytest.approx(0.1441 + 4 * 0.1230, abs=1e-12)
    # published reference values of the atom-contribution method
    for smi, ref in [("c1ccccc1", 1.6866), ("CCO", -0.0014), ("Oc1ccccc1", 1.3922), ("c1ccncc1", 1.0816),
                     ("CC(=O)O", 0.0909), ("C1CCCCC1", 2.3406)]:
        assert crippen_logp(parse_smiles(smi)) == pytest.approx(ref, abs=1e-4), smi


def test_untyped_atom_raises(monkeypatch):
    only_methane = tuple(r for r in crippen.atom_types() if r[0] in ("C1", "H1"))
    monkeypatch.setattr(crippen, "atom_types", lambda: only_methane)
    assert crippen_logp(parse_smiles("C")) == pytest.approx(0.6361)
    with pytest.raises(AtomTypeError, match="heavy atom 0"):
        crippen_logp(parse_smiles("N"))


def test_sa_methane_easy_and_macrocycle_harder():
    sa = SAScorer()
    assert sa.complexity_only
    assert sa.score(parse_smiles("C")) <= 2.0
    assert sa.score(parse_smiles("C1CCCCCCCCCCC1")) > sa.score(parse_smiles("C1CCCCC1"))


def test_sa_table_file(tmp_path):
    m = parse_smiles("CCO")
    envs = atom_environments(m)
    p = tmp_path / "frag.tsv"
    p.write_text("#default\t-1.5\n" + "".join(f"{h}\t1.0\n" for h in list(envs)[:3]))
    sa = SAScorer.from_file(p)
    assert not sa.complexity_only and sa.default == -1.5
    bad = tmp_path / "bad.tsv"
    bad.write_text("12345\n")
    with pytest.raises(ValueError):
        SAScorer.from_file(bad)
    # better-scored fragments make the molecule easier
    assert sa.score(m) < SAScorer(dict.fromkeys(envs, -3.0), -3.0).score(m)


def test_cycle_score_examples():
    assert cycle_score(parse_smiles("c1ccccc1")) == 0
    assert cycle_score(parse_smiles("CCCCCC")) == 0
    assert cycle_score(parse_smiles("C1CCCCCCC1")) == -2
    assert cycle_score(parse_smiles("C1CC1")) == 0


def test_plogp_unit_constants_is_raw_sum():
    m = parse_smiles("CC(C)Cc1ccc(C)cc1")
    logp, neg_sa, cyc = plogp_components(m)
    assert plogp(m, PlogpConfig()) == pytest.approx(logp + neg_sa + cyc, abs=1e-12)
    assert neg_sa == -sa_score(m)


def test_plogp_monotone_in_components():
    m = parse_smiles("CCOC(=O)c1ccccc1")
    base = PlogpConfig(1.0, 2.0, -1.0, 0.5, 0.0, 1.0)
    shifted = PlogpConfig(0.5, 2.0, -1.0, 0.5, 0.0, 1.0)  # lower logp mean -> higher z
    assert plogp(m, shifted) > plogp(m, base)


def test_config_requires_positive_std():
    with pytest.raises(ValueError):
        PlogpConfig(logp_std=0.0)


def test_config_text_round_trip():
    cfg = PlogpConfig(1.25, 0.5, -2.0, 0.75, -0.1, 0.3, 30)
    assert PlogpConfig.loads(cfg.dumps()) == cfg
    with pytest.raises(ValueError):
        PlogpConfig.loads("nonsense = 1\n")


def test_calibration_zero_mean_on_its_corpus():
    mols = [parse_smiles(s) for s in CORPUS]
    cfg, warnings = calibrate(mols)
    rows = np.array([plogp_components(m) for m in mols])
    z = np.column_stack([(rows[:, 0] - cfg.logp_mean) / cfg.logp_std,
                         (rows[:, 1] - cfg.sa_mean) / cfg.sa_std,
                         (rows[:, 2] - cfg.cycle_mean) / cfg.cycle_std])
    assert np.allclose(z.mean(axis=0), 0.0, atol=1e-12)
    assert np.allclose(z[:, :2].std(axis=0), 1.0, atol=1e-12)
    # the fixture corpus has no ring above six atoms
    assert any("cycle" in w for w in warnings)


def test_single_molecule_calibration_falls_back():
    cfg, warnings = calibrate([parse_smiles("CCO")])
    assert cfg.logp_std == cfg.sa_std == cfg.cycle_std == 1.0
    assert len(warnings) == 3
    with pytest.raises(ValueError):
        calibrate([])


def _ranks(x):
    order = np.argsort(x, kind="stable")
    r = np.empty(len(x))
    r[order] = np.arange(len(x))
    return r


def test_size_correlates_with_plogp():
    cfg = PlogpConfig.load(DATA / "plogp.cfg")
    mols = [parse_smiles(s) for s in CORPUS]
    size = np.array([len(m.atoms) for m in mols], dtype=float)
    score = np.array([plogp(m, cfg) for m in mols])
    rho = np.corrcoef(_ranks(size), _ranks(score))[0, 1]
    assert rho > 0


def test_scorers_by_name():
    m = parse_smiles("C1CCCCCCC1")
    assert get_scorer("cycle").score(m) == -2
    assert get_scorer("logp").score(m) == crippen_logp(m)
    assert get_scorer("sa").score(m) == sa_score(m)
    with pytest.raises(ValueError):
        get_scorer("qed")


def _golden(name):
    out = {}
    for line in (DATA / name).read_text().splitlines():
        if line.startswith("#") or line.startswith("smiles\t"):
            continue
        smi, val = line.split("\t")
        out[smi] = float(val)
    return out


@pytest.mark.parametrize("prop", ["logp", "sa", "cycle", "plogp"])
def test_golden_scores_recomputed_from_components(prop):
    cfg = PlogpConfig.load(DATA / "plogp.cfg")
    gold = _golden(f"golden_{prop}.tsv")
    assert len(gold) == 100
    for smi, val in gold.items():
        m = parse_smiles(smi)
        logp, neg_sa, cyc = plogp_components(m)
        expect = {"logp": logp, "sa": -neg_sa, "cycle": cyc,
                  "plogp": (logp - cfg.logp_mean) / cfg.logp_std + (neg_sa - cfg.sa_mean) / cfg.sa_std
                  + (cyc - cfg.cycle_mean) / cfg.cycle_std}[prop]
        assert val == pytest.approx(expect, abs=5e-7)


@settings(max_examples=40, deadline=None)
@given(st.sampled_from(CORPUS), st.randoms(use_true_random=False))
def test_properties_permutation_invariant(smi, rnd):
    m = parse_smiles(smi)
    perm = list(range(len(m.atoms)))
    rnd.shuffle(perm)
    p = m.permuted(perm)
    assert morgan_fp(p) == morgan_fp(m)
    assert math.isclose(crippen_logp(p), crippen_logp(m), abs_tol=1e-12)
    assert sa_score(p) == sa_score(m)
    assert cycle_score(m) <= 0
