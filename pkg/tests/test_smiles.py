import pytest
from hypothesis import given, settings, strategies as st

from modof.chem import (KekulizeError, SmilesError, UnbalancedError, UnsupportedElementError, WriteError,
                        canonical_smiles, parse_smiles, write_smiles)
from modof.chem.molecule import AROMATIC, Atom, Bond, Molecule

from conftest import read_smiles
from oracles import isomorphic

CORPUS = read_smiles("corpus200.smi")


def test_single_carbon():
    m = parse_smiles("C")
    assert len(m.atoms) == 1 and not m.bonds
    assert m.hydrogens(0) == 4
    assert write_smiles(m) == "C"


def test_benzene():
    m = parse_smiles("c1ccccc1")
    assert len(m.atoms) == 6 and all(a.aromatic for a in m.atoms)
    assert len(m.bonds) == 6 and all(b.order == AROMATIC for b in m.bonds)
    assert len(m.rings) == 1


def test_atom_map_on_aromatic_carbon():
    m = parse_smiles("CCSc1cccc[c:1]1")
    assert len(m.atoms) == 9
    mapped = [a for a in m.atoms if a.atom_map is not None]
    assert len(mapped) == 1
    assert mapped[0].atom_map == 1 and mapped[0].element == "C" and mapped[0].aromatic


def test_bracket_charge_and_hydrogens():
    m = parse_smiles("[NH3+]C")
    assert m.atoms[0].charge == 1 and m.hydrogens(0) == 3
    assert m.hydrogens(1) == 3


def test_stereo_and_isotopes_discarded():
    a = parse_smiles("F/C=C/F")
    b = parse_smiles("FC=CF")
    assert isomorphic(a, b)
    assert isomorphic(parse_smiles("N[C@@H](C)C(=O)O"), parse_smiles("NC(C)C(=O)O"))
    assert isomorphic(parse_smiles("[13CH4]"), parse_smiles("C"))


def test_percent_ring_closure():
    assert isomorphic(parse_smiles("C%10CCCCC%10"), parse_smiles("C1CCCCC1"))


@pytest.mark.parametrize("text, exc, offset", [
    ("C1CC", UnbalancedError, None),
    ("C(C", UnbalancedError, None),
    ("CC)", UnbalancedError, 2),
    ("C[Xe]", UnsupportedElementError, None),
    ("c1cccc1", KekulizeError, None),
])
def test_parse_errors_are_typed(text, exc, offset):
    with pytest.raises(exc) as info:
        parse_smiles(text)
    assert isinstance(info.value, SmilesError)
    assert 0 <= info.value.offset <= len(text)
    if offset is not None:
        assert info.value.offset == offset


def test_error_classes_are_distinct():
    kinds = {UnbalancedError, UnsupportedElementError, KekulizeError}
    assert len(kinds) == 3 and not any(issubclass(a, b) for a in kinds for b in kinds if a is not b)


def test_write_rejects_open_valence():
    m = Molecule([Atom("C", explicit_h=0)] + [Atom("C") for _ in range(5)],
                 [Bond(0, k) for k in range(1, 6)])
    with pytest.raises(WriteError):
        write_smiles(m)


def test_benzene_string_independent_of_order():
    m = parse_smiles("c1ccccc1")
    outs = {write_smiles(m.permuted(p)) for p in ([0, 1, 2, 3, 4, 5], [3, 1, 5, 0, 2, 4], [5, 4, 3, 2, 1, 0])}
    assert len(outs) == 1


def test_corpus_round_trip_isomorphic():
    ok = 0
    for s in CORPUS[:100]:
        m = parse_smiles(s)
        ok += isomorphic(m, parse_smiles(write_smiles(m)))
    assert ok == 100


@settings(max_examples=60, deadline=None)
@given(st.sampled_from(CORPUS), st.randoms(use_true_random=False))
def test_canonical_under_permutation(smi, rnd):
    m = parse_smiles(smi)
    perm = list(range(len(m.atoms)))
    rnd.shuffle(perm)
    p = m.permuted(perm)
    assert write_smiles(p) == write_smiles(m)
    assert isomorphic(p, parse_smiles(write_smiles(p)))


def test_canonical_smiles_accepts_text_or_molecule():
    assert canonical_smiles("OCC") == canonical_smiles(parse_smiles("CCO"))
