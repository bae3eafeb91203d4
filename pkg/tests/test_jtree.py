import networkx as nx
import pytest
from hypothesis import given, settings, strategies as st

from modof.chem import parse_smiles
from modof.chem.jtree import NodeVocabulary, VocabularyMiss, junction_tree, molecule_descriptors

from conftest import read_smiles

CORPUS = read_smiles("corpus200.smi")
EXTRA = ["C1CC2CCC1C2", "C1CC2CCCC3CCCC(C1)C23", "CC(C)(C)C", "C1CCC2(CC1)CCCC2", "c1ccc2ccccc2c1"]


def shape(smi):
    t = junction_tree(parse_smiles(smi))
    return [n.kind for n in t.nodes], t.edges


def test_ethane_single_bond_node():
    assert shape("CC") == (["bond"], [])


def test_propane_two_bond_nodes():
    kinds, edges = shape("CCC")
    assert kinds == ["bond", "bond"] and len(edges) == 1


def test_benzene_one_ring_node():
    assert shape("c1ccccc1") == (["ring"], [])


def test_bridged_rings_merge():
    kinds, edges = shape("C1CC2CCC1C2")
    assert kinds == ["ring"] and edges == []


def test_three_mutually_fused_rings_become_a_tree():
    t = junction_tree(parse_smiles("C1CC2CCCC3CCCC(C1)C23"))
    assert len(t.nodes) == 3 and len(t.edges) == 2
    assert nx.is_tree(nx.Graph(t.edges))


def test_vocabulary_miss_names_descriptor():
    vocab = NodeVocabulary.from_molecules([parse_smiles("CC")])
    with pytest.raises(VocabularyMiss) as info:
        junction_tree(parse_smiles("CO"), vocab)
    assert "CO" in str(info.value)


def test_vocabulary_is_order_independent_and_round_trips(tmp_path):
    mols = [parse_smiles(s) for s in CORPUS[:40]]
    a = NodeVocabulary.from_molecules(mols)
    b = NodeVocabulary.from_molecules(list(reversed(mols)))
    assert a.entries == b.entries and a.digest() == b.digest()
    a.save(tmp_path / "v.txt")
    c = NodeVocabulary.load(tmp_path / "v.txt")
    assert c.entries == a.entries
    for e in a.entries:
        assert c.lookup(e) == a.entries.index(e)


def test_descriptor_drops_stereo_keeps_charge():
    assert molecule_descriptors(parse_smiles("F/C=C/F")) == molecule_descriptors(parse_smiles("FC=CF"))
    assert any("+" in d for d in molecule_descriptors(parse_smiles("C[NH3+]")))


@settings(max_examples=80, deadline=None)
@given(st.sampled_from(CORPUS + EXTRA))
def test_tree_invariants(smi):
    m = parse_smiles(smi)
    t = junction_tree(m)
    # coverage
    assert set().union(*(set(n.atoms) for n in t.nodes)) == set(range(len(m.atoms)))
    # every bond lies in a node; a non-ring bond in exactly one
    ring_bond = m.ring_bond_flags
    for k, b in enumerate(m.bonds):
        owners = [u for u, n in enumerate(t.nodes) if b.i in n.atoms and b.j in n.atoms]
        assert owners
        if not ring_bond[k]:
            assert len(owners) == 1
    # edges join nodes that share atoms, and form a forest
    for u, v in t.edges:
        assert set(t.nodes[u].atoms) & set(t.nodes[v].atoms)
    g = nx.Graph()
    g.add_nodes_from(range(len(t.nodes)))
    g.add_edges_from(t.edges)
    assert nx.is_forest(g)
    if not m.rings:
        assert len(t.edges) == len(t.nodes) - 1
    # connected molecule gives one tree
    assert nx.number_connected_components(g) == len(m.components())


@settings(max_examples=40, deadline=None)
@given(st.sampled_from(CORPUS), st.randoms(use_true_random=False))
def test_type_multiset_permutation_invariant(smi, rnd):
    m = parse_smiles(smi)
    vocab = NodeVocabulary.from_molecules([m])
    perm = list(range(len(m.atoms)))
    rnd.shuffle(perm)
    a = sorted(junction_tree(m, vocab).type_ids())
    b = sorted(junction_tree(m.permuted(perm), vocab).type_ids())
    assert a == b
