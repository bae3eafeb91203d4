import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from modof.chem import parse_smiles, valence_check, write_smiles
from modof.chem.jtree import junction_tree
from modof.chem.surgery import (AttachError, IntermediateMol, SurgeryError, attach_node,
                                enumerate_attachment_candidates, remove_subtrees)
from modof.pairgen.fixtures import fixture_vocabulary

from conftest import read_smiles
from oracles import isomorphic

VOCAB = fixture_vocabulary([parse_smiles("C")])
CORPUS = read_smiles("corpus200.smi")
PARENTS = ["C", "CC", "CCO", "CC=O", "CN", "c1ccccc1", "Cc1ccccc1", "C1CCCCC1", "c1ccncc1", "CC(C)(C)C",
           "C1CCCC1", "c1ccsc1", "CC#N"]


def node_with(t, atoms):
    return next(u for u, n in enumerate(t.nodes) if set(n.atoms) == set(atoms))


def test_empty_removal_is_identity():
    m = parse_smiles("CC(=O)Nc1ccc(O)cc1")
    t = junction_tree(m, VOCAB)
    im = remove_subtrees(m, t, 0, set())
    assert isomorphic(im.mol, m)
    im.check_consistency()


def test_ethanol_drop_hydroxyl():
    m = parse_smiles("CCO")
    t = junction_tree(m, VOCAB)
    cc, co = node_with(t, (0, 1)), node_with(t, (1, 2))
    im = remove_subtrees(m, t, cc, {co})
    assert isomorphic(im.mol, parse_smiles("CC"))
    assert len(im.tree.nodes) == 1


def test_hydroxyl_removal_leaves_cyclobutane():
    m = parse_smiles("OC1CCC1")
    t = junction_tree(m)
    ring = next(u for u, n in enumerate(t.nodes) if n.kind == "ring")
    oh = 1 - ring
    im = remove_subtrees(m, t, ring, {oh})
    assert isomorphic(im.mol, parse_smiles("C1CCC1"))


def test_removal_must_not_strand_a_fragment():
    m = parse_smiles("CCCC")
    t = junction_tree(m)
    first, middle = node_with(t, (0, 1)), node_with(t, (1, 2))
    with pytest.raises(SurgeryError):
        remove_subtrees(m, t, first, {middle})
    with pytest.raises(SurgeryError):
        remove_subtrees(m, t, first, {first})


def test_attach_bond_to_methane_gives_ethane():
    im = IntermediateMol.from_molecule(parse_smiles("C"), VOCAB)
    cc = VOCAB.lookup("CC")
    out = attach_node(im, 0, cc, (0,), (0,), VOCAB)
    assert isomorphic(out.mol, parse_smiles("CC"))
    assert len(out.tree.nodes) == 2 and out.tree.edges == [(0, 1)]
    out.check_consistency()


def test_chlorophenyl_substituent():
    im = IntermediateMol.from_molecule(parse_smiles("CC"), VOCAB)
    benz = VOCAB.lookup("c1ccccc1")
    im = attach_node(im, 0, benz, (1,), (0,), VOCAB)
    ring = len(im.tree.nodes) - 1
    dist = {1: 0}
    frontier = [1]
    while frontier:
        a = frontier.pop(0)
        for b, _ in im.mol.adjacency[a]:
            if b not in dist and b in im.tree.nodes[ring].atoms:
                dist[b] = dist[a] + 1
                frontier.append(b)
    para = next(a for a, d in dist.items() if d == 3)
    im = attach_node(im, ring, VOCAB.lookup("CCl"), (para,), (0,), VOCAB)
    assert isomorphic(im.mol, parse_smiles("Cc1ccc(Cl)cc1"))


def test_attach_then_detach_round_trips():
    m = parse_smiles("Cc1ccccc1")
    im = IntermediateMol.from_molecule(m, VOCAB)
    ring = next(u for u, n in enumerate(im.tree.nodes) if n.kind == "ring")
    cands = enumerate_attachment_candidates(im, ring, VOCAB.lookup("CO"), VOCAB)
    rep = cands.parents[0]
    big = attach_node(im, ring, VOCAB.lookup("CO"), rep, cands.children[rep][0], VOCAB)
    back = remove_subtrees(big.mol, big.tree, ring, {len(big.tree.nodes) - 1})
    assert isomorphic(back.mol, m)


def test_fusion_rejects_mismatched_geometry():
    im = IntermediateMol.from_molecule(parse_smiles("CC"), VOCAB)
    with pytest.raises(AttachError):
        attach_node(im, 0, VOCAB.lookup("c1ccccc1"), (0, 1), (0, 1), VOCAB)


def test_benzene_parent_single_symmetry_class():
    im = IntermediateMol.from_molecule(parse_smiles("c1ccccc1"), VOCAB)
    c = enumerate_attachment_candidates(im, 0, VOCAB.lookup("CC"), VOCAB)
    assert len(c.parents) == 1 and len(c.parent_classes[0]) == 6


def test_ring_on_ring_uses_bonds():
    im = IntermediateMol.from_molecule(parse_smiles("c1ccccc1"), VOCAB)
    c = enumerate_attachment_candidates(im, 0, VOCAB.lookup("c1ccccc1"), VOCAB)
    assert c and all(len(p) == 2 for p in c.parents)
    assert all(len(k) == 2 for kids in c.children.values() for k in kids)


def test_saturated_atom_excluded():
    im = IntermediateMol.from_molecule(parse_smiles("CC(C)(C)C"), VOCAB)
    node = next(u for u, n in enumerate(im.tree.nodes) if 0 in n.atoms)
    c = enumerate_attachment_candidates(im, node, VOCAB.lookup("CC"), VOCAB)
    assert c.parents == [(0,)]
    # forced choice: exactly one class on each side
    assert len(c.children[(0,)]) == 1


def test_exhaustive_candidate_soundness():
    checked = 0
    for smi in PARENTS:
        im = IntermediateMol.from_molecule(parse_smiles(smi), VOCAB)
        for parent in range(len(im.tree.nodes)):
            for tid in range(len(VOCAB)):
                c = enumerate_attachment_candidates(im, parent, tid, VOCAB)
                for rep, members in zip(c.parents, c.parent_classes):
                    assert rep in members
                    for group in c.child_classes[rep]:
                        for pp in members:
                            for cp in group:
                                out = attach_node(im, parent, tid, pp, cp, VOCAB, check=False)
                                assert valence_check(out.mol) == [], (smi, VOCAB.entries[tid], pp, cp)
                                checked += 1
                if not c:
                    assert c.children == {}
    assert checked > 500


@settings(max_examples=40, deadline=None)
@given(st.sampled_from(CORPUS[:60]), st.integers(0, 2**32 - 1))
def test_random_surgery_sequences_stay_valid(smi, seed):
    rng = np.random.default_rng(seed)
    m = parse_smiles(smi)
    im = IntermediateMol.from_molecule(m, VOCAB)
    t = im.tree
    site = int(rng.integers(len(t.nodes)))
    removal = set()
    for w in t.neighbors[site]:
        if rng.random() < 0.5:
            removal |= t.subtree(w, site)
    im = remove_subtrees(m, t, site, removal)
    assert valence_check(im.mol) == []
    parent = [u for u in range(len(t.nodes)) if u not in removal].index(site)
    for _ in range(int(rng.integers(0, 4))):
        tid = int(rng.integers(len(VOCAB)))
        c = enumerate_attachment_candidates(im, parent, tid, VOCAB)
        if not c:
            continue
        rep = c.parents[int(rng.integers(len(c.parents)))]
        kid = c.children[rep][int(rng.integers(len(c.children[rep])))]
        im = attach_node(im, parent, tid, rep, kid, VOCAB)
        im.check_consistency()
        if rng.random() < 0.5:
            parent = len(im.tree.nodes) - 1
    assert valence_check(im.mol) == []
    assert isomorphic(im.mol, parse_smiles(write_smiles(im.mol)))
