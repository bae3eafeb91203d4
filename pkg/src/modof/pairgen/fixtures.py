"""Constructive generators: random single-site edits, planted pairs and small corpora."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..chem.iso import find_isomorphism
from ..chem.jtree import JunctionTree, NodeVocabulary, VocabularyMiss, junction_tree
from ..chem.molecule import Molecule, valence_check
from ..chem.smiles import SmilesError, parse_smiles, symmetry_classes, write_smiles
from ..chem.surgery import (AttachError, IntermediateMol, SurgeryError, attach_node,
                            enumerate_attachment_candidates, remove_subtrees)
from .ged import GEDError, optimal_edit_paths, tree_edit_distance
from .pairs import disconnection_sites

SEED_SMILES = (
    "CCOC(=O)c1ccccc1", "Cc1ccc(O)cc1", "CC(C)Cc1ccc(C)cc1", "O=C(O)c1ccccc1O", "CCN(CC)CC",
    "c1ccc2ccccc2c1", "CC(=O)Nc1ccc(O)cc1", "COc1ccc(CCN)cc1", "Clc1ccc(Cl)cc1", "CC1CCCCC1",
    "OC1CCCC1", "CCCCCCO", "Cc1ccncc1", "NC(=O)c1cccnc1", "CSc1ccccc1", "CCOCC",
    "O=C1CCCCC1", "Fc1ccccc1", "CC(C)O", "c1ccc(-c2ccccc2)cc1", "CCc1ccccc1N", "C1CCNCC1",
    "CC(=O)OC1CCCCC1", "Brc1ccccc1", "N#Cc1ccccc1", "CCCN", "OCc1ccco1", "Cc1ccsc1",
    "CC(O)C(=O)O", "c1ccc(Oc2ccccc2)cc1",
)

FRAGMENT_SMILES = ("CC", "CO", "CN", "C=O", "CCl", "CF", "CBr", "C#N", "CS", "C1CC1", "C1CCCC1", "C1CCCCC1",
                   "c1ccccc1", "c1ccncc1", "c1ccoc1", "c1ccsc1", "C=C", "NO", "CCl", "OO")


def seed_molecules() -> list[Molecule]:
    return [parse_smiles(s) for s in SEED_SMILES]


def fixture_vocabulary(extra=()) -> NodeVocabulary:
    mols = seed_molecules() + [parse_smiles(s) for s in FRAGMENT_SMILES if s != "OO"] + list(extra)
    return NodeVocabulary.from_molecules(mols)


@dataclass
class PlantedEdit:
    """An edit applied constructively at one or more tree nodes of ``mx``.

    ``removed_atoms`` index ``mx`` and ``added_atoms`` index ``my``; neither
    includes atoms of a site node.
    """
    mx: Molecule
    my: Molecule
    sites: tuple[int, ...]
    removal: tuple[int, ...]
    removed_atoms: tuple[int, ...]
    added_atoms: tuple[int, ...]
    attached_types: tuple[int, ...]

    @property
    def site(self) -> int:
        return self.sites[0]


def _tree_signature(tree: JunctionTree, atom_map=None):
    f = atom_map or (lambda a: a)

    def key(u):
        return frozenset(f(a) for a in tree.nodes[u].atoms)

    nodes = {key(u): n.type_id for u, n in enumerate(tree.nodes)}
    edges = {frozenset((key(u), key(v))) for u, v in tree.edges}
    return nodes, edges


def _grow(im: IntermediateMol, parent: int, vocab: NodeVocabulary, rng, types) -> IntermediateMol | None:
    for _ in range(6):
        tid = int(types[rng.integers(len(types))])
        cands = enumerate_attachment_candidates(im, parent, tid, vocab)
        if not cands:
            continue
        rep = cands.parents[int(rng.integers(len(cands.parents)))]
        kids = cands.children[rep]
        crep = kids[int(rng.integers(len(kids)))]
        try:
            return attach_node(im, parent, tid, rep, crep, vocab)
        except AttachError:
            continue
    return None


def tree_distance(tree: JunctionTree, a: int, b: int) -> int:
    dist = {a: 0}
    queue = [a]
    while queue:
        u = queue.pop(0)
        for v in tree.neighbors[u]:
            if v not in dist:
                dist[v] = dist[u] + 1
                queue.append(v)
    return dist.get(b, -1)


def random_edit(m: Molecule, vocab: NodeVocabulary, rng: np.random.Generator, max_atoms: int = 38,
                attach_types=None, max_removed_nodes: int = 2, max_added_nodes: int = 2, n_sites: int = 1,
                min_distance: int = 3) -> PlantedEdit | None:
    """Remove small branches at random nodes and attach up to ``max_added_nodes`` new nodes at each.

    Returns None when the drawn edit is not clean: every site must change, the
    junction tree of the product must equal the tree built by the surgery, the
    edit must cost no more than the tree edit distance, and with several sites
    they must lie ``min_distance`` tree hops apart.
    """
    mx = parse_smiles(write_smiles(m))
    try:
        tx = junction_tree(mx, vocab)
    except VocabularyMiss:
        return None
    sites = [int(x) for x in rng.choice(len(tx.nodes), size=n_sites, replace=False)] if len(tx.nodes) >= n_sites else []
    if len(sites) != n_sites:
        return None
    for a in range(n_sites):
        for b in range(a + 1, n_sites):
            if tree_distance(tx, sites[a], sites[b]) < min_distance:
                return None
    removal: set[int] = set()
    per_site_removal = []
    for s in sites:
        mine = set()
        for w in tx.neighbors[s]:
            branch = tx.subtree(w, s)
            if len(branch) <= max_removed_nodes and not branch & set(sites) and rng.random() < 0.4:
                mine |= branch
        per_site_removal.append(mine)
        removal |= mine
    if len(removal) >= len(tx.nodes) - n_sites:
        return None
    try:
        im = remove_subtrees(mx, tx, sites[0], removal)
    except SurgeryError:
        return None
    kept = [u for u in range(len(tx.nodes)) if u not in removal]
    types = attach_types if attach_types is not None else list(range(len(vocab)))
    attached = []
    new_nodes = []
    for s, mine in zip(sites, per_site_removal):
        parent = kept.index(s)
        n_add = int(rng.integers(0 if mine else 1, max_added_nodes + 1))
        grew = 0
        for _ in range(n_add):
            nxt = _grow(im, parent, vocab, rng, types)
            if nxt is None:
                break
            im = nxt
            grew += 1
            attached.append(im.tree.nodes[-1].type_id)
            new_nodes.append(len(im.tree.nodes) - 1)
            if rng.random() < 0.5:
                parent = len(im.tree.nodes) - 1
        if not mine and not grew:
            return None
    if valence_check(im.mol) or len(im.mol.atoms) > max_atoms:
        return None
    try:
        my = parse_smiles(write_smiles(im.mol))
        ty = junction_tree(my, vocab)
    except (SmilesError, VocabularyMiss, ValueError):
        return None
    if write_smiles(my) == write_smiles(mx):
        return None
    iso = find_isomorphism(im.mol, my, with_h=True)
    if iso is None or _tree_signature(im.tree, iso.__getitem__) != _tree_signature(ty):
        return None
    # the planted edit must be a cheapest explanation of the pair
    planted_cost = (len(removal) + len(new_nodes)
                    + sum(1 for u, v in tx.edges if u in removal or v in removal)
                    + sum(1 for u, v in im.tree.edges if u in new_nodes or v in new_nodes))
    try:
        if tree_edit_distance(tx, ty).cost != planted_cost:
            return None
        paths = optimal_edit_paths(tx, ty, planted_cost, limit=64)
    except GEDError:
        return None
    # every cheapest explanation must point at the planted sites (up to symmetry)
    cls = symmetry_classes(mx)
    key = lambda u: (tx.nodes[u].type_id, tuple(sorted(cls[a] for a in tx.nodes[u].atoms)))
    want = sorted(key(u) for u in sites)
    if any(sorted(key(u) for u in disconnection_sites(p, tx, ty)) != want for p in paths):
        return None
    site_atoms = {a for s in sites for a in tx.nodes[s].atoms}
    removed_atoms = sorted({a for u in removal for a in tx.nodes[u].atoms} - site_atoms)
    site_im = {a for s in sites for a in im.tree.nodes[kept.index(s)].atoms}
    added_im = {a for u in new_nodes for a in im.tree.nodes[u].atoms} - site_im
    return PlantedEdit(mx, my, tuple(sites), tuple(sorted(removal)), tuple(removed_atoms),
                       tuple(sorted(iso[a] for a in added_im)), tuple(attached))


def _planted(n, seed, mols, vocab, max_tries, **kw):
    rng = np.random.default_rng(seed)
    mols = list(mols) if mols is not None else seed_molecules()
    vocab = vocab or fixture_vocabulary(mols)
    out, seen = [], set()
    for _ in range(max_tries):
        if len(out) >= n:
            break
        m = mols[int(rng.integers(len(mols)))]
        e = random_edit(m, vocab, rng, **kw)
        if e is None:
            continue
        key = (write_smiles(e.mx), write_smiles(e.my))
        if key in seen:
            continue
        seen.add(key)
        out.append(e)
    return out, vocab


def planted_single_edits(n: int, seed: int = 0, mols=None, vocab: NodeVocabulary | None = None,
                         max_tries: int = 20000, **kw) -> tuple[list[PlantedEdit], NodeVocabulary]:
    return _planted(n, seed, mols, vocab, max_tries, n_sites=1, **kw)


def planted_two_edits(n: int, seed: int = 0, mols=None, vocab: NodeVocabulary | None = None,
                      max_tries: int = 20000, **kw) -> tuple[list[PlantedEdit], NodeVocabulary]:
    return _planted(n, seed, mols, vocab, max_tries, n_sites=2, **kw)


def generate_corpus(n: int, seed: int = 0, max_atoms: int = 38) -> list[str]:
    """Canonical SMILES grown from the seed set by repeated random edits."""
    rng = np.random.default_rng(seed)
    pool = [write_smiles(m) for m in seed_molecules()]
    vocab = fixture_vocabulary()
    seen = set(pool)
    out = list(pool)
    tries = 0
    while len(out) < n and tries < 50 * n:
        tries += 1
        base = parse_smiles(out[int(rng.integers(len(out)))])
        e = random_edit(base, vocab, rng, max_atoms=max_atoms)
        if e is None:
            continue
        s = write_smiles(e.my)
        if s in seen:
            continue
        seen.add(s)
        out.append(s)
    return out[:n]
