"""Training pairs: single-site edits between similar molecules, with the attach
sequence that rebuilds the target from the scaffold left after removal."""
from __future__ import annotations

import logging
from collections import Counter
from dataclasses import dataclass, field, replace
from pathlib import Path

from ..chem.iso import find_isomorphism, isomorphisms
from ..chem.jtree import JunctionTree, NodeVocabulary, VocabularyMiss, junction_tree, node_template
from ..chem.molecule import Bond, Molecule
from ..chem.smiles import SmilesError, parse_smiles, write_smiles
from ..chem.surgery import (AttachError, AttachmentCandidates, IntermediateMol, SurgeryError, attach_node,
                            enumerate_attachment_candidates, remove_subtrees)
from ..props.fingerprint import morgan_fp, stack_words
from .._kernels import tanimoto_matrix
from .ged import EditPath, GEDError, optimal_edit_paths, tree_edit_distance

log = logging.getLogger(__name__)

ISO_TRIALS = 200
ALT_PATHS = 32


class PairError(ValueError):
    """A molecule pair that cannot be expressed as a single replayable edit."""


# ----------------------------------------------------------------- operations


@dataclass(frozen=True)
class AttachOp:
    parent: int                 # node index in the intermediate tree
    descriptor: str             # canonical node descriptor of the child
    parent_pt: tuple[int, ...]  # intermediate-molecule atom(s)
    child_pt: tuple[int, ...]   # template atom(s), aligned with parent_pt


@dataclass(frozen=True)
class StopOp:
    node: int


def dump_sequence(ops) -> str:
    out = []
    for op in ops:
        if isinstance(op, StopOp):
            out.append(f"S {op.node}")
        else:
            p = ",".join(map(str, op.parent_pt))
            c = ",".join(map(str, op.child_pt))
            out.append(f"A {op.parent} {op.descriptor} {p} {c}")
    return ";".join(out)


def load_sequence(text: str) -> list:
    ops = []
    for chunk in text.split(";"):
        parts = chunk.split()
        if not parts:
            continue
        if parts[0] == "S" and len(parts) == 2:
            ops.append(StopOp(int(parts[1])))
        elif parts[0] == "A" and len(parts) == 5:
            ops.append(AttachOp(int(parts[1]), parts[2], tuple(int(x) for x in parts[3].split(",")),
                                tuple(int(x) for x in parts[4].split(","))))
        else:
            raise ValueError(f"malformed attach operation {chunk!r}")
    return ops


@dataclass
class TrainingPair:
    mx: Molecule
    my: Molecule
    tx: JunctionTree
    ty: JunctionTree
    n_d: int                     # disconnection node in tx
    n_d_y: int                   # its image in ty
    removal: tuple[int, ...]     # tx nodes removed (whole fragments hanging off n_d)
    added: tuple[int, ...]       # ty nodes attached
    ops: list = field(default_factory=list)
    sim: float = 0.0
    prop_delta: float = 0.0

    @property
    def mx_smiles(self) -> str:
        return write_smiles(self.mx)

    @property
    def my_smiles(self) -> str:
        return write_smiles(self.my)


# ------------------------------------------------------------ site detection


def disconnection_sites(path: EditPath, tx: JunctionTree, ty: JunctionTree) -> set[int]:
    """Matched tx nodes next to a removed node, or whose ty image is next to an added node."""
    sites = set()
    for u, v in path.matched:
        if any(w in path.removed for w in tx.neighbors[u]) or any(w in path.added for w in ty.neighbors[v]):
            sites.add(u)
    return sites


def _fragments_off(tree: JunctionTree, site: int, nodes: set[int]) -> tuple[list[int], set[int]]:
    """Neighbours of site whose branch touches ``nodes`` and the union of those branches."""
    heads, union = [], set()
    for w in tree.neighbors[site]:
        branch = tree.subtree(w, site)
        if branch & nodes:
            heads.append(w)
            union |= branch
    return heads, union


def _owned_submolecule(m: Molecule, tree: JunctionTree, node_ids) -> tuple[Molecule, list[int]]:
    """Atoms of the given nodes with only the bonds lying inside one of them."""
    sets = [set(tree.nodes[u].atoms) for u in node_ids]
    atoms = sorted(set().union(*sets)) if sets else []
    local = {a: k for k, a in enumerate(atoms)}
    bonds = [Bond(local[b.i], local[b.j], b.order) for b in m.bonds
             if b.i in local and b.j in local and any(b.i in s and b.j in s for s in sets)]
    return Molecule([m.atoms[a] for a in atoms], bonds, intermediate=True), atoms


def _flat(m: Molecule) -> Molecule:
    return Molecule([replace(a, aromatic=False, explicit_h=0) for a in m.atoms], m.bonds, intermediate=True)


def _scaffold_map(im: IntermediateMol, keep_nodes: list[int], path: EditPath, my: Molecule,
                  ty: JunctionTree) -> dict[int, int]:
    """my atom -> intermediate atom for the part of my covered by matched nodes."""
    images = [path.image(u) for u in keep_nodes]
    sub, sub_atoms = _owned_submolecule(my, ty, images)
    want = []
    for k, v in enumerate(images):
        want.append((set(im.tree.nodes[k].atoms), {sub_atoms.index(a) for a in ty.nodes[v].atoms}))
    # aromatic flags are ignored: attaching a ring may turn a chain atom aromatic
    for iso in isomorphisms(_flat(im.mol), _flat(sub), with_h=False, limit=ISO_TRIALS):
        if all({iso[a] for a in xs} == ys for xs, ys in want):
            return {sub_atoms[iso[a]]: a for a in range(len(im.mol.atoms))}
    raise PairError("scaffold of mx does not embed into my along the matched nodes")


def _placement(tpl: Molecule, child_pt, parent_pt, n_before: int) -> dict[int, int]:
    # mirrors attach_node: unplaced template atoms are appended in template order
    placement = dict(zip(child_pt, parent_pt))
    nxt = n_before
    for c in range(len(tpl.atoms)):
        if c not in placement:
            placement[c] = nxt
            nxt += 1
    return placement


def derive_ops(mx: Molecule, my: Molecule, tx: JunctionTree, ty: JunctionTree, path: EditPath,
               vocab: NodeVocabulary) -> tuple[int, int, tuple[int, ...], tuple[int, ...], list]:
    """(n_d, n_d_y, removal, added, ops) for a single-site edit path; raises PairError otherwise."""
    sites = disconnection_sites(path, tx, ty)
    if len(sites) != 1:
        raise PairError(f"{len(sites)} disconnection sites")
    n_d = next(iter(sites))
    n_d_y = path.image(n_d)
    _, removal = _fragments_off(tx, n_d, path.removed)
    if removal != path.removed:
        raise PairError("removed nodes do not form whole fragments at the site")
    _, added = _fragments_off(ty, n_d_y, path.added)
    if added != path.added:
        raise PairError("added nodes do not form whole fragments at the site")
    try:
        im = remove_subtrees(mx, tx, n_d, removal)
    except SurgeryError as e:
        raise PairError(str(e)) from None
    keep_nodes = [u for u in range(len(tx.nodes)) if u not in removal]
    to_im = _scaffold_map(im, keep_nodes, path, my, ty)
    im_index = {n_d_y: im.frontier[0]}
    ops = []
    queue = [n_d_y]
    seen = {n_d_y}
    while queue:
        p = queue.pop(0)
        pset = set(ty.nodes[p].atoms)
        kids = []
        for c in ty.neighbors[p]:
            if c in added and c not in seen:
                shared = sorted(pset & set(ty.nodes[c].atoms))
                kids.append((ty.nodes[c].type_id, shared[0] if shared else -1, c, shared))
        kids.sort()
        for tid, _, c, shared in kids:
            seen.add(c)
            if not 1 <= len(shared) <= 2:
                raise PairError(f"child node shares {len(shared)} atoms with its parent")
            node = ty.nodes[c]
            tpl = vocab.template(tid)
            local = node_template(my, node.atoms, node.kind)
            iso = find_isomorphism(tpl, local, with_h=True)
            if iso is None:
                raise PairError(f"template {vocab.entries[tid]} does not match its node")
            tpl_of = {node.atoms[iso[t]]: t for t in range(len(tpl.atoms))}
            pairs_ = sorted((to_im[s], tpl_of[s]) for s in shared)
            parent_pt = tuple(x for x, _ in pairs_)
            child_pt = tuple(y for _, y in pairs_)
            for a in node.atoms:
                if a not in shared and a in to_im:
                    raise PairError("child node overlaps an existing node away from its parent")
            n_before = len(im.mol.atoms)
            try:
                im = attach_node(im, im_index[p], tid, parent_pt, child_pt, vocab)
            except AttachError as e:
                raise PairError(f"replay attach failed: {e}") from None
            placement = _placement(tpl, child_pt, parent_pt, n_before)
            for t, my_atom in ((t, node.atoms[iso[t]]) for t in range(len(tpl.atoms))):
                to_im[my_atom] = placement[t]
            im_index[c] = len(im.tree.nodes) - 1
            ops.append(AttachOp(im_index[p], vocab.entries[tid], parent_pt, child_pt))
            queue.append(c)
        ops.append(StopOp(im_index[p]))
    if find_isomorphism(im.mol, my, with_h=True) is None:
        raise PairError("replayed molecule is not isomorphic to my")
    return n_d, n_d_y, tuple(sorted(removal)), tuple(sorted(added)), ops


# ------------------------------------------------------------------ replay


@dataclass
class ReplayStep:
    """One teacher-forced decision of the attachment decoder.

    ``state`` is the intermediate molecule the decision is made on. Stop steps
    carry only the node; expand steps also carry the child type, the candidate
    classes and the target class indices.
    """
    state: IntermediateMol
    node: int
    expand: bool
    type_id: int = -1
    candidates: AttachmentCandidates | None = None
    parent_class: int = -1
    child_class: int = -1
    parent_pt: tuple[int, ...] = ()
    child_pt: tuple[int, ...] = ()


def replay(pair: TrainingPair, vocab: NodeVocabulary) -> tuple[IntermediateMol, list[ReplayStep]]:
    """Remove the recorded fragments and follow the attach sequence, recording every decision."""
    im = remove_subtrees(pair.mx, pair.tx, pair.n_d, pair.removal)
    queue = [im.frontier[0]]
    ops = list(pair.ops)
    k = 0
    steps = []
    while queue:
        node = queue.pop(0)
        while True:
            if k >= len(ops):
                raise PairError("attach sequence ended before the queue emptied")
            op = ops[k]
            k += 1
            if isinstance(op, StopOp):
                if op.node != node:
                    raise PairError(f"stop at node {op.node} while decoding node {node}")
                steps.append(ReplayStep(im, node, False))
                break
            if op.parent != node:
                raise PairError(f"attachment to node {op.parent} while decoding node {node}")
            tid = vocab.lookup(op.descriptor)
            cands = enumerate_attachment_candidates(im, node, tid, vocab)
            pc = cands.parent_class_of(op.parent_pt)
            cc = cands.child_class_of(cands.parents[pc], op.child_pt) if pc >= 0 else -1
            if pc < 0 or cc < 0:
                raise PairError("recorded attachment is not among the legal candidates")
            steps.append(ReplayStep(im, node, True, tid, cands, pc, cc, op.parent_pt, op.child_pt))
            im = attach_node(im, node, tid, op.parent_pt, op.child_pt, vocab)
            queue.append(len(im.tree.nodes) - 1)
    if k != len(ops):
        raise PairError("attach sequence has trailing operations")
    return im, steps


# -------------------------------------------------------------- extraction


def canonical(m: Molecule) -> Molecule:
    """Reparse from canonical SMILES so atom order (and every index built on it) is reproducible."""
    return parse_smiles(write_smiles(m))


def build_pair(mx: Molecule, my: Molecule, vocab: NodeVocabulary, sim: float = 0.0, prop_delta: float = 0.0,
               check_replay: bool = True) -> TrainingPair:
    """Derive a TrainingPair from two canonical molecules or raise PairError/GEDError."""
    tx, ty = junction_tree(mx, vocab), junction_tree(my, vocab)
    return _pair_from_paths(mx, my, tx, ty, tree_edit_distance(tx, ty), vocab, sim, prop_delta, check_replay)


def _pair_from_paths(mx, my, tx, ty, path: EditPath, vocab, sim, prop_delta, check_replay=True) -> TrainingPair:
    """Derive and replay along ``path``; on failure try the other cheapest paths with one site.

    Equal-cost node mappings can differ at the atom level (e.g. which of two
    identical substituents is kept), so the first one that embeds and replays wins.
    """
    first = None
    alternatives = None
    k = 0
    while True:
        try:
            n_d, n_d_y, removal, added, ops = derive_ops(mx, my, tx, ty, path, vocab)
            pair = TrainingPair(mx, my, tx, ty, n_d, n_d_y, removal, added, ops, sim, prop_delta)
            if check_replay:
                replay(pair, vocab)
            return pair
        except (PairError, SurgeryError) as e:
            first = first or e
        if alternatives is None:
            alternatives = [p for p in optimal_edit_paths(tx, ty, path.cost, limit=ALT_PATHS)[1:]
                            if len(disconnection_sites(p, tx, ty)) == 1]
        if k >= len(alternatives):
            raise first
        path = alternatives[k]
        k += 1


@dataclass
class ExtractStats:
    candidates: int = 0
    similar: int = 0
    improved: int = 0
    site_hist: Counter = field(default_factory=Counter)
    ged_skipped: int = 0
    replay_failed: int = 0
    kept: int = 0


def extract_pairs(corpus, sim_min: float, prop, delta_min: float, vocab: NodeVocabulary,
                  nbits: int = 2048) -> tuple[list[TrainingPair], ExtractStats]:
    """Ordered pairs passing the similarity and property gates with exactly one disconnection site."""
    stats = ExtractStats()
    mols, seen = [], set()
    for m in corpus:
        s = write_smiles(m)
        if s not in seen:
            seen.add(s)
            mols.append(parse_smiles(s))
    if len(mols) < 2:
        return [], stats
    fps = stack_words(morgan_fp(m, 2, nbits) for m in mols)
    sims = tanimoto_matrix(fps, fps)
    scores = [prop.score(m) for m in mols]
    trees = {}
    out = []
    for i in range(len(mols)):
        for j in range(len(mols)):
            if i == j:
                continue
            stats.candidates += 1
            if sims[i, j] < sim_min:
                continue
            stats.similar += 1
            delta = scores[j] - scores[i]
            if delta < delta_min:
                continue
            stats.improved += 1
            try:
                for k in (i, j):
                    if k not in trees:
                        trees[k] = junction_tree(mols[k], vocab)
                path = tree_edit_distance(trees[i], trees[j])
            except (GEDError, VocabularyMiss) as e:
                log.debug("pair %d->%d skipped: %s", i, j, e)
                stats.ged_skipped += 1
                continue
            n_sites = len(disconnection_sites(path, trees[i], trees[j]))
            stats.site_hist[n_sites] += 1
            if n_sites != 1:
                continue
            try:
                pair = _pair_from_paths(mols[i], mols[j], trees[i], trees[j], path, vocab, float(sims[i, j]),
                                        float(delta))
            except (PairError, SurgeryError) as e:
                log.debug("pair %d->%d not replayable: %s", i, j, e)
                stats.replay_failed += 1
                continue
            stats.kept += 1
            out.append(pair)
    return out, stats


def disconnection_histogram(mol_pairs, vocab: NodeVocabulary) -> Counter:
    """Number of disconnection sites for each (mx, my) pair; pairs GED cannot handle are left out."""
    hist: Counter = Counter()
    for mx, my in mol_pairs:
        try:
            tx, ty = junction_tree(mx, vocab), junction_tree(my, vocab)
            path = tree_edit_distance(tx, ty)
        except (GEDError, VocabularyMiss):
            continue
        hist[len(disconnection_sites(path, tx, ty))] += 1
    return hist


# -------------------------------------------------------------------- I/O

COLUMNS = ("mx_smiles", "my_smiles", "n_d_index", "removal_node_indices", "attach_sequence", "sim",
           "prop_delta", "n_d_y_index", "added_node_indices")


def write_pairs(path, pairs, header: list[str] | None = None) -> None:
    lines = [f"# {h}" for h in header or []]
    lines.append("\t".join(COLUMNS))
    for p in pairs:
        lines.append("\t".join((
            p.mx_smiles, p.my_smiles, str(p.n_d), ",".join(map(str, p.removal)), dump_sequence(p.ops),
            repr(p.sim), repr(p.prop_delta), str(p.n_d_y), ",".join(map(str, p.added)))))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def _ints(text: str) -> tuple[int, ...]:
    return tuple(int(x) for x in text.split(",") if x.strip())


def read_pair_rows(path) -> list[dict]:
    """Raw rows (strings) keyed by column name; comment lines are skipped."""
    rows = []
    header = None
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        if not line.strip() or line.startswith("#"):
            continue
        cells = line.split("\t")
        if header is None:
            if tuple(cells[:7]) != COLUMNS[:7]:
                raise ValueError(f"{path}:{lineno}: not a pairs file header")
            header = cells
            continue
        if len(cells) != len(header):
            raise ValueError(f"{path}:{lineno}: expected {len(header)} columns, got {len(cells)}")
        row = dict(zip(header, cells))
        row["_line"] = lineno
        rows.append(row)
    return rows


def pair_vocabulary(rows) -> NodeVocabulary:
    """Vocabulary of every node occurring in the pairs' molecules."""
    mols = []
    for r in rows:
        mols.append(parse_smiles(r["mx_smiles"]))
        mols.append(parse_smiles(r["my_smiles"]))
    return NodeVocabulary.from_molecules(mols)


def read_pairs(path, vocab: NodeVocabulary | None = None) -> tuple[list[TrainingPair], NodeVocabulary]:
    rows = read_pair_rows(path)
    if vocab is None:
        vocab = pair_vocabulary(rows)
    pairs = []
    for r in rows:
        try:
            mx, my = parse_smiles(r["mx_smiles"]), parse_smiles(r["my_smiles"])
        except SmilesError as e:
            raise ValueError(f"{path}:{r['_line']}: {e}") from None
        tx, ty = junction_tree(mx, vocab), junction_tree(my, vocab)
        pairs.append(TrainingPair(
            mx, my, tx, ty, int(r["n_d_index"]), int(r.get("n_d_y_index", -1) or -1),
            _ints(r["removal_node_indices"]), _ints(r.get("added_node_indices", "")),
            load_sequence(r["attach_sequence"]), float(r["sim"]), float(r["prop_delta"])))
    return pairs, vocab
