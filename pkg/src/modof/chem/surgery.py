"""Graph surgery on (molecule, junction tree) pairs: fragment removal, node attachment and
enumeration of legal attachment points."""
from __future__ import annotations

from dataclasses import dataclass, field, replace

from .jtree import RING, JunctionTree, NodeVocabulary, TreeNode, junction_tree
from .molecule import AROMATIC, Atom, Bond, Molecule, bond_valence, valence_check
from .smiles import symmetry_classes


class SurgeryError(ValueError):
    pass


class AttachError(SurgeryError):
    pass


@dataclass
class IntermediateMol:
    mol: Molecule
    tree: JunctionTree
    frontier: list[int] = field(default_factory=list)

    @classmethod
    def from_molecule(cls, m: Molecule, vocab: NodeVocabulary | None = None) -> IntermediateMol:
        return cls(m, junction_tree(m, vocab), [])

    def check_consistency(self) -> None:
        n = len(self.mol.atoms)
        covered = set()
        for node in self.tree.nodes:
            if any(a < 0 or a >= n for a in node.atoms):
                raise SurgeryError(f"node {node} references a missing atom")
            covered.update(node.atoms)
        if covered != set(range(n)):
            raise SurgeryError("tree nodes do not cover every atom")
        for u, v in self.tree.edges:
            if not set(self.tree.nodes[u].atoms) & set(self.tree.nodes[v].atoms):
                raise SurgeryError(f"tree edge {(u, v)} joins nodes without shared atoms")


def _h_after_bond_change(atom: Atom, delta: int) -> Atom:
    """Atoms with a frozen H count gain (or lose) hydrogens when heavy bonds are removed (added)."""
    if atom.explicit_h is None:
        return atom
    return replace(atom, explicit_h=atom.explicit_h + delta)


def remove_subtrees(m: Molecule, t: JunctionTree, n_d: int, removal) -> IntermediateMol:
    """Delete the fragments formed by the removal nodes, capping cut bonds with hydrogens."""
    removal = set(removal)
    if n_d in removal:
        raise SurgeryError("the disconnection site cannot be removed")
    if not 0 <= n_d < len(t.nodes):
        raise SurgeryError(f"node {n_d} is not in the tree")
    keep_nodes = [u for u in range(len(t.nodes)) if u not in removal]
    # every kept node must stay connected to n_d
    reach = {n_d}
    stack = [n_d]
    while stack:
        u = stack.pop()
        for v in t.neighbors[u]:
            if v not in removal and v not in reach:
                reach.add(v)
                stack.append(v)
    stranded = [u for u in keep_nodes if u not in reach]
    if stranded:
        raise SurgeryError(f"removal disconnects nodes {stranded} from the disconnection site")
    kept_atoms = sorted({a for u in keep_nodes for a in t.nodes[u].atoms})
    remap = {a: k for k, a in enumerate(kept_atoms)}
    kept_sets = [set(t.nodes[u].atoms) for u in keep_nodes]
    delta = {a: 0 for a in kept_atoms}
    bonds = []
    for b in m.bonds:
        both = b.i in remap and b.j in remap
        owned = both and any(b.i in s and b.j in s for s in kept_sets)
        if owned:
            bonds.append(Bond(remap[b.i], remap[b.j], b.order))
            continue
        for x in (b.i, b.j):
            if x in remap:
                delta[x] += bond_valence(b.order)
    atoms = [_h_after_bond_change(m.atoms[a], delta[a]) for a in kept_atoms]
    # an atom cut off from its whole aromatic ring becomes aliphatic with default hydrogens
    still_aromatic = {x for b in bonds if b.order == AROMATIC for x in (b.i, b.j)}
    atoms = [replace(a, aromatic=False, explicit_h=None) if a.aromatic and k not in still_aromatic else a
             for k, a in enumerate(atoms)]
    mol = Molecule(atoms, bonds)
    node_remap = {u: k for k, u in enumerate(keep_nodes)}
    nodes = [TreeNode(tuple(remap[a] for a in t.nodes[u].atoms), t.nodes[u].kind, t.nodes[u].type_id)
             for u in keep_nodes]
    edges = sorted((node_remap[u], node_remap[v]) for u, v in t.edges if u in node_remap and v in node_remap)
    return IntermediateMol(mol, JunctionTree(nodes, edges), [node_remap[n_d]])


def _merged_atom(parent: Atom, child: Atom, parent_bonds: int, child_bonds: int) -> Atom:
    """Fuse a parent atom with the template atom placed on top of it.

    The side whose H count is fixed (aromatic side first) is the base; hydrogens
    are displaced one per unit of bond valence contributed by the other side.
    """
    if parent.element != child.element or parent.charge != child.charge:
        raise AttachError(f"cannot merge {parent.element}{parent.charge:+d} with {child.element}{child.charge:+d}")
    aromatic = parent.aromatic or child.aromatic
    if parent.aromatic or (parent.explicit_h is not None and not child.aromatic):
        h = parent.explicit_h - child_bonds
    elif child.aromatic or child.explicit_h is not None:
        h = child.explicit_h - parent_bonds
    else:
        h = None
    if h is not None and h < 0:
        raise AttachError("fusion would exceed valence (no hydrogen left to displace)")
    return Atom(parent.element, parent.charge, aromatic, h, parent.atom_map)


def attach_node(im: IntermediateMol, parent: int, child_type: int, parent_pt, child_pt,
                vocab: NodeVocabulary, check: bool = True) -> IntermediateMol:
    """Instantiate a vocabulary node and fuse it onto ``parent`` at the given points."""
    parent_pt, child_pt = tuple(parent_pt), tuple(child_pt)
    if len(parent_pt) != len(child_pt) or len(parent_pt) not in (1, 2):
        raise AttachError("attachment points must both be atoms or both be bonds")
    m = im.mol
    pnode = im.tree.nodes[parent]
    if not set(parent_pt) <= set(pnode.atoms):
        raise AttachError(f"point {parent_pt} is not inside parent node {parent}")
    tpl = vocab.template(child_type)
    kind = vocab.kind(child_type)
    if any(not 0 <= c < len(tpl.atoms) for c in child_pt):
        raise AttachError(f"point {child_pt} is not inside the child template")
    shared_bond_parent = shared_bond_child = None
    if len(parent_pt) == 2:
        if pnode.kind != RING or kind != RING:
            raise AttachError("incompatible ring-fusion geometry: bond fusion needs two rings")
        shared_bond_parent = m.bond_id(*parent_pt)
        shared_bond_child = tpl.bond_id(*child_pt)
        if shared_bond_parent is None or shared_bond_child is None:
            raise AttachError("incompatible ring-fusion geometry: fusion points are not bonded")
        if m.bonds[shared_bond_parent].order != tpl.bonds[shared_bond_child].order:
            raise AttachError("incompatible ring-fusion geometry: shared bond orders differ")

    n = len(m.atoms)
    placement: dict[int, int] = dict(zip(child_pt, parent_pt))
    new_atoms = list(m.atoms)
    for c in range(len(tpl.atoms)):
        if c not in placement:
            placement[c] = len(new_atoms)
            a = tpl.atoms[c]
            new_atoms.append(Atom(a.element, a.charge, a.aromatic, a.explicit_h, None))
    for c, p in zip(child_pt, parent_pt):
        child_bonds = sum(bond_valence(tpl.bonds[k].order) for _, k in tpl.adjacency[c] if k != shared_bond_child)
        parent_bonds = sum(bond_valence(m.bonds[k].order) for _, k in m.adjacency[p] if k != shared_bond_parent)
        new_atoms[p] = _merged_atom(m.atoms[p], tpl.atoms[c], parent_bonds, child_bonds)
    bonds = list(m.bonds)
    for k, b in enumerate(tpl.bonds):
        if k == shared_bond_child:
            continue
        i, j = placement[b.i], placement[b.j]
        if max(i, j) < n and m.bond_id(i, j) is not None:
            raise AttachError("incompatible ring-fusion geometry: bond already present")
        bonds.append(Bond(i, j, b.order))
    mol = Molecule(new_atoms, bonds)
    if check:
        bad = valence_check(mol)
        if bad:
            raise AttachError(f"fusion would exceed valence: {bad[0].detail}")
    atoms = tuple(sorted(placement[c] for c in range(len(tpl.atoms))))
    nodes = list(im.tree.nodes) + [TreeNode(atoms, kind, child_type)]
    new_id = len(nodes) - 1
    edges = sorted(im.tree.edges + [(parent, new_id)])
    return IntermediateMol(mol, JunctionTree(nodes, edges), list(im.frontier) + [new_id])


# ------------------------------------------------------------- candidates


@dataclass
class AttachmentCandidates:
    """Legal attachment points grouped into symmetry classes.

    ``parents[i]`` is the representative parent point of class i and
    ``parent_classes[i]`` all its members. For each parent representative,
    ``children[rep]`` / ``child_classes[rep]`` hold the legal child points.
    """
    parents: list[tuple[int, ...]]
    parent_classes: list[list[tuple[int, ...]]]
    children: dict[tuple[int, ...], list[tuple[int, ...]]]
    child_classes: dict[tuple[int, ...], list[list[tuple[int, ...]]]]

    def __bool__(self):
        return bool(self.parents)

    def parent_class_of(self, point) -> int:
        point = tuple(point)
        alt = tuple(sorted(point))
        for k, members in enumerate(self.parent_classes):
            if point in members or alt in members:
                return k
        return -1

    def child_class_of(self, parent_rep, point) -> int:
        point = tuple(point)
        for k, members in enumerate(self.child_classes.get(tuple(parent_rep), [])):
            if point in members:
                return k
        return -1

    def all_child_points(self) -> list[tuple[int, ...]]:
        seen = []
        for reps in self.children.values():
            for c in reps:
                if c not in seen:
                    seen.append(c)
        return seen


def parent_points(im: IntermediateMol, parent: int, child_kind: str) -> list[tuple[int, ...]]:
    node = im.tree.nodes[parent]
    pts = [(a,) for a in node.atoms]
    if node.kind == RING and child_kind == RING:
        inside = set(node.atoms)
        for k, b in enumerate(im.mol.bonds):
            if b.i in inside and b.j in inside and im.mol.ring_bond_flags[k]:
                pts.append((min(b.i, b.j), max(b.i, b.j)))
    return pts


def child_points(tpl: Molecule, kind: str, bond_mode: bool) -> list[tuple[int, ...]]:
    if not bond_mode:
        return [(a,) for a in range(len(tpl.atoms))]
    if kind != RING:
        return []
    out = []
    for b in tpl.bonds:
        out.append((b.i, b.j))
        out.append((b.j, b.i))
    return sorted(out)


def enumerate_attachment_candidates(im: IntermediateMol, parent: int, child_type: int,
                                    vocab: NodeVocabulary) -> AttachmentCandidates:
    """All valence-legal ways to fuse ``child_type`` onto ``parent``, deduplicated by symmetry."""
    tpl = vocab.template(child_type)
    kind = vocab.kind(child_type)
    pcol = symmetry_classes(im.mol)
    ccol = vocab.symmetry(child_type)
    m = im.mol

    def pkey(pt):
        if len(pt) == 1:
            return (pcol[pt[0]],)
        return tuple(sorted((pcol[pt[0]], pcol[pt[1]]))) + (m.bonds[m.bond_id(*pt)].order,)

    def ckey(pt):
        return tuple(ccol[c] for c in pt)

    def compatible(pp, cp):
        for p, c in zip(pp, cp):
            pa, ca = m.atoms[p], tpl.atoms[c]
            if pa.element != ca.element or pa.charge != ca.charge:
                return False
        if len(pp) == 2:
            return m.bonds[m.bond_id(*pp)].order == tpl.bonds[tpl.bond_id(*cp)].order
        return True

    pgroups: dict[tuple, list[tuple[int, ...]]] = {}
    for pt in parent_points(im, parent, kind):
        pgroups.setdefault(pkey(pt), []).append(pt)
    parents, parent_classes, children, child_classes = [], [], {}, {}
    for members in sorted(pgroups.values()):
        rep = members[0]
        cgroups: dict[tuple, list[tuple[int, ...]]] = {}
        for cp in child_points(tpl, kind, len(rep) == 2):
            cgroups.setdefault(ckey(cp), []).append(cp)
        legal = []
        for cmembers in sorted(cgroups.values()):
            crep = cmembers[0]
            if not compatible(rep, crep):
                continue
            try:
                attach_node(im, parent, child_type, rep, crep, vocab)
            except AttachError:
                continue
            legal.append(cmembers)
        if legal:
            parents.append(rep)
            parent_classes.append(members)
            children[rep] = [c[0] for c in legal]
            child_classes[rep] = legal
    return AttachmentCandidates(parents, parent_classes, children, child_classes)
