"""Junction-tree coarsening (rings and bonds as nodes) and the node-type vocabulary."""
from __future__ import annotations

import hashlib
from dataclasses import dataclass, field, replace
from pathlib import Path

from .molecule import AROMATIC, Atom, Bond, Molecule, bond_valence
from .smiles import canonical_ranks, parse_smiles, symmetry_classes, write_smiles

RING, BOND, ATOM = "ring", "bond", "atom"


class VocabularyMiss(KeyError):
    def __init__(self, descriptor: str):
        super().__init__(descriptor)
        self.descriptor = descriptor

    def __str__(self):
        return f"node substructure {self.descriptor!r} is not in the vocabulary"


@dataclass(frozen=True)
class TreeNode:
    atoms: tuple[int, ...]
    kind: str
    type_id: int = -1


@dataclass
class JunctionTree:
    nodes: list[TreeNode]
    edges: list[tuple[int, int]]
    neighbors: list[list[int]] = field(default_factory=list)

    def __post_init__(self):
        if not self.neighbors:
            self.neighbors = [[] for _ in self.nodes]
            for u, v in self.edges:
                self.neighbors[u].append(v)
                self.neighbors[v].append(u)
            for row in self.neighbors:
                row.sort()

    def __len__(self):
        return len(self.nodes)

    def type_ids(self) -> list[int]:
        return [n.type_id for n in self.nodes]

    def subtree(self, root: int, blocked: int) -> set[int]:
        """Nodes reachable from root without passing through blocked."""
        seen = {root}
        stack = [root]
        while stack:
            u = stack.pop()
            for v in self.neighbors[u]:
                if v != blocked and v not in seen:
                    seen.add(v)
                    stack.append(v)
        return seen

    def copy(self) -> JunctionTree:
        return JunctionTree(list(self.nodes), list(self.edges), [list(r) for r in self.neighbors])


def tree_node_sets(m: Molecule) -> list[tuple[tuple[int, ...], str]]:
    """Ring systems (rings merged when they share three or more atoms) and non-ring bonds."""
    groups = [set(r) for r in m.rings]
    merged = True
    while merged:
        merged = False
        for a in range(len(groups)):
            for b in range(a + 1, len(groups)):
                if len(groups[a] & groups[b]) >= 3:
                    groups[a] |= groups.pop(b)
                    merged = True
                    break
            if merged:
                break
    out = [(tuple(sorted(g)), RING) for g in groups]
    flags = m.ring_bond_flags
    for k, b in enumerate(m.bonds):
        if not flags[k]:
            out.append(((min(b.i, b.j), max(b.i, b.j)), BOND))
    for i in range(len(m.atoms)):
        if not m.adjacency[i]:
            out.append(((i,), ATOM))
    out.sort()
    return out


def tree_edges(node_atoms: list[tuple[int, ...]], ranks: list[int] | None = None) -> list[tuple[int, int]]:
    """Edges between nodes sharing atoms, reduced to a spanning forest.

    Kruskal taking the most shared atoms first, so on any cycle an edge with the
    fewest shared atoms is dropped. Ties go by the ``ranks`` of the two nodes'
    atoms when given (canonical ranks make the tree independent of atom order),
    otherwise by node index.
    """
    sets = [set(a) for a in node_atoms]
    by_atom: dict[int, list[int]] = {}
    for u, s in enumerate(sets):
        for a in s:
            by_atom.setdefault(a, []).append(u)
    cand = set()
    for users in by_atom.values():
        for x in range(len(users)):
            for y in range(x + 1, len(users)):
                cand.add((min(users[x], users[y]), max(users[x], users[y])))

    def tie(u, v):
        if ranks is None:
            return (u, v)
        ku, kv = sorted(ranks[a] for a in sets[u]), sorted(ranks[a] for a in sets[v])
        return (min(ku, kv), max(ku, kv))

    keyed = sorted(((-len(sets[u] & sets[v]), tie(u, v), u, v) for u, v in cand))
    parent = list(range(len(sets)))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    edges = []
    for _, _, u, v in keyed:
        ru, rv = find(u), find(v)
        if ru != rv:
            parent[ru] = rv
            edges.append((u, v))
    return sorted(edges)


def node_template(m: Molecule, atoms: tuple[int, ...], kind: str) -> Molecule:
    """Standalone copy of a node substructure with external bonds capped by hydrogens."""
    inside = set(atoms)
    local = {a: k for k, a in enumerate(atoms)}
    new_atoms = []
    for a in atoms:
        at = m.atoms[a]
        external = sum(bond_valence(m.bonds[k].order) for j, k in m.adjacency[a] if j not in inside)
        if kind == RING and at.aromatic:
            new_atoms.append(Atom(at.element, at.charge, True, m.hydrogens(a) + external))
        elif at.explicit_h is not None and not at.aromatic:
            new_atoms.append(Atom(at.element, at.charge, False, at.explicit_h + external))
        else:
            new_atoms.append(Atom(at.element, at.charge, False, None))
    bonds = []
    for k, b in enumerate(m.bonds):
        if b.i in inside and b.j in inside:
            order = b.order
            if kind != RING and order == AROMATIC:
                order = 1
            bonds.append(Bond(local[b.i], local[b.j], order))
    return Molecule(new_atoms, bonds)


def node_descriptor(m: Molecule, atoms: tuple[int, ...], kind: str) -> str:
    return write_smiles(node_template(m, atoms, kind), check=False)


def molecule_descriptors(m: Molecule) -> list[str]:
    return [node_descriptor(m, a, k) for a, k in tree_node_sets(m)]


class NodeVocabulary:
    """Canonical node descriptors; the line number of a descriptor is its type id."""

    def __init__(self, entries):
        self.entries: list[str] = list(entries)
        self.index = {e: i for i, e in enumerate(self.entries)}
        if len(self.index) != len(self.entries):
            raise ValueError("duplicate vocabulary entries")
        self._templates: dict[int, Molecule] = {}
        self._symmetry: dict[int, list[int]] = {}

    def __len__(self):
        return len(self.entries)

    def __contains__(self, descriptor):
        return descriptor in self.index

    @classmethod
    def from_molecules(cls, mols) -> NodeVocabulary:
        seen = set()
        for m in mols:
            seen.update(molecule_descriptors(m))
        return cls(sorted(seen))

    def lookup(self, descriptor: str) -> int:
        try:
            return self.index[descriptor]
        except KeyError:
            raise VocabularyMiss(descriptor) from None

    def template(self, type_id: int) -> Molecule:
        t = self._templates.get(type_id)
        if t is None:
            t = parse_smiles(self.entries[type_id], strict=False)
            self._templates[type_id] = t
        return t

    def symmetry(self, type_id: int) -> list[int]:
        s = self._symmetry.get(type_id)
        if s is None:
            s = self._symmetry[type_id] = symmetry_classes(self.template(type_id))
        return s

    def kind(self, type_id: int) -> str:
        t = self.template(type_id)
        if len(t.atoms) == 1:
            return ATOM
        return RING if t.rings else BOND

    def digest(self) -> str:
        return hashlib.sha256("\n".join(self.entries).encode()).hexdigest()

    def save(self, path) -> None:
        Path(path).write_text("".join(e + "\n" for e in self.entries), encoding="utf-8")

    @classmethod
    def load(cls, path) -> NodeVocabulary:
        lines = Path(path).read_text(encoding="utf-8").splitlines()
        return cls(x.strip() for x in lines if x.strip() and not x.startswith("#"))


def junction_tree(m: Molecule, vocab: NodeVocabulary | None = None) -> JunctionTree:
    """Ring/bond coarsening of m. Without a vocabulary every node gets type_id -1."""
    sets = tree_node_sets(m)
    nodes = []
    for atoms, kind in sets:
        tid = -1
        if vocab is not None:
            tid = vocab.lookup(node_descriptor(m, atoms, kind))
        nodes.append(TreeNode(atoms, kind, tid))
    node_atoms = [a for a, _ in sets]
    n_cand = sum(1 for u in range(len(sets)) for v in range(u + 1, len(sets)) if set(node_atoms[u]) & set(node_atoms[v]))
    # ranks only matter when some atom is shared by three or more nodes
    ranks = canonical_ranks(m) if n_cand >= len(sets) else None
    return JunctionTree(nodes, tree_edges(node_atoms, ranks))


def relabel_tree(t: JunctionTree, type_ids) -> JunctionTree:
    nodes = [replace(n, type_id=tid) for n, tid in zip(t.nodes, type_ids)]
    return JunctionTree(nodes, list(t.edges))
