"""Frequency tables of the fragments removed from and attached to training pairs."""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field

from ..chem.jtree import JunctionTree
from ..chem.molecule import Atom, Bond, Molecule
from ..chem.smiles import write_smiles


def fragment_smiles(m: Molecule, tree: JunctionTree, site: int, group: set[int]) -> tuple[str, int]:
    """Canonical SMILES of the atoms in ``group`` nodes and its size without the attachment atoms.

    Atoms shared with the site node are written with map number 1 and no hydrogens.
    """
    site_atoms = set(tree.nodes[site].atoms)
    atoms = sorted(set().union(*(tree.nodes[u].atoms for u in group)))
    local = {a: k for k, a in enumerate(atoms)}
    new_atoms = []
    for a in atoms:
        at = m.atoms[a]
        if a in site_atoms:
            new_atoms.append(Atom(at.element, at.charge, at.aromatic, 0, 1))
        else:
            new_atoms.append(Atom(at.element, at.charge, at.aromatic, m.hydrogens(a), None))
    bonds = [Bond(local[b.i], local[b.j], b.order) for b in m.bonds if b.i in local and b.j in local]
    frag = Molecule(new_atoms, bonds, intermediate=True)
    return write_smiles(frag, check=False), sum(1 for a in atoms if a not in site_atoms)


def pair_fragments(m: Molecule, tree: JunctionTree, site: int, nodes) -> list[tuple[str, int]]:
    """One fragment per group of ``nodes`` that share atoms.

    Pieces hanging off the same attachment atom count as one fragment whatever
    shape the tree gave them.
    """
    nodes = sorted(nodes)
    parent = {u: u for u in nodes}

    def find(u):
        while parent[u] != u:
            parent[u] = parent[parent[u]]
            u = parent[u]
        return u

    for a, u in enumerate(nodes):
        for v in nodes[a + 1:]:
            if set(tree.nodes[u].atoms) & set(tree.nodes[v].atoms):
                parent[find(u)] = find(v)
    groups: dict[int, set[int]] = {}
    for u in nodes:
        groups.setdefault(find(u), set()).add(u)
    return sorted(fragment_smiles(m, tree, site, g) for g in groups.values())


@dataclass
class FragmentReport:
    removed: Counter = field(default_factory=Counter)
    attached: Counter = field(default_factory=Counter)
    removed_atoms: list[int] = field(default_factory=list)   # per pair with a removal
    attached_atoms: list[int] = field(default_factory=list)  # per pair with an attachment
    n_pairs: int = 0

    @staticmethod
    def _mean(xs):
        return sum(xs) / len(xs) if xs else 0.0

    @property
    def mean_removed(self) -> float:
        return self._mean(self.removed_atoms)

    @property
    def mean_attached(self) -> float:
        return self._mean(self.attached_atoms)

    def table(self, which: str, top: int | None = None) -> list[tuple[str, int, float]]:
        """(smiles, count, percent of all fragments of that side), most frequent first."""
        counts = self.removed if which == "removed" else self.attached
        total = sum(counts.values())
        rows = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))[:top]
        return [(s, c, 100.0 * c / total) for s, c in rows]

    def to_tsv(self, top: int | None = None) -> str:
        lines = [f"# pairs\t{self.n_pairs}",
                 f"# mean_removed_atoms\t{self.mean_removed:.4f}",
                 f"# mean_attached_atoms\t{self.mean_attached:.4f}",
                 "# percentages are rounded to two decimals; a truncated table sums to less than 100",
                 "side\tfragment\tcount\tpercent"]
        for side in ("removed", "attached"):
            for s, c, pct in self.table(side, top):
                lines.append(f"{side}\t{s}\t{c}\t{pct:.2f}")
        return "\n".join(lines) + "\n"


def fragment_stats(pairs) -> FragmentReport:
    rep = FragmentReport()
    for p in pairs:
        rep.n_pairs += 1
        if p.removal:
            frags = pair_fragments(p.mx, p.tx, p.n_d, p.removal)
            rep.removed.update(s for s, _ in frags)
            rep.removed_atoms.append(sum(n for _, n in frags))
        if p.added:
            frags = pair_fragments(p.my, p.ty, p.n_d_y, p.added)
            rep.attached.update(s for s, _ in frags)
            rep.attached_atoms.append(sum(n for _, n in frags))
    return rep
