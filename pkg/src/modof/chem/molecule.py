"""Atoms, bonds and the molecule container with its valence model."""
from __future__ import annotations

from dataclasses import dataclass, replace
from functools import cached_property

SINGLE, DOUBLE, TRIPLE, AROMATIC = 1, 2, 3, 4
BOND_SYMBOLS = {SINGLE: "-", DOUBLE: "=", TRIPLE: "#", AROMATIC: ":"}

ELEMENTS = ("B", "C", "N", "O", "F", "Si", "P", "S", "Cl", "Br", "I", "H")
ATOMIC_NUMBER = {"H": 1, "B": 5, "C": 6, "N": 7, "O": 8, "F": 9, "Si": 14,
                 "P": 15, "S": 16, "Cl": 17, "Br": 35, "I": 53}
GROUP = {"H": 1, "B": 13, "C": 14, "Si": 14, "N": 15, "P": 15, "O": 16, "S": 16,
         "F": 17, "Cl": 17, "Br": 17, "I": 17}
BASE_VALENCES = {"H": (1,), "B": (3,), "C": (4,), "Si": (4,), "N": (3,), "P": (3, 5),
                 "O": (2,), "S": (2, 4, 6), "F": (1,), "Cl": (1,), "Br": (1,), "I": (1,)}
AROMATIC_ELEMENTS = ("B", "C", "N", "O", "P", "S")
MAX_CHARGE = 2


def allowed_valences(element: str, charge: int) -> tuple[int, ...]:
    """Valence states for an element carrying a formal charge.

    Charged atoms follow the isoelectronic shift: group 13 loses a bond per
    positive charge, group 14 loses one per unit of either sign, groups 15-17
    gain one per positive charge.
    """
    base = BASE_VALENCES[element]
    if charge == 0:
        return base
    group = GROUP[element]
    if group in (1, 13):
        shifted = [v - charge for v in base]
    elif group == 14:
        shifted = [v - abs(charge) for v in base]
    else:
        shifted = [v + charge for v in base]
    out = tuple(sorted({v for v in shifted if v >= 0}))
    return out or (0,)


def bond_valence(order: int) -> int:
    """Valence contribution with aromatic bonds counted as 1 (their pi share is handled by kekulization)."""
    return 1 if order == AROMATIC else order


@dataclass(frozen=True)
class Atom:
    element: str
    charge: int = 0
    aromatic: bool = False
    explicit_h: int | None = None  # None: fill up to the lowest consistent valence
    atom_map: int | None = None


@dataclass(frozen=True)
class Bond:
    i: int
    j: int
    order: int = SINGLE

    def other(self, k: int) -> int:
        return self.j if k == self.i else self.i


@dataclass(frozen=True)
class Violation:
    atom: int
    kind: str
    detail: str


class MoleculeError(ValueError):
    pass


class Molecule:
    """Heavy-atom graph. Treated as immutable once built."""

    def __init__(self, atoms, bonds, intermediate: bool = False):
        self.atoms: tuple[Atom, ...] = tuple(atoms)
        self.bonds: tuple[Bond, ...] = tuple(bonds)
        self.intermediate = intermediate
        n = len(self.atoms)
        adj: list[list[tuple[int, int]]] = [[] for _ in range(n)]
        index: dict[tuple[int, int], int] = {}
        for b_idx, b in enumerate(self.bonds):
            if b.i == b.j:
                raise MoleculeError(f"self-loop on atom {b.i}")
            if not (0 <= b.i < n and 0 <= b.j < n):
                raise MoleculeError(f"bond {b_idx} references a missing atom")
            key = (min(b.i, b.j), max(b.i, b.j))
            if key in index:
                raise MoleculeError(f"duplicate bond between atoms {key}")
            index[key] = b_idx
            adj[b.i].append((b.j, b_idx))
            adj[b.j].append((b.i, b_idx))
        for row in adj:
            row.sort()
        self.adjacency = tuple(tuple(r) for r in adj)
        self._bond_index = index

    def __len__(self):
        return len(self.atoms)

    def __repr__(self):
        return f"Molecule({len(self.atoms)} atoms, {len(self.bonds)} bonds)"

    @property
    def n_atoms(self) -> int:
        return len(self.atoms)

    def neighbors(self, i: int) -> list[int]:
        return [j for j, _ in self.adjacency[i]]

    def bond_between(self, i: int, j: int) -> Bond | None:
        k = self._bond_index.get((min(i, j), max(i, j)))
        return None if k is None else self.bonds[k]

    def bond_id(self, i: int, j: int) -> int | None:
        return self._bond_index.get((min(i, j), max(i, j)))

    def heavy_degree(self, i: int) -> int:
        return len(self.adjacency[i])

    def bond_sum(self, i: int) -> int:
        """Bond valence with aromatic bonds counted as 1."""
        return sum(bond_valence(self.bonds[k].order) for _, k in self.adjacency[i])

    @cached_property
    def hydrogen_counts(self) -> tuple[int, ...]:
        return tuple(self._derive_h(i) for i in range(len(self.atoms)))

    def hydrogens(self, i: int) -> int:
        return self.hydrogen_counts[i]

    def _derive_h(self, i: int) -> int:
        a = self.atoms[i]
        if a.explicit_h is not None:
            return a.explicit_h
        s = self.bond_sum(i)
        if a.aromatic:
            return default_aromatic_h(a, s)
        return default_h(a, s)

    @cached_property
    def kekule(self) -> dict[int, int] | None:
        """Order (1 or 2) for every aromatic bond, or None when no assignment exists."""
        return kekulize(self)

    def kekule_order(self, bond_idx: int) -> int:
        b = self.bonds[bond_idx]
        if b.order != AROMATIC:
            return b.order
        k = self.kekule
        return 1 if k is None else k[bond_idx]

    @cached_property
    def ring_bond_flags(self) -> tuple[bool, ...]:
        from .rings import ring_bonds
        return tuple(ring_bonds(self))

    @cached_property
    def ring_atom_flags(self) -> tuple[bool, ...]:
        flags = [False] * len(self.atoms)
        for k, b in enumerate(self.bonds):
            if self.ring_bond_flags[k]:
                flags[b.i] = flags[b.j] = True
        return tuple(flags)

    @cached_property
    def rings(self) -> tuple[tuple[int, ...], ...]:
        from .rings import sssr
        return tuple(sssr(self))

    def components(self) -> list[list[int]]:
        seen = [False] * len(self.atoms)
        out = []
        for s in range(len(self.atoms)):
            if seen[s]:
                continue
            comp, stack = [], [s]
            seen[s] = True
            while stack:
                u = stack.pop()
                comp.append(u)
                for v, _ in self.adjacency[u]:
                    if not seen[v]:
                        seen[v] = True
                        stack.append(v)
            out.append(sorted(comp))
        return out

    def with_atoms(self, atoms) -> Molecule:
        return Molecule(atoms, self.bonds, self.intermediate)

    def strip_maps(self) -> Molecule:
        if all(a.atom_map is None for a in self.atoms):
            return self
        return self.with_atoms(replace(a, atom_map=None) for a in self.atoms)

    def permuted(self, perm) -> Molecule:
        """Relabel atoms so that old atom i becomes new atom perm[i]."""
        atoms = [None] * len(self.atoms)
        for old, new in enumerate(perm):
            atoms[new] = self.atoms[old]
        bonds = sorted((Bond(perm[b.i], perm[b.j], b.order) for b in self.bonds),
                       key=lambda b: (min(b.i, b.j), max(b.i, b.j)))
        return Molecule(atoms, bonds, self.intermediate)


def default_h(atom: Atom, bond_sum: int) -> int:
    """Implicit H for a non-aromatic atom: lowest valence state reaching the bond sum."""
    for v in allowed_valences(atom.element, atom.charge):
        if v >= bond_sum:
            return v - bond_sum
    return 0


def default_aromatic_h(atom: Atom, bond_sum: int) -> int:
    """Implicit H for an aromatic atom, reserving one valence unit for the pi system."""
    for v in allowed_valences(atom.element, atom.charge):
        if v >= bond_sum:
            return max(0, v - bond_sum - 1)
    return 0


def pi_need(m: Molecule, i: int) -> int:
    """How many double bonds an aromatic atom must receive from its aromatic bonds (0 or 1 when valid)."""
    a = m.atoms[i]
    s = m.bond_sum(i) + m.hydrogens(i)
    for v in allowed_valences(a.element, a.charge):
        if v >= s:
            # a mapped atom marks an attachment point and may keep an open valence
            return min(v - s, 1) if a.atom_map is not None else v - s
    return -1


def kekulize(m: Molecule, step_cap: int = 200_000) -> dict[int, int] | None:
    """Assign single/double orders to aromatic bonds via a perfect matching on pi-needing atoms."""
    arom = [k for k, b in enumerate(m.bonds) if b.order == AROMATIC]
    if not arom:
        return {}
    need = {}
    for b_idx in arom:
        b = m.bonds[b_idx]
        for x in (b.i, b.j):
            if x not in need:
                need[x] = pi_need(m, x)
    if any(v < 0 or v > 1 for v in need.values()):
        return None
    # exocyclic double bonds already satisfy the atom (e.g. pyridone carbon)
    cand: dict[int, list[tuple[int, int]]] = {x: [] for x, v in need.items() if v == 1}
    for b_idx in arom:
        b = m.bonds[b_idx]
        if b.i in cand and b.j in cand:
            cand[b.i].append((b.j, b_idx))
            cand[b.j].append((b.i, b_idx))
    matched: dict[int, int] = {}
    chosen: set[int] = set()
    steps = [0]

    def solve() -> bool:
        steps[0] += 1
        if steps[0] > step_cap:
            return False
        best, best_opts = None, None
        for x in cand:
            if x in matched:
                continue
            opts = [(y, k) for y, k in cand[x] if y not in matched]
            if best_opts is None or len(opts) < len(best_opts):
                best, best_opts = x, opts
                if not opts:
                    break
        if best is None:
            return True
        for y, k in best_opts:
            matched[best] = y
            matched[y] = best
            chosen.add(k)
            if solve():
                return True
            del matched[best]
            del matched[y]
            chosen.discard(k)
        return False

    if not solve():
        return None
    return {k: (2 if k in chosen else 1) for k in arom}


def valence_check(m: Molecule) -> list[Violation]:
    """Every valence problem in the molecule. Never raises."""
    out: list[Violation] = []
    for i, a in enumerate(m.atoms):
        if a.element not in ATOMIC_NUMBER:
            out.append(Violation(i, "element", f"unsupported element {a.element!r}"))
            continue
        if abs(a.charge) > MAX_CHARGE:
            out.append(Violation(i, "charge", f"charge {a.charge} out of range"))
        if a.explicit_h is not None and a.explicit_h < 0:
            out.append(Violation(i, "hydrogen", f"negative H count {a.explicit_h}"))
        if a.aromatic and a.element not in AROMATIC_ELEMENTS:
            out.append(Violation(i, "aromatic", f"{a.element} cannot be aromatic"))
        for _, k in m.adjacency[i]:
            b = m.bonds[k]
            if b.order == AROMATIC and not (m.atoms[b.i].aromatic and m.atoms[b.j].aromatic):
                out.append(Violation(i, "aromatic", f"aromatic bond {k} touches a non-aromatic atom"))
                break
    if out:
        return out
    kek = m.kekule
    if kek is None:
        bad = sorted({x for b in m.bonds if b.order == AROMATIC for x in (b.i, b.j)})
        out.append(Violation(bad[0] if bad else 0, "kekulize", f"no Kekule assignment for atoms {bad}"))
    for i, a in enumerate(m.atoms):
        if a.aromatic and not any(m.bonds[k].order == AROMATIC for _, k in m.adjacency[i]):
            out.append(Violation(i, "aromatic", "aromatic atom without aromatic bonds"))
        total = m.hydrogens(i)
        for _, k in m.adjacency[i]:
            total += m.kekule_order(k) if kek is not None else bond_valence(m.bonds[k].order)
        vmax = max(allowed_valences(a.element, a.charge))
        if total > vmax:
            out.append(Violation(i, "valence", f"{a.element}{a.charge:+d} uses {total} > {vmax}"))
    return out


def atom_valence_used(m: Molecule, i: int) -> int:
    return m.bond_sum(i) + m.hydrogens(i)
