"""SMILES reading and deterministic canonical writing."""
from __future__ import annotations

from dataclasses import replace

from .molecule import (AROMATIC, AROMATIC_ELEMENTS, ATOMIC_NUMBER, DOUBLE, SINGLE, TRIPLE, Atom,
                       Bond, Molecule, default_aromatic_h, default_h, valence_check)

ORGANIC = ("B", "C", "N", "O", "P", "S", "F", "Cl", "Br", "I")
AROMATIC_ORGANIC = ("b", "c", "n", "o", "p", "s")
BOND_CHARS = {"-": SINGLE, "=": DOUBLE, "#": TRIPLE, ":": AROMATIC, "/": SINGLE, "\\": SINGLE}


class SmilesError(ValueError):
    """Base class for SMILES problems; carries the byte offset of the fault."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} at offset {offset}")
        self.offset = offset


class SyntaxSmilesError(SmilesError):
    pass


class UnbalancedError(SyntaxSmilesError):
    pass


class UnsupportedElementError(SmilesError):
    pass


class KekulizeError(SmilesError):
    pass


class ValenceSmilesError(SmilesError):
    pass


class WriteError(ValueError):
    pass


class _Reader:
    def __init__(self, text: str):
        self.text = text
        self.pos = 0
        self.atoms: list[dict] = []
        self.bonds: list[tuple[int, int, int | None]] = []  # order None = implicit
        self.offsets: list[int] = []

    def error(self, cls, msg, pos=None):
        raise cls(msg, self.pos if pos is None else pos)

    def peek(self):
        return self.text[self.pos] if self.pos < len(self.text) else ""

    def parse(self):
        text = self.text
        prev = -1
        pending_bond: str | None = None
        branch_stack: list[int] = []
        ring_open: dict[int, tuple[int, str | None, int]] = {}
        expect_atom = True
        while self.pos < len(text):
            ch = text[self.pos]
            if ch == "(":
                if prev < 0 or pending_bond is not None:
                    self.error(SyntaxSmilesError, "branch without a preceding atom")
                branch_stack.append(prev)
                self.pos += 1
                continue
            if ch == ")":
                if not branch_stack:
                    self.error(UnbalancedError, "unmatched ')'")
                if pending_bond is not None or expect_atom:
                    self.error(SyntaxSmilesError, "empty branch or dangling bond")
                prev = branch_stack.pop()
                self.pos += 1
                continue
            if ch in BOND_CHARS:
                if prev < 0 or pending_bond is not None:
                    self.error(SyntaxSmilesError, f"misplaced bond symbol {ch!r}")
                pending_bond = ch
                expect_atom = True
                self.pos += 1
                continue
            if ch == ".":
                if prev < 0 or pending_bond is not None or branch_stack:
                    self.error(SyntaxSmilesError, "misplaced '.'")
                prev = -1
                expect_atom = True
                self.pos += 1
                continue
            if ch.isdigit() or ch == "%":
                start = self.pos
                if prev < 0:
                    self.error(SyntaxSmilesError, "ring closure before any atom")
                if ch == "%":
                    digits = text[self.pos + 1:self.pos + 3]
                    if len(digits) != 2 or not digits.isdigit():
                        self.error(SyntaxSmilesError, "malformed %nn ring closure")
                    num = int(digits)
                    self.pos += 3
                else:
                    num = int(ch)
                    self.pos += 1
                if num in ring_open:
                    other, sym, _ = ring_open.pop(num)
                    if sym is not None and pending_bond is not None and BOND_CHARS[sym] != BOND_CHARS[pending_bond]:
                        self.error(SyntaxSmilesError, "conflicting ring-closure bond symbols", start)
                    if other == prev or any({a, b} == {other, prev} for a, b, _ in self.bonds):
                        self.error(SyntaxSmilesError, "ring closure duplicates a bond", start)
                    sym = pending_bond if pending_bond is not None else sym
                    self.bonds.append((other, prev, BOND_CHARS[sym] if sym else None))
                else:
                    ring_open[num] = (prev, pending_bond, start)
                pending_bond = None
                continue
            start = self.pos
            idx = self.read_atom()
            self.offsets.append(start)
            if prev >= 0:
                self.bonds.append((prev, idx, BOND_CHARS[pending_bond] if pending_bond else None))
            pending_bond = None
            prev = idx
            expect_atom = False
        if branch_stack:
            self.error(UnbalancedError, "unclosed '('", len(text))
        if ring_open:
            _, _, where = min(ring_open.values(), key=lambda t: t[2])
            self.error(UnbalancedError, "unclosed ring bond", where)
        if pending_bond is not None or expect_atom:
            self.error(SyntaxSmilesError, "SMILES ends with a dangling bond", len(text))

    def read_atom(self) -> int:
        text = self.text
        ch = text[self.pos]
        if ch == "[":
            return self.read_bracket()
        for sym in ("Cl", "Br"):
            if text.startswith(sym, self.pos):
                self.pos += 2
                return self.add(sym, False, None, 0, None, True)
        if ch in "BCNOPSFI":
            self.pos += 1
            return self.add(ch, False, None, 0, None, True)
        if ch in "bcnops":
            self.pos += 1
            return self.add(ch.upper(), True, None, 0, None, True)
        if ch.isalpha():
            self.error(UnsupportedElementError, f"unsupported element {ch!r}")
        self.error(SyntaxSmilesError, f"unexpected character {ch!r}")

    def read_bracket(self) -> int:
        text = self.text
        start = self.pos
        end = text.find("]", start)
        if end < 0:
            self.error(UnbalancedError, "unclosed '['")
        body = text[start + 1:end]
        i = 0
        while i < len(body) and body[i].isdigit():
            i += 1  # isotope, discarded
        sym = None
        for cand in ("Cl", "Br", "Si", "se", "as"):
            if body.startswith(cand, i):
                sym = cand
                break
        if sym is None and i < len(body) and body[i].isalpha():
            sym = body[i]
            if i + 1 < len(body) and body[i + 1].islower() and body[i + 1] not in "h":
                two = body[i:i + 2]
                if two.capitalize() not in ATOMIC_NUMBER:
                    self.error(UnsupportedElementError, f"unsupported element {two!r}", start + 1 + i)
                sym = two
        if sym is None:
            self.error(SyntaxSmilesError, "bracket atom without element", start + 1)
        aromatic = sym[0].islower()
        element = sym.capitalize()
        if element not in ATOMIC_NUMBER or (aromatic and element not in AROMATIC_ELEMENTS):
            self.error(UnsupportedElementError, f"unsupported element {sym!r}", start + 1 + i)
        i += len(sym)
        while i < len(body) and body[i] == "@":
            i += 1
        if body.startswith(("TH", "AL", "SP", "TB", "OH"), i):
            i += 2
            while i < len(body) and body[i].isdigit():
                i += 1
        hcount = 0
        if i < len(body) and body[i] == "H":
            i += 1
            hcount = 1
            if i < len(body) and body[i].isdigit():
                hcount = int(body[i])
                i += 1
        charge = 0
        if i < len(body) and body[i] in "+-":
            sign = 1 if body[i] == "+" else -1
            i += 1
            if i < len(body) and body[i].isdigit():
                charge = sign * int(body[i])
                i += 1
            else:
                charge = sign
                while i < len(body) and body[i] == ("+" if sign > 0 else "-"):
                    charge += sign
                    i += 1
        amap = None
        if i < len(body) and body[i] == ":":
            j = i + 1
            while j < len(body) and body[j].isdigit():
                j += 1
            if j == i + 1:
                self.error(SyntaxSmilesError, "empty atom map", start + 1 + i)
            amap = int(body[i + 1:j])
            i = j
        if i != len(body):
            self.error(SyntaxSmilesError, f"cannot parse bracket atom {body!r}", start)
        if abs(charge) > 2:
            self.error(SyntaxSmilesError, f"charge {charge} out of supported range", start)
        self.pos = end + 1
        return self.add(element, aromatic, hcount, charge, amap, False)

    def add(self, element, aromatic, hcount, charge, amap, organic) -> int:
        self.atoms.append(dict(element=element, aromatic=aromatic, h=hcount, charge=charge,
                               amap=amap, organic=organic))
        return len(self.atoms) - 1


def parse_smiles(text: str, strict: bool = True) -> Molecule:
    """Read a SMILES string into a heavy-atom Molecule.

    With ``strict`` the aromatic systems must admit a Kekule structure and all
    atoms must respect the valence table.
    """
    if not text or not text.strip():
        raise SyntaxSmilesError("empty SMILES", 0)
    text = text.strip()
    r = _Reader(text)
    r.parse()
    raw_atoms, raw_bonds, offsets = r.atoms, r.bonds, r.offsets

    # fold explicit hydrogen atoms into their heavy neighbours
    h_atoms = {k for k, a in enumerate(raw_atoms) if a["element"] == "H"}
    for k in h_atoms:
        nbrs = [b if a == k else a for a, b, _ in raw_bonds if k in (a, b)]
        if len(nbrs) != 1 or nbrs[0] in h_atoms or raw_atoms[k]["charge"] or raw_atoms[k]["h"]:
            raise UnsupportedElementError("hydrogen atom that is not a simple substituent", offsets[k])
        host = raw_atoms[nbrs[0]]
        if not host["organic"]:
            host["h"] += 1
    keep = [k for k in range(len(raw_atoms)) if k not in h_atoms]
    remap = {old: new for new, old in enumerate(keep)}
    bonds_in = [(remap[a], remap[b], o) for a, b, o in raw_bonds if a in remap and b in remap]
    kept = [raw_atoms[k] for k in keep]
    kept_offsets = [offsets[k] for k in keep]

    # implicit bonds between aromatic atoms are aromatic only when they close a ring
    provisional = []
    for a, b, o in bonds_in:
        if o is None:
            o = AROMATIC if kept[a]["aromatic"] and kept[b]["aromatic"] else SINGLE
        provisional.append(Bond(a, b, o))
    skeleton = Molecule([Atom("C")] * len(kept), provisional)
    in_ring = skeleton.ring_bond_flags
    bonds = []
    for k, ((a, b, o), pb) in enumerate(zip(bonds_in, provisional)):
        order = pb.order
        if o is None and order == AROMATIC and not in_ring[k]:
            order = SINGLE
        if order == AROMATIC and not (kept[a]["aromatic"] and kept[b]["aromatic"]):
            raise SyntaxSmilesError("aromatic bond between non-aromatic atoms", kept_offsets[b])
        bonds.append(Bond(a, b, order))

    atoms = [Atom(d["element"], d["charge"], d["aromatic"], None if d["organic"] else d["h"], d["amap"])
             for d in kept]
    mol = Molecule(atoms, bonds)
    # freeze hydrogen counts on aromatic atoms; drop redundant explicit counts elsewhere
    fixed = []
    for i, a in enumerate(atoms):
        s = mol.bond_sum(i)
        if a.aromatic:
            h = a.explicit_h if a.explicit_h is not None else default_aromatic_h(a, s)
            fixed.append(replace(a, explicit_h=h))
        elif a.explicit_h is not None and a.explicit_h == default_h(a, s):
            fixed.append(replace(a, explicit_h=None))
        else:
            fixed.append(a)
    mol = Molecule(fixed, bonds)
    if strict:
        for v in valence_check(mol):
            cls = KekulizeError if v.kind == "kekulize" else ValenceSmilesError
            if v.kind == "aromatic":
                cls = KekulizeError
            raise cls(v.detail, kept_offsets[v.atom] if kept_offsets else 0)
    return mol


# ---------------------------------------------------------------- writing


def _initial_invariants(m: Molecule):
    ring = m.ring_atom_flags
    return [(ATOMIC_NUMBER[a.element], a.charge, a.aromatic, m.heavy_degree(i), m.hydrogens(i),
             ring[i], a.atom_map or 0) for i, a in enumerate(m.atoms)]


def _ranks_from_keys(keys):
    uniq = sorted(set(keys))
    pos = {k: r for r, k in enumerate(uniq)}
    return [pos[k] for k in keys]


def refine(m: Molecule, ranks: list[int]) -> list[int]:
    """Iterate neighbourhood refinement until the partition stops splitting."""
    n_classes = len(set(ranks))
    while True:
        keys = []
        for i in range(len(m.atoms)):
            nb = sorted((m.bonds[k].order, ranks[j]) for j, k in m.adjacency[i])
            keys.append((ranks[i], tuple(nb)))
        new = _ranks_from_keys(keys)
        n_new = len(set(new))
        if n_new == n_classes:
            return new
        ranks, n_classes = new, n_new


def symmetry_classes(m: Molecule) -> list[int]:
    """Refined atom colours; atoms related by a graph automorphism always share a colour."""
    return refine(m, _ranks_from_keys(_initial_invariants(m)))


def _atom_token(m: Molecule, i: int) -> str:
    a = m.atoms[i]
    h = m.hydrogens(i)
    s = m.bond_sum(i)
    sym = a.element.lower() if a.aromatic else a.element
    if a.element in ORGANIC and a.charge == 0 and a.atom_map is None:
        implied = default_aromatic_h(a, s) if a.aromatic else default_h(a, s)
        if implied == h:
            return sym
    out = "[" + sym
    if h:
        out += "H" if h == 1 else f"H{h}"
    if a.charge:
        sign = "+" if a.charge > 0 else "-"
        out += sign if abs(a.charge) == 1 else f"{sign}{abs(a.charge)}"
    if a.atom_map is not None:
        out += f":{a.atom_map}"
    return out + "]"


def _bond_token(m: Molecule, b: Bond) -> str:
    if b.order == AROMATIC:
        return ""
    if b.order == SINGLE:
        return "-" if m.atoms[b.i].aromatic and m.atoms[b.j].aromatic else ""
    return "=" if b.order == DOUBLE else "#"


def _write_with_ranks(m: Molecule, ranks: list[int]) -> str:
    n = len(m.atoms)
    visited = [False] * n
    # pass 1: DFS to classify ring-closure bonds
    closures: dict[int, list[tuple[int, int]]] = {i: [] for i in range(n)}  # atom -> [(bond, other)]
    tree_children: dict[int, list[int]] = {i: [] for i in range(n)}
    roots = []
    closure_bonds = set()
    for root in sorted(range(n), key=lambda j: ranks[j]):
        if visited[root]:
            continue
        roots.append(root)
        visited[root] = True
        stack = [(root, -1, iter(sorted(m.adjacency[root], key=lambda t: ranks[t[0]])))]
        while stack:
            u, via, it = stack[-1]
            pushed = False
            for v, k in it:
                if k == via or k in closure_bonds:
                    continue
                if visited[v]:
                    closure_bonds.add(k)
                    closures[v].append((k, u))  # opened at the earlier atom v
                    closures[u].append((k, v))
                    continue
                visited[v] = True
                tree_children[u].append(v)
                stack.append((v, k, iter(sorted(m.adjacency[v], key=lambda t: ranks[t[0]]))))
                pushed = True
                break
            if not pushed:
                stack.pop()
    # pass 2: emit
    parts: list[str] = []
    free_digits = list(range(1, 100))
    open_digit: dict[int, int] = {}

    def ring_label(d):
        return str(d) if d < 10 else f"%{d}"

    def rec(u, bond):
        if bond is not None:
            parts.append(_bond_token(m, bond))
        parts.append(_atom_token(m, u))
        for k, other in sorted(closures[u], key=lambda t: (ranks[t[1]], t[0])):
            b = m.bonds[k]
            if k in open_digit:
                d = open_digit.pop(k)
                parts.append(_bond_token(m, b) + ring_label(d))
                free_digits.append(d)
                free_digits.sort()
            else:
                d = free_digits.pop(0)
                open_digit[k] = d
                parts.append(ring_label(d))
        kids = tree_children[u]
        for c_idx, c in enumerate(kids):
            b = m.bond_between(u, c)
            if c_idx < len(kids) - 1:
                parts.append("(")
                rec(c, b)
                parts.append(")")
            else:
                rec(c, b)

    for r_idx, root in enumerate(roots):
        if r_idx:
            parts.append(".")
        rec(root, None)
    return "".join(parts)


def canonical_ranks(m: Molecule, leaf_budget: int = 16) -> list[int]:
    """Total atom order used by the writer; ties resolved by the lexicographically smallest output."""
    base = symmetry_classes(m)
    n = len(m.atoms)
    best: list = [None, None]
    budget = [leaf_budget]

    def explore(ranks):
        if len(set(ranks)) == n:
            s = _write_with_ranks(m, ranks)
            budget[0] -= 1
            if best[0] is None or s < best[0]:
                best[0], best[1] = s, ranks
            return
        counts = {}
        for r in ranks:
            counts[r] = counts.get(r, 0) + 1
        tied = min(r for r, c in counts.items() if c > 1)
        members = [i for i in range(n) if ranks[i] == tied]
        for idx, atom in enumerate(members):
            if idx and budget[0] <= 0:
                break
            # atom keeps 2*tied, the rest of its class move to 2*tied+1
            split = [2 * r + (1 if r == tied and i != atom else 0) for i, r in enumerate(ranks)]
            explore(refine(m, _ranks_from_keys(split)))

    explore(base)
    return best[1]


def write_smiles(m: Molecule, check: bool = True) -> str:
    """Canonical SMILES. Raises WriteError when the molecule breaks valence rules."""
    if not m.atoms:
        return ""
    if check:
        if m.intermediate:
            raise WriteError("molecule is flagged as an open-valence intermediate")
        bad = valence_check(m)
        if bad:
            raise WriteError(f"cannot write molecule with valence problems: {bad[0].detail} (atom {bad[0].atom})")
    return _write_with_ranks(m, canonical_ranks(m))


def canonical_smiles(text_or_mol) -> str:
    m = parse_smiles(text_or_mol) if isinstance(text_or_mol, str) else text_or_mol
    return write_smiles(m)
