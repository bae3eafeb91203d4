"""A small rooted-SMARTS matcher covering what atom-typing tables need.

Supported: bracket atoms with ``!``, ``&`` (or juxtaposition), ``,`` and ``;``;
primitives element symbol, ``#n``, ``Hn``, ``Xn``, charges, ``A``/``a``;
bare organic symbols; bond symbols ``- = # :`` (unspecified = single or aromatic);
branches. Ring closures are not needed and not supported.
"""
from __future__ import annotations

from dataclasses import dataclass

from ..chem.molecule import AROMATIC, ATOMIC_NUMBER, DOUBLE, SINGLE, TRIPLE, Molecule

_BONDS = {"-": SINGLE, "=": DOUBLE, "#": TRIPLE, ":": AROMATIC}


class SmartsError(ValueError):
    pass


@dataclass
class HGraph:
    """Molecule with every hydrogen made an explicit vertex."""
    z: list[int]
    charge: list[int]
    aromatic: list[bool]
    hcount: list[int]
    adj: list[list[tuple[int, int]]]  # (neighbor, bond order)
    n_heavy: int

    @classmethod
    def from_molecule(cls, m: Molecule) -> HGraph:
        n = len(m.atoms)
        z = [ATOMIC_NUMBER[a.element] for a in m.atoms]
        charge = [a.charge for a in m.atoms]
        arom = [a.aromatic for a in m.atoms]
        hcount = [m.hydrogens(i) for i in range(n)]
        adj = [[(j, m.bonds[k].order) for j, k in m.adjacency[i]] for i in range(n)]
        for i in range(n):
            for _ in range(hcount[i]):
                h = len(z)
                z.append(1)
                charge.append(0)
                arom.append(False)
                hcount.append(0)
                adj.append([(i, SINGLE)])
                adj[i].append((h, SINGLE))
        return cls(z, charge, arom, hcount, adj, n)

    def __len__(self):
        return len(self.z)


# atom expressions are nested tuples: ("and"|"or", [...]), ("not", e), ("prim", name, value)

def _parse_primitive(s: str, i: int):
    ch = s[i]
    if ch == "#":
        j = i + 1
        while j < len(s) and s[j].isdigit():
            j += 1
        return ("prim", "z", int(s[i + 1:j])), j
    if ch in "+-":
        sign = 1 if ch == "+" else -1
        j = i + 1
        if j < len(s) and s[j].isdigit():
            k = j
            while k < len(s) and s[k].isdigit():
                k += 1
            return ("prim", "charge", sign * int(s[j:k])), k
        val = sign
        while j < len(s) and s[j] == ch:
            val += sign
            j += 1
        return ("prim", "charge", val), j
    if ch in "HX":
        j = i + 1
        while j < len(s) and s[j].isdigit():
            j += 1
        val = int(s[i + 1:j]) if j > i + 1 else 1
        return ("prim", "h" if ch == "H" else "x", val), j
    for sym in ("Cl", "Br"):
        if s.startswith(sym, i):
            return ("prim", "elem", (ATOMIC_NUMBER[sym], False)), i + 2
    if ch == "A":
        return ("prim", "aliphatic", True), i + 1
    if ch == "a":
        return ("prim", "aromatic", True), i + 1
    if ch in "BCNOPSFI":
        return ("prim", "elem", (ATOMIC_NUMBER[ch], False)), i + 1
    if ch in "bcnops":
        return ("prim", "elem", (ATOMIC_NUMBER[ch.upper()], True)), i + 1
    raise SmartsError(f"unsupported SMARTS primitive at {s[i:]!r}")


def _parse_expr(s: str):
    """Precedence: '!' > '&'/implicit > ',' > ';'."""
    def low(part):
        return ("and", [mid(p) for p in part.split(";")])

    def mid(part):
        return ("or", [high(p) for p in part.split(",")])

    def high(part):
        terms, i = [], 0
        while i < len(part):
            if part[i] == "&":
                i += 1
                continue
            neg = False
            while part[i] == "!":
                neg = not neg
                i += 1
            prim, i = _parse_primitive(part, i)
            terms.append(("not", prim) if neg else prim)
        return ("and", terms)

    return low(s)


def _eval(e, g: HGraph, i: int) -> bool:
    tag = e[0]
    if tag == "and":
        return all(_eval(x, g, i) for x in e[1])
    if tag == "or":
        return any(_eval(x, g, i) for x in e[1])
    if tag == "not":
        return not _eval(e[1], g, i)
    _, name, val = e
    if name == "z":
        return g.z[i] == val
    if name == "elem":
        return g.z[i] == val[0] and g.aromatic[i] == val[1]
    if name == "charge":
        return g.charge[i] == val
    if name == "h":
        return g.hcount[i] == val
    if name == "x":
        return len(g.adj[i]) == val
    if name == "aliphatic":
        return not g.aromatic[i]
    if name == "aromatic":
        return g.aromatic[i]
    raise SmartsError(name)


@dataclass
class _PNode:
    expr: tuple
    children: list  # (bond order or None, _PNode)


class Pattern:
    def __init__(self, text: str):
        self.text = text
        self.root = self._parse(text)

    @staticmethod
    def _parse(s: str) -> _PNode:
        pos = 0

        def atom():
            nonlocal pos
            if s[pos] == "[":
                end = s.index("]", pos)
                e = _parse_expr(s[pos + 1:end])
                pos = end + 1
                return _PNode(e, [])
            prim, nxt = _parse_primitive(s, pos)
            pos = nxt
            return _PNode(prim, [])

        def chain(head: _PNode):
            nonlocal pos
            cur = head
            while pos < len(s) and s[pos] != ")":
                if s[pos] == "(":
                    pos += 1
                    bond = None
                    if s[pos] in _BONDS:
                        bond = _BONDS[s[pos]]
                        pos += 1
                    child = atom()
                    chain(child)
                    if s[pos] != ")":
                        raise SmartsError(f"unbalanced branch in {s!r}")
                    pos += 1
                    cur.children.append((bond, child))
                    continue
                bond = None
                if s[pos] in _BONDS:
                    bond = _BONDS[s[pos]]
                    pos += 1
                child = atom()
                cur.children.append((bond, child))
                cur = child

        root = atom()
        chain(root)
        if pos != len(s):
            raise SmartsError(f"trailing text in {s!r}")
        return root

    def matches_at(self, g: HGraph, i: int) -> bool:
        def bond_ok(want, have):
            if want is None:
                return have in (SINGLE, AROMATIC)
            return want == have

        def match(node: _PNode, at: int, used: frozenset):
            # yields every set of used vertices under which node's subtree fits at ``at``
            if _eval(node.expr, g, at):
                yield from assign(node.children, 0, at, used | {at})

        def assign(children, k, at, used):
            if k == len(children):
                yield used
                return
            bond, child = children[k]
            for nb, order in g.adj[at]:
                if nb in used or not bond_ok(bond, order):
                    continue
                for u2 in match(child, nb, used):
                    yield from assign(children, k + 1, at, u2)

        return next(match(self.root, i, frozenset()), None) is not None
