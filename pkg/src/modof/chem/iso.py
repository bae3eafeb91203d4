"""Small-graph isomorphism by backtracking, used to align node substructures."""
from __future__ import annotations

from collections.abc import Iterator

from .molecule import Molecule


def _atom_key(m: Molecule, i: int, with_h: bool):
    a = m.atoms[i]
    key = (a.element, a.charge, a.aromatic, m.heavy_degree(i))
    return key + (m.hydrogens(i),) if with_h else key


def _search_order(m: Molecule) -> list[int]:
    order, seen = [], set()
    for s in range(len(m.atoms)):
        if s in seen:
            continue
        seen.add(s)
        queue = [s]
        while queue:
            u = queue.pop(0)
            order.append(u)
            for v, _ in m.adjacency[u]:
                if v not in seen:
                    seen.add(v)
                    queue.append(v)
    return order


def isomorphisms(a: Molecule, b: Molecule, with_h: bool = False, seed: dict[int, int] | None = None,
                 limit: int | None = None) -> Iterator[dict[int, int]]:
    """Yield atom maps a -> b preserving element, charge, aromaticity and bond orders.

    ``seed`` fixes part of the map in advance.
    """
    if len(a.atoms) != len(b.atoms) or len(a.bonds) != len(b.bonds):
        return
    ka = [_atom_key(a, i, with_h) for i in range(len(a.atoms))]
    kb = [_atom_key(b, i, with_h) for i in range(len(b.atoms))]
    if sorted(ka) != sorted(kb):
        return
    order = _search_order(a)
    fwd: dict[int, int] = dict(seed or {})
    used = set(fwd.values())
    for x, y in fwd.items():
        if ka[x] != kb[y]:
            return
    count = [0]

    def consistent(x, y):
        for nx_, k in a.adjacency[x]:
            if nx_ in fwd:
                bk = b.bond_id(y, fwd[nx_])
                if bk is None or b.bonds[bk].order != a.bonds[k].order:
                    return False
        return True

    def rec(pos):
        if pos == len(order):
            yield dict(fwd)
            return
        x = order[pos]
        if x in fwd:
            if consistent(x, fwd[x]):
                yield from rec(pos + 1)
            return
        # prefer candidates adjacent to an already-mapped neighbour
        anchor = next((fwd[n] for n, _ in a.adjacency[x] if n in fwd), None)
        pool = [v for v, _ in b.adjacency[anchor]] if anchor is not None else range(len(b.atoms))
        for y in pool:
            if y in used or kb[y] != ka[x] or not consistent(x, y):
                continue
            fwd[x] = y
            used.add(y)
            yield from rec(pos + 1)
            del fwd[x]
            used.discard(y)

    for mapping in rec(0):
        yield mapping
        count[0] += 1
        if limit is not None and count[0] >= limit:
            return


def find_isomorphism(a: Molecule, b: Molecule, with_h: bool = False, seed=None) -> dict[int, int] | None:
    return next(isomorphisms(a, b, with_h, seed, limit=1), None)
