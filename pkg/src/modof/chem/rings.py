"""Ring perception: ring-bond flags and the smallest set of smallest rings."""
from __future__ import annotations

from collections import deque


def ring_bonds(m) -> list[bool]:
    """True for every bond that lies on a cycle (i.e. is not a bridge)."""
    n = len(m.atoms)
    disc = [-1] * n
    low = [0] * n
    is_bridge = [False] * len(m.bonds)
    t = 0
    for root in range(n):
        if disc[root] >= 0:
            continue
        disc[root] = low[root] = t
        t += 1
        # iterative DFS: (vertex, bond used to enter, neighbor iterator)
        stack = [(root, -1, iter(m.adjacency[root]))]
        while stack:
            u, via, it = stack[-1]
            advanced = False
            for v, k in it:
                if k == via:
                    continue
                if disc[v] < 0:
                    disc[v] = low[v] = t
                    t += 1
                    stack.append((v, k, iter(m.adjacency[v])))
                    advanced = True
                    break
                low[u] = min(low[u], disc[v])
            if advanced:
                continue
            stack.pop()
            if stack:
                p = stack[-1][0]
                low[p] = min(low[p], low[u])
                if low[u] > disc[p]:
                    is_bridge[via] = True
    return [not x for x in is_bridge]


def _bfs_tree(m, src):
    dist = {src: 0}
    parent = {src: -1}
    q = deque([src])
    while q:
        u = q.popleft()
        for v, _ in m.adjacency[u]:
            if v not in dist:
                dist[v] = dist[u] + 1
                parent[v] = u
                q.append(v)
    return dist, parent


def _path(parent, v):
    out = []
    while v != -1:
        out.append(v)
        v = parent[v]
    return out


def _canonical_cycle(cycle):
    """Rotate/reflect an atom cycle so it starts at its smallest atom, going toward the smaller neighbour."""
    k = cycle.index(min(cycle))
    rot = cycle[k:] + cycle[:k]
    rev = [rot[0]] + rot[1:][::-1]
    return tuple(min(rot, rev))


def sssr(m) -> list[tuple[int, ...]]:
    """Smallest set of smallest rings, each as an ordered atom cycle.

    Candidates are Horton cycles (two shortest paths from a vertex joined by an
    edge), taken shortest first and kept when independent over GF(2).
    """
    flags = m.ring_bond_flags
    nring_bonds = sum(flags)
    if nring_bonds == 0:
        return []
    ring_atoms = sorted({x for k, b in enumerate(m.bonds) if flags[k] for x in (b.i, b.j)})
    n_comp = 0
    seen = set()
    for s in ring_atoms:
        if s in seen:
            continue
        n_comp += 1
        stack = [s]
        seen.add(s)
        while stack:
            u = stack.pop()
            for v, k in m.adjacency[u]:
                if flags[k] and v not in seen:
                    seen.add(v)
                    stack.append(v)
    target = nring_bonds - len(ring_atoms) + n_comp

    trees = {v: _bfs_tree(m, v) for v in ring_atoms}
    cands = {}
    for v in ring_atoms:
        dist, parent = trees[v]
        for k, b in enumerate(m.bonds):
            if not flags[k]:
                continue
            x, y = b.i, b.j
            if x not in dist or y not in dist:
                continue
            px, py = _path(parent, x), _path(parent, y)
            if set(px) & set(py) != {v}:
                continue
            # px runs x..v, so reversed it is v..x; then y..(child of v)
            cyc = list(reversed(px)) + py[:-1]
            if len(cyc) < 3:
                continue
            c = _canonical_cycle(cyc)
            cands[c] = True
    bond_pos = {}
    for k, b in enumerate(m.bonds):
        if flags[k]:
            bond_pos[(min(b.i, b.j), max(b.i, b.j))] = len(bond_pos)

    def mask(c):
        out = 0
        for a, b in zip(c, c[1:] + c[:1]):
            out |= 1 << bond_pos[(min(a, b), max(a, b))]
        return out

    basis: dict[int, int] = {}  # pivot bit -> reduced vector
    chosen = []
    for c in sorted(cands, key=lambda c: (len(c), c)):
        v = mask(c)
        while v:
            hb = v.bit_length() - 1
            if hb in basis:
                v ^= basis[hb]
            else:
                basis[hb] = v
                chosen.append(c)
                break
        if len(chosen) == target:
            break
    return chosen


def largest_ring_size(m) -> int:
    return max((len(r) for r in m.rings), default=0)
