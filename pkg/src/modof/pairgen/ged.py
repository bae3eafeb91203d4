"""Exact graph edit distance between labelled junction trees.

Unit costs for node insertion/deletion and edge insertion/deletion; nodes may
only be matched to nodes carrying the same label (no substitutions).
"""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from itertools import product

from ..chem.jtree import JunctionTree

DEFAULT_NODE_CAP = 40
DEFAULT_BUDGET = 2_000_000


class GEDError(ValueError):
    pass


class GEDBudgetExceeded(GEDError):
    pass


@dataclass
class EditPath:
    matched: list[tuple[int, int]]
    removed: set[int]
    added: set[int]
    edges_deleted: list[tuple[int, int]] = field(default_factory=list)
    edges_added: list[tuple[int, int]] = field(default_factory=list)

    @property
    def cost(self) -> int:
        return len(self.removed) + len(self.added) + len(self.edges_deleted) + len(self.edges_added)

    def image(self, u: int) -> int | None:
        for a, b in self.matched:
            if a == u:
                return b
        return None

    def preimage(self, v: int) -> int | None:
        for a, b in self.matched:
            if b == v:
                return a
        return None


def _labels_edges(t):
    """Accept a JunctionTree or a (labels, edges) pair."""
    if isinstance(t, JunctionTree):
        return t.type_ids(), [tuple(e) for e in t.edges]
    labels, edges = t
    return list(labels), [tuple(e) for e in edges]


def _adjacency(n, edges):
    adj = [set() for _ in range(n)]
    for u, v in edges:
        adj[u].add(v)
        adj[v].add(u)
    return adj


def path_from_mapping(tx, ty, mapping: dict[int, int]) -> EditPath:
    """Edit path induced by a partial node mapping tx -> ty."""
    lx, ex = _labels_edges(tx)
    ly, ey = _labels_edges(ty)
    inv = {v: u for u, v in mapping.items()}
    ey_set = {(min(a, b), max(a, b)) for a, b in ey}
    ex_set = {(min(a, b), max(a, b)) for a, b in ex}
    deleted, added = [], []
    for u, w in sorted(ex_set):
        fu, fw = mapping.get(u), mapping.get(w)
        if fu is None or fw is None or (min(fu, fw), max(fu, fw)) not in ey_set:
            deleted.append((u, w))
    for v, y in sorted(ey_set):
        iv, iy = inv.get(v), inv.get(y)
        if iv is None or iy is None or (min(iv, iy), max(iv, iy)) not in ex_set:
            added.append((v, y))
    return EditPath(sorted(mapping.items()), set(range(len(lx))) - set(mapping),
                    set(range(len(ly))) - set(inv), deleted, added)


def _bfs_order(n, adj):
    order, seen = [], set()
    for s in range(n):
        if s in seen:
            continue
        seen.add(s)
        queue = [s]
        while queue:
            u = queue.pop(0)
            order.append(u)
            for v in sorted(adj[u]):
                if v not in seen:
                    seen.add(v)
                    queue.append(v)
    return order


def tree_edit_distance(tx, ty, node_cap: int = DEFAULT_NODE_CAP, budget: int = DEFAULT_BUDGET) -> EditPath:
    """Depth-first branch and bound over node mappings.

    tx nodes are assigned in breadth-first order; each is tried against unused
    same-label ty nodes, cheapest extension first with ties by node index, and
    finally against deletion. The bound
    adds the label-multiset difference of the unassigned nodes to the
    difference in the number of still-open edges on each side.
    """
    lx, ex = _labels_edges(tx)
    ly, ey = _labels_edges(ty)
    maps = _search(lx, ex, ly, ey, node_cap, budget, None, 1)
    return path_from_mapping((lx, ex), (ly, ey), maps[0])


def optimal_edit_paths(tx, ty, cost: int | None = None, limit: int = 64, node_cap: int = DEFAULT_NODE_CAP,
                       budget: int = DEFAULT_BUDGET) -> list[EditPath]:
    """Up to ``limit`` distinct minimum-cost paths, in the order the search meets them.

    The first one equals :func:`tree_edit_distance`. Pass ``cost`` when the
    distance is already known to skip the first search.
    """
    lx, ex = _labels_edges(tx)
    ly, ey = _labels_edges(ty)
    if cost is None:
        cost = path_from_mapping((lx, ex), (ly, ey), _search(lx, ex, ly, ey, node_cap, budget, None, 1)[0]).cost
    maps = _search(lx, ex, ly, ey, node_cap, budget, cost, limit)
    return [path_from_mapping((lx, ex), (ly, ey), m) for m in maps]


class _Enough(Exception):
    pass


def _search(lx, ex, ly, ey, node_cap, budget, bound, limit) -> list[dict[int, int]]:
    """Best mapping (``bound`` None) or up to ``limit`` mappings of total cost exactly ``bound``."""
    nx, ny = len(lx), len(ly)
    if nx > node_cap or ny > node_cap:
        raise GEDError(f"tree size {max(nx, ny)} exceeds the cap of {node_cap} nodes")
    ax, ay = _adjacency(nx, ex), _adjacency(ny, ey)
    order = _bfs_order(nx, ax)
    pos = {u: k for k, u in enumerate(order)}
    back = [[w for w in ax[u] if pos[w] < pos[u]] for u in order]
    by_label: dict[int, list[int]] = {}
    for v, lab in enumerate(ly):
        by_label.setdefault(lab, []).append(v)

    rem_x, rem_y = Counter(lx), Counter(ly)
    st = {
        "gap": sum(abs(rem_x[k] - rem_y[k]) for k in set(rem_x) | set(rem_y)),
        "open_x": len(ex),   # tx edges with an unprocessed endpoint
        "open_y": len(ey),   # ty edges with an unused endpoint
        "best": bound,
        "steps": 0,
    }
    mapping: dict[int, int] = {}
    inv: list[int | None] = [None] * ny
    found: list[dict[int, int]] = []

    def worth(c):
        if st["best"] is None:
            return True
        return c <= st["best"] if bound is not None else c < st["best"]

    def rec(k, cost):
        st["steps"] += 1
        if st["steps"] > budget:
            raise GEDBudgetExceeded(f"edit-distance search exceeded {budget} expansions")
        if k == nx:
            total = cost + sum(1 for v in range(ny) if inv[v] is None) + st["open_y"]
            if bound is not None:
                if total == bound:
                    found.append(dict(mapping))
                    if len(found) >= limit:
                        raise _Enough
            elif st["best"] is None or total < st["best"]:
                st["best"] = total
                found[:] = [dict(mapping)]
            return
        u = order[k]
        lab = lx[u]
        st["open_x"] -= len(back[k])
        options = []
        for v in by_label.get(lab, ()):
            if inv[v] is not None:
                continue
            add = sum(1 for w in back[k] if mapping.get(w) not in ay[v])
            closed = 0
            for y in ay[v]:
                if inv[y] is not None:
                    closed += 1
                    if inv[y] not in ax[u]:
                        add += 1
            options.append((add, v, closed))
        # cheapest extension first, ties by node index
        options.sort()
        for add, v, closed in options:
            st["open_y"] -= closed
            lb = st["gap"] + abs(st["open_x"] - st["open_y"])
            if worth(cost + add + lb):
                mapping[u] = v
                inv[v] = u
                rem_x[lab] -= 1
                rem_y[lab] -= 1
                rec(k + 1, cost + add)
                rem_x[lab] += 1
                rem_y[lab] += 1
                del mapping[u]
                inv[v] = None
            st["open_y"] += closed
        # delete u
        old_gap = st["gap"]
        st["gap"] += abs(rem_x[lab] - 1 - rem_y[lab]) - abs(rem_x[lab] - rem_y[lab])
        rem_x[lab] -= 1
        add = 1 + len(back[k])
        lb = st["gap"] + abs(st["open_x"] - st["open_y"])
        if worth(cost + add + lb):
            rec(k + 1, cost + add)
        rem_x[lab] += 1
        st["gap"] = old_gap
        st["open_x"] += len(back[k])

    try:
        rec(0, 0)
    except _Enough:
        pass
    return found or [{}]


def brute_force_ged(tx, ty, cap: int = 12) -> int:
    """Minimum cost over every injective label-preserving partial mapping."""
    lx, ex = _labels_edges(tx)
    ly, ey = _labels_edges(ty)
    if len(lx) + len(ly) > cap:
        raise GEDError(f"brute force limited to {cap} total nodes")
    options = []
    for u in range(len(lx)):
        options.append([None] + [v for v in range(len(ly)) if ly[v] == lx[u]])
    best = None
    for choice in product(*options):
        images = [v for v in choice if v is not None]
        if len(images) != len(set(images)):
            continue
        mapping = {u: v for u, v in enumerate(choice) if v is not None}
        c = path_from_mapping((lx, ex), (ly, ey), mapping).cost
        if best is None or c < best:
            best = c
    return best if best is not None else len(ly) + len(ey)
