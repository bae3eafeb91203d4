"""Reference implementations used only by the tests."""
import itertools

import networkx as nx
from networkx.algorithms import isomorphism as nxi


def to_nx(m, with_h=True):
    g = nx.Graph()
    for i, a in enumerate(m.atoms):
        g.add_node(i, el=a.element, q=a.charge, h=m.hydrogens(i) if with_h else 0)
    for b in m.bonds:
        g.add_edge(b.i, b.j, order=b.order)
    return g


def isomorphic(a, b, with_h=True):
    if len(a.atoms) != len(b.atoms) or len(a.bonds) != len(b.bonds):
        return False
    return nx.is_isomorphic(to_nx(a, with_h), to_nx(b, with_h),
                            node_match=nxi.categorical_node_match(["el", "q", "h"], [None, 0, 0]),
                            edge_match=nxi.categorical_edge_match("order", 1))


def all_simple_cycles(m):
    """Every simple cycle as a frozenset of bond keys (exponential; small molecules only)."""
    g = nx.Graph([(b.i, b.j) for b in m.bonds])
    out = set()
    for cyc in nx.simple_cycles(g):
        if len(cyc) < 3:
            continue
        keys = frozenset(frozenset((cyc[k], cyc[(k + 1) % len(cyc)])) for k in range(len(cyc)))
        out.add(keys)
    return out


def minimum_cycle_basis_sizes(m):
    """Sorted ring sizes of a minimum-weight cycle basis found by exhaustive search."""
    cycles = sorted(all_simple_cycles(m), key=len)
    edges = sorted({frozenset((b.i, b.j)) for b in m.bonds}, key=sorted)
    idx = {e: k for k, e in enumerate(edges)}

    def vec(c):
        v = 0
        for e in c:
            v |= 1 << idx[e]
        return v

    rank = len(m.bonds) - len(m.atoms) + nx.number_connected_components(
        nx.Graph([(b.i, b.j) for b in m.bonds]) if m.bonds else nx.empty_graph(len(m.atoms)))
    if rank == 0:
        return []
    basis, sizes = [], []
    for c in cycles:  # greedy by length is optimal for cycle matroids
        v = vec(c)
        for b in basis:
            v = min(v, v ^ b)
        if v:
            basis.append(v)
            basis.sort(reverse=True)
            sizes.append(len(c))
        if len(sizes) == rank:
            break
    return sorted(sizes)


def brute_tree_ged(tx, ty):
    """Unit-cost node/edge insert-delete distance by enumerating every label-preserving partial map."""
    lx = [n.type_id for n in tx.nodes]
    ly = [n.type_id for n in ty.nodes]
    ex = {frozenset(e) for e in tx.edges}
    ey = {frozenset(e) for e in ty.edges}
    best = None
    nx_, ny = len(lx), len(ly)
    for k in range(min(nx_, ny) + 1):
        for xs in itertools.combinations(range(nx_), k):
            for ys in itertools.permutations(range(ny), k):
                if any(lx[a] != ly[b] for a, b in zip(xs, ys)):
                    continue
                f = dict(zip(xs, ys))
                kept = sum(1 for e in ex if all(v in f for v in e) and frozenset(f[v] for v in e) in ey)
                cost = (nx_ - k) + (ny - k) + (len(ex) - kept) + (len(ey) - kept)
                if best is None or cost < best:
                    best = cost
    return best


def same_node_up_to_symmetry(m, atoms_a, atoms_b):
    """True when some automorphism of m maps the atom set atoms_a onto atoms_b."""
    if set(atoms_a) == set(atoms_b):
        return True
    g = to_nx(m)
    gm = nxi.GraphMatcher(g, g, node_match=nxi.categorical_node_match(["el", "q", "h"], [None, 0, 0]),
                          edge_match=nxi.categorical_edge_match("order", 1))
    target = set(atoms_b)
    return any({f[a] for a in atoms_a} == target for f in gm.isomorphisms_iter())
