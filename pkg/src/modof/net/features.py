"""Index arrays describing a molecule graph or junction tree for message passing."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..chem.jtree import JunctionTree
from ..chem.molecule import ELEMENTS, MAX_CHARGE, Atom, Molecule

_ELEMENT_INDEX = {e: k for k, e in enumerate(ELEMENTS)}


def atom_type(a: Atom) -> int:
    charge = min(MAX_CHARGE, max(-MAX_CHARGE, a.charge)) + MAX_CHARGE
    return (_ELEMENT_INDEX[a.element] * (2 * MAX_CHARGE + 1) + charge) * 2 + int(a.aromatic)


@dataclass
class GraphIndex:
    n_atoms: int
    atom_types: np.ndarray
    src: np.ndarray        # directed bond i -> j
    dst: np.ndarray
    rev: np.ndarray        # index of j -> i
    bond_types: np.ndarray


def graph_index(m: Molecule) -> GraphIndex:
    src, dst, bt = [], [], []
    for b in m.bonds:
        src += [b.i, b.j]
        dst += [b.j, b.i]
        bt += [b.order - 1, b.order - 1]
    e = len(src)
    rev = np.arange(e) ^ 1
    return GraphIndex(len(m.atoms), np.array([atom_type(a) for a in m.atoms], dtype=np.int64),
                      np.array(src, dtype=np.int64), np.array(dst, dtype=np.int64), rev.astype(np.int64),
                      np.array(bt, dtype=np.int64))


@dataclass
class TreeIndex:
    n_nodes: int
    node_types: np.ndarray
    member_node: np.ndarray   # (node, atom) membership pairs
    member_atom: np.ndarray
    src: np.ndarray           # directed tree edge u -> v
    dst: np.ndarray
    rev: np.ndarray
    shared_edge: np.ndarray   # (directed edge, shared atom) pairs
    shared_atom: np.ndarray


def tree_index(t: JunctionTree) -> TreeIndex:
    mn, ma = [], []
    for u, node in enumerate(t.nodes):
        mn += [u] * len(node.atoms)
        ma += list(node.atoms)
    src, dst, se, sa = [], [], [], []
    for u, v in t.edges:
        shared = sorted(set(t.nodes[u].atoms) & set(t.nodes[v].atoms))
        for a, b in ((u, v), (v, u)):
            k = len(src)
            src.append(a)
            dst.append(b)
            se += [k] * len(shared)
            sa += shared
    e = len(src)
    types = [n.type_id for n in t.nodes]
    if any(x < 0 for x in types):
        raise ValueError("tree nodes need vocabulary type ids")
    as_int = lambda xs: np.array(xs, dtype=np.int64)
    return TreeIndex(len(t.nodes), as_int(types), as_int(mn), as_int(ma), as_int(src), as_int(dst),
                     (np.arange(e) ^ 1).astype(np.int64), as_int(se), as_int(sa))
