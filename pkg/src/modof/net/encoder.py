"""Graph and tree message passing, the difference embedding and the two Gaussian latent heads."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..tensor import (Tensor, add, concat, index_select, matmul, relu, segment_sum, sub, sum_rows)
from ..tensor import Gaussian, reparam_sample
from .features import GraphIndex, TreeIndex


def gmpn(g: GraphIndex, P, t_a: int) -> Tensor:
    """Atom embeddings after ``t_a`` rounds of directed bond messages; (n_atoms, h)."""
    self_term = index_select(P["gmpn.atom_self"], g.atom_types)
    if g.src.size == 0:
        return relu(self_term)
    base = add(index_select(P["gmpn.atom_in"], g.atom_types[g.src]), index_select(P["gmpn.bond_in"], g.bond_types))
    msgs = [relu(base)]
    for _ in range(t_a - 1):
        m = msgs[-1]
        into = segment_sum(m, g.dst, g.n_atoms)
        # everything arriving at the source atom except what came back along this bond
        inc = sub(index_select(into, g.src), index_select(m, g.rev))
        msgs.append(relu(add(base, matmul(inc, P["gmpn.message"]))))
    stacked = concat(msgs, axis=1) if len(msgs) > 1 else msgs[0]
    return relu(add(self_term, matmul(segment_sum(stacked, g.dst, g.n_atoms), P["gmpn.readout"])))


def pool_atoms(t: TreeIndex, atoms: Tensor) -> Tensor:
    """Per-node sum of its atom embeddings; (n_nodes, h)."""
    return segment_sum(index_select(atoms, t.member_atom), t.member_node, t.n_nodes)


def node_inputs(t: TreeIndex, atoms: Tensor, P) -> tuple[Tensor, Tensor]:
    """(node-type embedding, pooled atoms) for each node, concatenated along features."""
    pooled = pool_atoms(t, atoms)
    return concat([index_select(P["tmpn.node_type"], t.node_types), pooled], axis=1), pooled


def tmpn(t: TreeIndex, atoms: Tensor, P, t_n: int) -> tuple[Tensor, Tensor]:
    """(node embeddings, pooled atom sums) after ``t_n`` rounds of tree messages."""
    inputs, pooled = node_inputs(t, atoms, P)
    self_term = matmul(relu(matmul(inputs, P["tmpn.node_self_in"])), P["tmpn.node_self"])
    if t.src.size == 0:
        return relu(self_term), pooled
    pre = relu(matmul(inputs, P["tmpn.node_in"]))
    shared = segment_sum(index_select(atoms, t.shared_atom), t.shared_edge, t.src.size)
    base = add(matmul(index_select(pre, t.src), P["tmpn.node_msg"]), matmul(shared, P["tmpn.shared"]))
    msgs = [relu(base)]
    for _ in range(t_n - 1):
        m = msgs[-1]
        into = segment_sum(m, t.dst, t.n_nodes)
        inc = sub(index_select(into, t.src), index_select(m, t.rev))
        msgs.append(relu(add(base, matmul(inc, P["tmpn.message"]))))
    stacked = concat(msgs, axis=1) if len(msgs) > 1 else msgs[0]
    return relu(add(self_term, matmul(segment_sum(stacked, t.dst, t.n_nodes), P["tmpn.readout"]))), pooled


@dataclass
class Embedding:
    atoms: Tensor
    nodes: Tensor
    pooled: Tensor


def embed(g: GraphIndex, t: TreeIndex, P, t_a: int, t_n: int) -> Embedding:
    atoms = gmpn(g, P, t_a)
    nodes, pooled = tmpn(t, atoms, P, t_n)
    return Embedding(atoms, nodes, pooled)


def diff_embed(x_nodes: Tensor, y_nodes: Tensor, x_only, y_only, n_d: int, n_d_y: int) -> tuple[Tensor, Tensor]:
    """Sums of node embeddings unique to each side, each including the disconnection site."""
    minus = sorted(set(x_only) | {n_d})
    plus = sorted(set(y_only) | {n_d_y})
    return sum_rows(index_select(x_nodes, minus)), sum_rows(index_select(y_nodes, plus))


@dataclass
class LatentDiff:
    g_minus: Gaussian
    g_plus: Gaussian
    z_minus: Tensor
    z_plus: Tensor
    z: Tensor


def _affine(x: Tensor, P, name: str) -> Tensor:
    return add(matmul(x, P[name + ".w"]), P[name + ".b"])


def latent(h_minus: Tensor, h_plus: Tensor, P, rng: np.random.Generator | None) -> LatentDiff:
    """Gaussian heads on both halves; with ``rng=None`` the means are used as z."""
    gm = Gaussian(_affine(h_minus, P, "latent.minus_mu"), _affine(h_minus, P, "latent.minus_logvar"))
    gp = Gaussian(_affine(h_plus, P, "latent.plus_mu"), _affine(h_plus, P, "latent.plus_logvar"))
    if rng is None:
        zm, zp = gm.mu, gp.mu
    else:
        zm, zp = reparam_sample(gm, rng), reparam_sample(gp, rng)
    return LatentDiff(gm, gp, zm, zp, concat([zm, zp]))


def prior_latent(z_dim: int, rng: np.random.Generator) -> tuple[Tensor, Tensor, Tensor]:
    zm = Tensor(rng.standard_normal(z_dim))
    zp = Tensor(rng.standard_normal(z_dim))
    return zm, zp, concat([zm, zp])
