"""Prediction heads and free-running decoding of a single-fragment edit."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..chem.jtree import JunctionTree, NodeVocabulary, VocabularyMiss, junction_tree
from ..chem.molecule import Molecule, valence_check
from ..chem.smiles import parse_smiles, write_smiles
from ..chem.surgery import AttachError, IntermediateMol, attach_node, enumerate_attachment_candidates, remove_subtrees
from ..tensor import (Tensor, add, concat, index_select, matmul, mul, no_grad, relu, segment_sum, softmax, sub,
                      sum_rows, tanh, tile_rows)
from .encoder import Embedding, embed, gmpn, prior_latent
from .features import graph_index, tree_index


def row(x: Tensor, i: int) -> Tensor:
    return sum_rows(index_select(x, [i]))


def site_scores(nodes: Tensor, z: Tensor, P) -> Tensor:
    pre = tanh(add(matmul(nodes, P["site.node"]), matmul(z, P["site.z"])))
    return matmul(pre, P["site.out"])


def removal_logits(nbrs: Tensor, z_minus: Tensor, P) -> Tensor:
    pre = relu(add(matmul(nbrs, P["remove.node"]), matmul(z_minus, P["remove.z"])))
    return matmul(pre, P["remove.out"])


def expand_logit(node: Tensor, z_plus: Tensor, P) -> Tensor:
    pre = relu(add(matmul(node, P["expand.node"]), matmul(z_plus, P["expand.z"])))
    return matmul(pre, P["expand.out"])


def type_logits(node: Tensor, z_plus: Tensor, P) -> Tensor:
    pre = relu(add(matmul(node, P["ntype.node"]), matmul(z_plus, P["ntype.z"])))
    return matmul(pre, P["ntype.out"])


def point_embeddings(atoms: Tensor, points) -> Tensor:
    """One row per attachment point: the atom embedding, or the sum over a bond's two atoms."""
    flat = [a for pt in points for a in pt]
    seg = [k for k, pt in enumerate(points) for _ in pt]
    return segment_sum(index_select(atoms, flat), seg, len(points))


def parent_context(emb: Embedding, node: int, type_id: int, P) -> Tensor:
    alpha = row(P["tmpn.node_type"], type_id)
    return relu(matmul(concat([alpha, row(emb.pooled, node)]), P["tmpn.node_self_in"]))


def parent_scores(cands: Tensor, child_type: int, ctx: Tensor, z_plus: Tensor, P) -> Tensor:
    fixed = add(add(matmul(row(P["tmpn.node_type"], child_type), P["pattach.child_type"]),
                    matmul(ctx, P["pattach.parent"])), matmul(z_plus, P["pattach.z"]))
    return matmul(tanh(add(matmul(cands, P["pattach.atom"]), fixed)), P["pattach.out"])


def orientation(child_atoms: Tensor, kids, parent_atoms: Tensor, parent_pt) -> Tensor | None:
    """Which end of a fused bond lands on which parent atom; None for single-atom points.

    Summed atom embeddings cannot tell (c1, c2) from (c2, c1), so bond points
    get the product of the two end-to-end differences as an extra input.
    """
    if len(parent_pt) != 2:
        return None
    first = index_select(child_atoms, [c[0] for c in kids])
    second = index_select(child_atoms, [c[1] for c in kids])
    pd = sub(row(parent_atoms, parent_pt[0]), row(parent_atoms, parent_pt[1]))
    return mul(sub(first, second), tile_rows(pd, len(kids)))


def child_scores(cands: Tensor, child_type: int, parent_atom: Tensor, z_plus: Tensor, P,
                 orient: Tensor | None = None) -> Tensor:
    fixed = add(add(matmul(row(P["tmpn.node_type"], child_type), P["cattach.child_type"]),
                    matmul(parent_atom, P["cattach.parent_atom"])), matmul(z_plus, P["cattach.z"]))
    pre = add(matmul(cands, P["cattach.atom"]), fixed)
    if orient is not None:
        pre = add(pre, matmul(orient, P["cattach.orient"]))
    return matmul(tanh(pre), P["cattach.out"])


class TemplateCache:
    """Atom embeddings of vocabulary templates, computed once per parameter state."""

    def __init__(self, vocab: NodeVocabulary, P, t_a: int):
        self.vocab, self.P, self.t_a = vocab, P, t_a
        self._graphs = {}
        self._emb = {}

    def atoms(self, type_id: int) -> Tensor:
        e = self._emb.get(type_id)
        if e is None:
            g = self._graphs.get(type_id)
            if g is None:
                g = self._graphs[type_id] = graph_index(self.vocab.template(type_id))
            e = self._emb[type_id] = gmpn(g, self.P, self.t_a)
        return e


def embed_state(im: IntermediateMol, P, hp) -> Embedding:
    return embed(graph_index(im.mol), tree_index(im.tree), P, hp.t_a, hp.t_n)


@dataclass
class TraceEntry:
    head: str
    scores: np.ndarray
    chosen: int
    target: int = -1


@dataclass
class DecodeTrace:
    entries: list[TraceEntry] = field(default_factory=list)

    def add(self, head, scores, chosen, target=-1):
        self.entries.append(TraceEntry(head, np.array(np.asarray(scores), dtype=np.float64), int(chosen), int(target)))

    def heads(self) -> list[str]:
        return [e.head for e in self.entries]


def argmax_first(x: np.ndarray) -> int:
    return int(np.argmax(x))  # numpy returns the lowest index among ties


@dataclass
class DecodeResult:
    mol: Molecule
    changed: bool
    reason: str = ""
    trace: DecodeTrace | None = None
    site: int = -1
    removal: tuple[int, ...] = ()
    n_attached: int = 0


def removal_from_heads(tree: JunctionTree, site: int, heads) -> set[int]:
    out = set()
    for w in heads:
        out |= tree.subtree(w, site)
    return out


def nfa_free(im: IntermediateMol, z_plus: Tensor, P, hp, vocab: NodeVocabulary, templates: TemplateCache,
             cap: int, trace: DecodeTrace | None = None) -> tuple[IntermediateMol, int, str]:
    """Breadth-first expansion from the frontier node; returns (state, attachments, halt reason)."""
    queue = [im.frontier[0]]
    attached = 0
    emb, emb_for = None, None
    while queue:
        node = queue.pop(0)
        children = 0
        while True:
            if children >= hp.max_children or attached >= hp.max_attachments:
                break
            if emb_for is not im:
                emb, emb_for = embed_state(im, P, hp), im
            n_star = row(emb.nodes, node)
            logit = float(expand_logit(n_star, z_plus, P).data)
            if trace is not None:
                trace.add("expand", [logit], int(logit > 0.0))
            if not logit > 0.0:  # sigmoid > 0.5
                break
            probs = softmax(type_logits(n_star, z_plus, P)).data
            order = np.argsort(-probs, kind="stable")[:hp.type_fallback]
            tid, cands = -1, None
            for cand_type in order:
                c = enumerate_attachment_candidates(im, node, int(cand_type), vocab)
                if c:
                    tid, cands = int(cand_type), c
                    break
            if cands is None:
                break
            if trace is not None:
                trace.add("type", probs, tid)
            ctx = parent_context(emb, node, im.tree.nodes[node].type_id, P)
            ps = parent_scores(point_embeddings(emb.atoms, cands.parents), tid, ctx, z_plus, P).data
            pi = argmax_first(ps)
            rep = cands.parents[pi]
            kids = cands.children[rep]
            t_atoms = templates.atoms(tid)
            cs = child_scores(point_embeddings(t_atoms, kids), tid, row(point_embeddings(emb.atoms, [rep]), 0),
                              z_plus, P, orientation(t_atoms, kids, emb.atoms, rep)).data
            ci = argmax_first(cs)
            if trace is not None:
                trace.add("parent", ps, pi)
                trace.add("child", cs, ci)
            try:
                nxt = attach_node(im, node, tid, rep, kids[ci], vocab)
            except AttachError:
                break
            if len(nxt.mol.atoms) > cap:
                return im, attached, "atom cap reached"
            im = nxt
            attached += 1
            children += 1
            queue.append(len(im.tree.nodes) - 1)
        if attached >= hp.max_attachments:
            return im, attached, "attachment limit reached"
    return im, attached, ""


def sample_decode(mx: Molecule, P, hp, vocab: NodeVocabulary, rng: np.random.Generator, cap: int | None = None,
                  keep_trace: bool = False, templates: TemplateCache | None = None) -> DecodeResult:
    """Draw z from the prior and decode one edit of ``mx``; failures return ``mx`` unchanged."""
    cap = hp.max_atoms if cap is None else cap
    trace = DecodeTrace() if keep_trace else None
    with no_grad():
        try:
            tx = junction_tree(mx, vocab)
        except VocabularyMiss as e:
            return DecodeResult(mx, False, f"input not covered by vocabulary: {e}", trace)
        templates = templates or TemplateCache(vocab, P, hp.t_a)
        ex = embed(graph_index(mx), tree_index(tx), P, hp.t_a, hp.t_n)
        z_minus, z_plus, z = prior_latent(hp.z_dim, rng)
        ss = site_scores(ex.nodes, z, P).data
        site = argmax_first(ss)
        if trace is not None:
            trace.add("site", ss, site)
        nbrs = list(tx.neighbors[site])
        heads = []
        if nbrs:
            rl = removal_logits(index_select(ex.nodes, nbrs), z_minus, P).data
            heads = [w for w, x in zip(nbrs, rl) if x > 0.0]
            if trace is not None:
                for x in rl:
                    trace.add("remove", [x], int(x > 0.0))
        removal = removal_from_heads(tx, site, heads)
        im = remove_subtrees(mx, tx, site, removal)
        im, n_att, why = nfa_free(im, z_plus, P, hp, vocab, templates, cap, trace)
    out = im.mol
    if valence_check(out):
        return DecodeResult(mx, False, "valence violation", trace, site, tuple(sorted(removal)), n_att)
    if len(out.atoms) == 0:
        return DecodeResult(mx, False, "empty product", trace, site, tuple(sorted(removal)), n_att)
    out = parse_smiles(write_smiles(out))
    try:
        junction_tree(out, vocab)
    except VocabularyMiss as e:
        return DecodeResult(mx, False, f"product not covered by vocabulary: {e}", trace, site,
                            tuple(sorted(removal)), n_att)
    changed = write_smiles(out) != write_smiles(mx)
    return DecodeResult(out if changed else mx, changed, why, trace, site, tuple(sorted(removal)), n_att)
