"""Teacher-forced loss and per-head accuracy for one training pair."""
from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass

import numpy as np

from ..chem.jtree import NodeVocabulary
from ..chem.smiles import symmetry_classes
from ..pairgen.pairs import ReplayStep, TrainingPair, replay
from ..tensor import Tensor, add, bce_with_logits, index_select, kl_normal, log_softmax, pick, scale, sum_all
from .decoder import (DecodeTrace, TemplateCache, argmax_first, child_scores, embed_state, expand_logit,
                      orientation, parent_context, parent_scores, point_embeddings, removal_logits, row, site_scores,
                      type_logits)
from .encoder import diff_embed, embed, latent
from .features import GraphIndex, TreeIndex, graph_index, tree_index

HEADS = ("site", "remove", "expand", "type", "parent", "child")
TERMS = HEADS + ("kl",)


@dataclass
class PreparedPair:
    """Everything about a pair that does not depend on the parameters."""
    pair: TrainingPair
    gx: GraphIndex
    tx: TreeIndex
    gy: GraphIndex
    ty: TreeIndex
    x_node_keys: list[tuple]
    steps: list[ReplayStep]


def _node_keys(pair: TrainingPair) -> list[tuple]:
    # nodes related by a symmetry of mx get equal keys; a prediction of either counts as correct
    cls = symmetry_classes(pair.mx)
    return [(n.type_id, tuple(sorted(cls[a] for a in n.atoms))) for n in pair.tx.nodes]


def prepare(pair: TrainingPair, vocab: NodeVocabulary) -> PreparedPair:
    _, steps = replay(pair, vocab)
    return PreparedPair(pair, graph_index(pair.mx), tree_index(pair.tx), graph_index(pair.my),
                        tree_index(pair.ty), _node_keys(pair), steps)


def _nll(scores: Tensor, target: int) -> Tensor:
    return scale(pick(log_softmax(scores), target), -1.0)


class Accuracy:
    def __init__(self):
        self.correct = defaultdict(int)
        self.total = defaultdict(int)

    def add(self, head: str, correct: int, total: int = 1) -> None:
        self.correct[head] += int(correct)
        self.total[head] += int(total)

    def merge(self, other: Accuracy) -> None:
        for h in other.total:
            self.add(h, other.correct[h], other.total[h])

    def rate(self, head: str) -> float:
        return self.correct[head] / self.total[head] if self.total[head] else 1.0

    def rates(self) -> dict[str, float]:
        return {h: self.rate(h) for h in HEADS}


def _removal_correct(keys, truth, pred) -> int:
    """Correct per-neighbour decisions, allowing swaps between symmetric neighbours."""
    groups = defaultdict(lambda: [0, 0, 0])
    for k, t, p in zip(keys, truth, pred):
        g = groups[k]
        g[0] += 1
        g[1] += t
        g[2] += p
    return sum(n - abs(t - p) for n, t, p in groups.values())


def pair_terms(pp: PreparedPair, P, hp, vocab: NodeVocabulary, rng: np.random.Generator | None,
               templates: TemplateCache | None = None, acc: Accuracy | None = None,
               trace: DecodeTrace | None = None) -> dict[str, Tensor]:
    """Unweighted loss terms of one pair; ``rng=None`` uses the posterior means as z."""
    pair = pp.pair
    templates = templates or TemplateCache(vocab, P, hp.t_a)
    ex = embed(pp.gx, pp.tx, P, hp.t_a, hp.t_n)
    ey = embed(pp.gy, pp.ty, P, hp.t_a, hp.t_n)
    h_minus, h_plus = diff_embed(ex.nodes, ey.nodes, pair.removal, pair.added, pair.n_d, pair.n_d_y)
    lat = latent(h_minus, h_plus, P, rng)
    terms: dict[str, list[Tensor]] = {h: [] for h in TERMS}
    terms["kl"].append(add(kl_normal(lat.g_minus), kl_normal(lat.g_plus)))

    ss = site_scores(ex.nodes, lat.z, P)
    terms["site"].append(_nll(ss, pair.n_d))
    if acc is not None:
        acc.add("site", pp.x_node_keys[argmax_first(ss.data)] == pp.x_node_keys[pair.n_d])
    if trace is not None:
        trace.add("site", ss.data, argmax_first(ss.data), pair.n_d)

    nbrs = list(pair.tx.neighbors[pair.n_d])
    if nbrs:
        removal = set(pair.removal)
        truth = [int(w in removal) for w in nbrs]
        rl = removal_logits(index_select(ex.nodes, nbrs), lat.z_minus, P)
        for k, t in enumerate(truth):
            terms["remove"].append(bce_with_logits(pick(rl, k), float(t)))
        pred = [int(x > 0.0) for x in rl.data]
        if acc is not None:
            acc.add("remove", _removal_correct([pp.x_node_keys[w] for w in nbrs], truth, pred), len(nbrs))
        if trace is not None:
            for k in range(len(nbrs)):
                trace.add("remove", [rl.data[k]], pred[k], truth[k])

    states = {}
    for st in pp.steps:
        emb = states.get(id(st.state))
        if emb is None:
            emb = states[id(st.state)] = embed_state(st.state, P, hp)
        n_star = row(emb.nodes, st.node)
        logit = expand_logit(n_star, lat.z_plus, P)
        terms["expand"].append(bce_with_logits(logit, float(st.expand)))
        if acc is not None:
            acc.add("expand", (float(logit.data) > 0.0) == st.expand)
        if trace is not None:
            trace.add("expand", [float(logit.data)], int(float(logit.data) > 0.0), int(st.expand))
        if not st.expand:
            continue
        tl = type_logits(n_star, lat.z_plus, P)
        terms["type"].append(_nll(tl, st.type_id))
        if acc is not None:
            acc.add("type", argmax_first(tl.data) == st.type_id)
        if trace is not None:
            trace.add("type", tl.data, argmax_first(tl.data), st.type_id)
        cands = st.candidates
        if len(cands.parents) > 1:
            ctx = parent_context(emb, st.node, st.state.tree.nodes[st.node].type_id, P)
            ps = parent_scores(point_embeddings(emb.atoms, cands.parents), st.type_id, ctx, lat.z_plus, P)
            terms["parent"].append(_nll(ps, st.parent_class))
            if acc is not None:
                acc.add("parent", argmax_first(ps.data) == st.parent_class)
            if trace is not None:
                trace.add("parent", ps.data, argmax_first(ps.data), st.parent_class)
        rep = cands.parents[st.parent_class]
        kids = cands.children[rep]
        if len(kids) > 1:
            t_atoms = templates.atoms(st.type_id)
            cs = child_scores(point_embeddings(t_atoms, kids), st.type_id, row(point_embeddings(emb.atoms, [rep]), 0),
                              lat.z_plus, P, orientation(t_atoms, kids, emb.atoms, rep))
            terms["child"].append(_nll(cs, st.child_class))
            if acc is not None:
                acc.add("child", argmax_first(cs.data) == st.child_class)
            if trace is not None:
                trace.add("child", cs.data, argmax_first(cs.data), st.child_class)
    out = {}
    for name, parts in terms.items():
        if not parts:
            out[name] = Tensor(0.0)
            continue
        total = parts[0]
        for p in parts[1:]:
            total = add(total, p)
        out[name] = total
    return out


def combine(terms: dict[str, Tensor], beta: float) -> Tensor:
    """Prediction terms plus beta times the KL term."""
    total = scale(terms["kl"], beta)
    for h in HEADS:
        total = add(total, terms[h])
    return sum_all(total) if total.data.ndim else total


def pair_loss(pp: PreparedPair, P, hp, vocab, beta: float, rng: np.random.Generator | None) -> Tensor:
    return combine(pair_terms(pp, P, hp, vocab, rng), beta)


def trace_loss(trace: DecodeTrace) -> float:
    """Prediction loss recomputed from a teacher-forced trace (no KL), for consistency checks."""
    total = 0.0
    for e in trace.entries:
        s = e.scores
        if e.head in ("site", "type", "parent", "child"):
            m = s.max()
            total += -(s[e.target] - m - np.log(np.exp(s - m).sum()))
        elif e.head in ("expand", "remove"):
            x = s[0]
            total += max(x, 0) - x * e.target + np.log1p(np.exp(-abs(x)))
    return float(total)
