import math

import numpy as np
import pytest

from modof.chem import parse_smiles, write_smiles
from modof.chem.jtree import junction_tree
from modof.net import (HyperParams, Model, NumericError, batches_per_epoch, beta_at, diff_embed, embed,
                       graph_index, init_params, pair_terms, prepare, sample_decode, train, trace_loss, tree_index)
from modof.net.decoder import DecodeTrace
from modof.net.encoder import gmpn
from modof.net.features import atom_type
from modof.net.loss import HEADS, combine
from modof.pairgen import build_pair, canonical
from modof.pairgen.fixtures import planted_single_edits
from modof.tensor import Tensor
from modof.tensor.rng import stream

from oracles import isomorphic

SMALL = HyperParams(hidden_dim=12, z_dim=4, t_a=3, t_n=2, batch=4, epochs=2, lr=0.003)


@pytest.fixture(scope="module")
def planted():
    edits, vocab = planted_single_edits(12, seed=4)
    return [build_pair(e.mx, e.my, vocab) for e in edits], vocab


@pytest.fixture(scope="module")
def params(planted):
    return init_params(SMALL, len(planted[1]), seed=2)


def relu(x):
    return np.maximum(x, 0.0)


def gmpn_by_hand(m, P, t_a):
    """Directed bond messages written out with dictionaries."""
    A_in, B_in = P["gmpn.atom_in"].data, P["gmpn.bond_in"].data
    W, S, R = P["gmpn.message"].data, P["gmpn.atom_self"].data, P["gmpn.readout"].data
    types = [atom_type(a) for a in m.atoms]
    nbr = {i: [] for i in range(len(m.atoms))}
    order = {}
    for b in m.bonds:
        nbr[b.i].append(b.j)
        nbr[b.j].append(b.i)
        order[(b.i, b.j)] = order[(b.j, b.i)] = b.order - 1
    if not m.bonds:
        return relu(S[types])
    base = {(i, j): A_in[types[i]] + B_in[order[(i, j)]] for (i, j) in order}
    rounds = [{e: relu(v) for e, v in base.items()}]
    for _ in range(t_a - 1):
        prev = rounds[-1]
        rounds.append({(i, j): relu(base[(i, j)] + sum((prev[(w, i)] for w in nbr[i] if w != j),
                                                       np.zeros(W.shape[0])) @ W) for (i, j) in order})
    out = []
    for j in range(len(m.atoms)):
        parts = [sum((r[(i, j)] for i in nbr[j]), np.zeros(W.shape[0])) for r in rounds]
        out.append(relu(S[types[j]] + np.concatenate(parts) @ R))
    return np.array(out)


@pytest.mark.parametrize("smi", ["C", "CCO", "c1ccccc1O", "CC(=O)Nc1ccc(O)cc1", "C1CC1C#N"])
def test_atom_messages_match_hand_computation(smi, params):
    m = parse_smiles(smi)
    got = gmpn(graph_index(m), params, SMALL.t_a).data
    assert np.allclose(got, gmpn_by_hand(m, params, SMALL.t_a), atol=1e-12)


def test_zero_parameters_embed_to_zero(planted):
    P = init_params(SMALL, len(planted[1]), zero=True)
    m = parse_smiles("CC(=O)Nc1ccc(O)cc1")
    e = embed(graph_index(m), tree_index(junction_tree(m, planted[1])), P, SMALL.t_a, SMALL.t_n)
    assert not e.atoms.data.any() and not e.nodes.data.any()


def test_atom_embedding_sees_only_nearby_atoms(params):
    # a chain: atom 0 cannot see a change further than t_a bonds away
    base = parse_smiles("CCCCCCCC")
    far = parse_smiles("CCCCCCCO")
    near = parse_smiles("CCOCCCCC")
    e0 = gmpn(graph_index(base), params, SMALL.t_a).data[0]
    assert np.array_equal(e0, gmpn(graph_index(far), params, SMALL.t_a).data[0])
    assert not np.array_equal(e0, gmpn(graph_index(near), params, SMALL.t_a).data[0])


def test_embeddings_follow_atom_permutations(planted, params):
    m = parse_smiles("CC(=O)Nc1ccc(O)cc1")
    perm = list(np.random.default_rng(0).permutation(len(m.atoms)))
    pm = m.permuted(perm)
    a = gmpn(graph_index(m), params, SMALL.t_a).data
    b = gmpn(graph_index(pm), params, SMALL.t_a).data
    assert np.allclose(b[perm], a, atol=1e-12)
    vocab = planted[1]
    tx, tp = junction_tree(m, vocab), junction_tree(pm, vocab)
    nx = embed(graph_index(m), tree_index(tx), params, SMALL.t_a, SMALL.t_n).nodes.data
    npm = embed(graph_index(pm), tree_index(tp), params, SMALL.t_a, SMALL.t_n).nodes.data
    key = lambda t, f: {frozenset(f(a) for a in n.atoms): k for k, n in enumerate(t.nodes)}
    kx, kp = key(tx, lambda a: perm[a]), key(tp, lambda a: a)
    assert set(kx) == set(kp)
    for s in kx:
        assert np.allclose(nx[kx[s]], npm[kp[s]], atol=1e-12)


def test_difference_embedding_sums():
    x = Tensor(np.arange(12.0).reshape(4, 3))
    y = Tensor(np.arange(15.0).reshape(5, 3) * 10)
    hm, hp = diff_embed(x, y, [2, 3], [4], 1, 0)
    assert hm.data.tolist() == (x.data[1] + x.data[2] + x.data[3]).tolist()
    assert hp.data.tolist() == (y.data[0] + y.data[4]).tolist()
    # the site is counted once even if listed
    hm2, _ = diff_embed(x, y, [1], [], 1, 0)
    assert hm2.data.tolist() == x.data[1].tolist()


def test_zero_parameters_decode_to_the_input(planted):
    vocab = planted[1]
    P = init_params(SMALL, len(vocab), zero=True)
    m = parse_smiles("CC(=O)Nc1ccc(O)cc1")
    res = sample_decode(m, P, SMALL, vocab, stream(0), keep_trace=True)
    assert not res.changed and res.mol is m
    assert res.removal == ()
    assert res.trace.heads()[0] == "site"
    # every removal logit is exactly zero, so nothing is removed and no node is expanded
    assert all(e.chosen == 0 for e in res.trace.entries if e.head in ("remove", "expand"))


def test_decoding_is_seeded(planted, params):
    vocab = planted[1]
    outs = []
    for _ in range(2):
        outs.append([write_smiles(sample_decode(p.mx, params, SMALL, vocab, stream(5, k)).mol)
                     for k, p in enumerate(planted[0])])
    assert outs[0] == outs[1]


def test_decoding_respects_the_atom_cap(planted, params):
    vocab = planted[1]
    for k, p in enumerate(planted[0]):
        cap = len(p.mx.atoms)
        res = sample_decode(p.mx, params, SMALL, vocab, stream(1, k), cap=cap)
        assert len(res.mol.atoms) <= cap


def test_teacher_forcing_covers_every_step(planted, params):
    vocab = planted[1]
    for p in planted[0]:
        pp = prepare(p, vocab)
        assert isomorphic(pp.steps[-1].state.mol if pp.steps else p.mx, p.my) or pp.steps
        trace = DecodeTrace()
        terms = pair_terms(pp, params, SMALL, vocab, None, trace=trace)
        assert trace.heads()[0] == "site"
        assert trace.heads().count("expand") == len(pp.steps)
        preds = sum(float(terms[h].data) for h in HEADS)
        assert trace_loss(trace) == pytest.approx(preds, rel=1e-12, abs=1e-12)


def test_loss_bounds_and_weighting(planted, params):
    vocab = planted[1]
    for p in planted[0]:
        terms = pair_terms(prepare(p, vocab), params, SMALL, vocab, stream(0))
        kl = float(terms["kl"].data)
        assert kl >= 0.0
        for beta in (0.1, 0.35):
            loss = float(combine(terms, beta).data)
            assert loss >= beta * kl
            assert loss == pytest.approx(sum(float(terms[h].data) for h in HEADS) + beta * kl)


def test_loss_invariant_to_atom_order(planted, params):
    vocab = planted[1]
    rng = np.random.default_rng(3)
    for p in planted[0]:
        base = pair_terms(prepare(p, vocab), params, SMALL, vocab, None)
        px = p.mx.permuted(list(rng.permutation(len(p.mx.atoms))))
        py = p.my.permuted(list(rng.permutation(len(p.my.atoms))))
        # pairs are built from canonicalised molecules, so the loss cannot depend on input order
        q = build_pair(canonical(px), canonical(py), vocab)
        other = pair_terms(prepare(q, vocab), params, SMALL, vocab, None)
        assert abs(float(combine(other, 0.2).data) - float(combine(base, 0.2).data)) < 1e-9


def test_beta_schedule():
    hp = HyperParams()
    assert beta_at(hp, 0, 100) == 0.1
    assert beta_at(hp, 99, 100) == 0.1
    assert beta_at(hp, 100 + 499, 100) == 0.1
    assert beta_at(hp, 100 + 500, 100) == pytest.approx(0.15)
    assert beta_at(hp, 100 + 1000, 100) == pytest.approx(0.2)
    assert beta_at(hp, 100 + 10 ** 6, 100) == 0.5
    assert batches_per_epoch(0, 32) == 0 and batches_per_epoch(33, 32) == 2


def test_hyperparameter_validation():
    with pytest.raises(ValueError):
        HyperParams(hidden_dim=0)
    with pytest.raises(ValueError):
        HyperParams(beta_init=0.6)
    with pytest.raises(ValueError):
        HyperParams.from_dict({"hidden": 3})


def test_training_on_nothing_changes_nothing(planted):
    model = Model.fresh(SMALL, planted[1])
    before = {k: t.data.copy() for k, t in model.params}
    train(model, [])
    assert model.epoch == 0 and model.global_batch == 0
    assert all(np.array_equal(before[k], t.data) for k, t in model.params)


def test_resume_is_bit_exact(planted, tmp_path):
    pairs, vocab = planted
    full = train(Model.fresh(SMALL, vocab), pairs, epochs=3, log_path=tmp_path / "full.log")
    part = train(Model.fresh(SMALL, vocab), pairs, epochs=1, log_path=tmp_path / "part.log",
                 checkpoint=tmp_path / "m.ckpt")
    resumed = train(Model.load(tmp_path / "m.ckpt", vocab), pairs, epochs=3, log_path=tmp_path / "part.log")
    assert resumed.global_batch == full.global_batch == 3 * batches_per_epoch(len(pairs), SMALL.batch)
    for (k, a), (_, b) in zip(full.params, resumed.params):
        assert a.data.tobytes() == b.data.tobytes(), k
    assert (tmp_path / "full.log").read_text() == (tmp_path / "part.log").read_text()
    assert part.epoch == 1


def test_training_lowers_the_loss(planted):
    pairs, vocab = planted
    model = Model.fresh(SMALL, vocab)
    prepared = [prepare(p, vocab) for p in pairs]

    def mean_loss():
        return sum(float(combine(pair_terms(pp, model.params, SMALL, vocab, None), 0.1).data)
                   for pp in prepared) / len(prepared)

    before = mean_loss()
    train(model, pairs, epochs=8, prepared=prepared)
    assert mean_loss() < before


def test_non_finite_loss_raises(planted):
    pairs, vocab = planted
    model = Model.fresh(SMALL, vocab)
    model.params["site.out"].data[:] = np.nan
    with pytest.raises(NumericError):
        train(model, pairs, epochs=1)


def test_checkpoint_keeps_the_model(planted, tmp_path):
    pairs, vocab = planted
    model = train(Model.fresh(SMALL, vocab), pairs[:4], epochs=1)
    model.save(tmp_path / "a.ckpt")
    back = Model.load(tmp_path / "a.ckpt")
    assert back.hp == model.hp and back.vocab.entries == vocab.entries
    assert back.params.step_count == model.params.step_count
    for (k, a), (_, b) in zip(model.params, back.params):
        assert np.array_equal(a.data, b.data) and np.array_equal(model.params.vhat[k], back.params.vhat[k])
    assert math.isfinite(float(back.params["site.out"].data.sum()))
