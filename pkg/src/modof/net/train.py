"""Training loop, model container and checkpoint round-trip."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..chem.jtree import NodeVocabulary
from ..tensor import ParamStore, add, amsgrad_step, no_grad, scale
from ..tensor.checkpoint import read_checkpoint, write_checkpoint
from ..tensor.rng import stream
from .decoder import TemplateCache
from .loss import HEADS, TERMS, Accuracy, PreparedPair, combine, pair_terms, prepare
from .params import HyperParams, beta_at, init_params

log = logging.getLogger(__name__)

LOG_COLUMNS = ("epoch", "batch", "beta", "loss") + TERMS

# stream-key namespaces
_SHUFFLE, _LATENT = 1, 2


class NumericError(RuntimeError):
    """Loss or gradient became non-finite."""


@dataclass
class Model:
    hp: HyperParams
    vocab: NodeVocabulary
    params: ParamStore
    epoch: int = 0          # completed epochs
    global_batch: int = 0   # batches run so far

    @classmethod
    def fresh(cls, hp: HyperParams, vocab: NodeVocabulary, zero: bool = False) -> Model:
        return cls(hp, vocab, init_params(hp, len(vocab), zero=zero))

    def save(self, path) -> None:
        tensors = {}
        for name, t in self.params:
            tensors["param/" + name] = t.data
            tensors["adam_m/" + name] = self.params.m[name]
            tensors["adam_v/" + name] = self.params.v[name]
            tensors["adam_vhat/" + name] = self.params.vhat[name]
        meta = {"hyperparams": self.hp.to_dict(), "vocab": self.vocab.entries, "epoch": self.epoch,
                "global_batch": self.global_batch, "optimizer_steps": self.params.step_count}
        write_checkpoint(path, tensors, self.vocab.digest(), meta)

    @classmethod
    def load(cls, path, expect_vocab: NodeVocabulary | None = None) -> Model:
        tensors, _, meta = read_checkpoint(path, expect_vocab.digest() if expect_vocab is not None else None)
        hp = HyperParams.from_dict(meta["hyperparams"])
        vocab = NodeVocabulary(meta["vocab"])
        store = init_params(hp, len(vocab), zero=True)
        for name, t in store:
            t.data = tensors["param/" + name].copy()
            store.m[name] = tensors["adam_m/" + name].copy()
            store.v[name] = tensors["adam_v/" + name].copy()
            store.vhat[name] = tensors["adam_vhat/" + name].copy()
        store.step_count = int(meta["optimizer_steps"])
        return cls(hp, vocab, store, int(meta["epoch"]), int(meta["global_batch"]))


def batches_per_epoch(n_pairs: int, batch: int) -> int:
    return math.ceil(n_pairs / batch) if n_pairs else 0


def evaluate(model: Model, prepared: list[PreparedPair]) -> Accuracy:
    """Teacher-forced per-head accuracy with z at the posterior mean."""
    acc = Accuracy()
    with no_grad():
        templates = TemplateCache(model.vocab, model.params, model.hp.t_a)
        for pp in prepared:
            pair_terms(pp, model.params, model.hp, model.vocab, None, templates, acc)
    return acc


def _fmt(x: float) -> str:
    return repr(float(x))


def train(model: Model, pairs, epochs: int | None = None, log_path=None, checkpoint=None,
          target_accuracy: float | None = None, prepared: list[PreparedPair] | None = None,
          on_epoch=None) -> Model:
    """Run epochs ``model.epoch .. epochs-1`` of shuffled minibatches with AMSGrad.

    Every random draw is keyed by (seed, epoch, pair), so resuming from a
    checkpoint written after any epoch reproduces an uninterrupted run exactly.
    With ``target_accuracy`` training stops after the first epoch whose
    teacher-forced accuracy reaches it on every head.
    """
    hp = model.hp
    epochs = hp.epochs if epochs is None else epochs
    prepared = prepared if prepared is not None else [prepare(p, model.vocab) for p in pairs]
    n = len(prepared)
    if n == 0:
        return model
    per_epoch = batches_per_epoch(n, hp.batch)
    log_file = None
    if log_path is not None:
        new = not Path(log_path).exists() or model.global_batch == 0
        log_file = open(log_path, "w" if new else "a", encoding="utf-8")
        if new:
            log_file.write("\t".join(LOG_COLUMNS) + "\n")
    try:
        while model.epoch < epochs:
            ep = model.epoch
            order = stream(hp.seed, _SHUFFLE, ep).permutation(n)
            for b in range(per_epoch):
                idx = order[b * hp.batch:(b + 1) * hp.batch]
                beta = beta_at(hp, model.global_batch, per_epoch)
                model.params.zero_grad()
                templates = TemplateCache(model.vocab, model.params, hp.t_a)
                totals = {t: 0.0 for t in TERMS}
                loss = None
                for i in idx:
                    terms = pair_terms(prepared[i], model.params, hp, model.vocab,
                                       stream(hp.seed, _LATENT, ep, int(i)), templates)
                    for t in TERMS:
                        totals[t] += float(terms[t].data)
                    pl = combine(terms, beta)
                    loss = pl if loss is None else add(loss, pl)
                loss = scale(loss, 1.0 / len(idx))
                value = float(loss.data)
                if not math.isfinite(value):
                    raise NumericError(f"non-finite loss {value} at epoch {ep} batch {b}")
                loss.backward()
                for name, t in model.params:
                    if t.grad is not None and not np.all(np.isfinite(t.grad)):
                        raise NumericError(f"non-finite gradient for {name} at epoch {ep} batch {b}")
                amsgrad_step(model.params, hp.lr)
                if log_file is not None:
                    row = [str(ep), str(model.global_batch), _fmt(beta), _fmt(value)]
                    row += [_fmt(totals[t] / len(idx)) for t in TERMS]
                    log_file.write("\t".join(row) + "\n")
                model.global_batch += 1
            model.epoch += 1
            if checkpoint is not None:
                model.save(checkpoint)
            done = False
            if target_accuracy is not None or on_epoch is not None:
                acc = evaluate(model, prepared)
                log.info("epoch %d accuracy %s", model.epoch, {h: round(acc.rate(h), 4) for h in HEADS})
                if on_epoch is not None:
                    on_epoch(model, acc)
                done = target_accuracy is not None and all(acc.rate(h) >= target_accuracy for h in HEADS)
            if done:
                break
    finally:
        if log_file is not None:
            log_file.close()
    return model
