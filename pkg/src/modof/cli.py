"""Command-line entry point: score, calibrate, pairs, train, optimize, stats."""
from __future__ import annotations

import argparse
import logging
import os
import sys
from dataclasses import replace
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from .chem.jtree import NodeVocabulary, VocabularyMiss
from .config import InputError, dump_kv, header, parse_kv, read_corpus, resolve
from .net.params import HyperParams
from .net.train import Model, NumericError, train
from .pairgen.pairs import PairError, extract_pairs, pair_vocabulary, read_pair_rows, read_pairs, write_pairs
from .pairgen.stats import fragment_stats
from .pipe import Decoder, PipeConfig, modof_pipe, modof_pipe_m, summarize
from .chem.smiles import parse_smiles
from .props import PlogpConfig, SAScorer, calibrate, get_scorer
from .tensor.checkpoint import CheckpointError, VocabularyMismatch

log = logging.getLogger("modof")

EXIT_OK, EXIT_INPUT, EXIT_MODEL, EXIT_NUMERIC = 0, 2, 3, 4

RESULT_COLUMNS = ("input_smiles", "output_smiles", "score_before", "score_after", "sim", "iterations_used")


def _write(path, lines: list[str], head: list[str]) -> None:
    body = "".join(f"# {h}\n" for h in head) + "".join(line + "\n" for line in lines)
    if path is None or str(path) == "-":
        sys.stdout.write(body)
    else:
        Path(path).write_text(body, encoding="utf-8")


def _sa(table):
    if table is None:
        return SAScorer()
    try:
        return SAScorer.from_file(table)
    except OSError as e:
        raise InputError(f"cannot read {table}: {e.strerror}") from None
    except ValueError as e:
        raise InputError(str(e)) from None


def _scorer(name: str, calib, sa_table=None):
    """(scorer, plogp constants or None, header lines describing both)."""
    cfg = None
    if calib is not None:
        try:
            cfg = PlogpConfig.load(calib)
        except OSError as e:
            raise InputError(f"cannot read {calib}: {e.strerror}") from None
        except ValueError as e:
            raise InputError(f"{calib}: {e}") from None
    sa = _sa(sa_table)
    try:
        prop = get_scorer(name, cfg, sa)
    except ValueError as e:
        raise InputError(str(e)) from None
    notes = [f"prop = {name}"]
    if name in ("plogp", "sa"):
        notes.append(f"sa_table = {sa_table}" if sa_table else "sa_table = none (complexity-only SA score)")
    if cfg is not None:
        notes += dump_kv(cfg)
    return prop, cfg, notes


def _fmt(x: float) -> str:
    return f"{x:.6f}"


# ----------------------------------------------------------------- commands


def cmd_score(a) -> int:
    prop, _, notes = _scorer(a.prop, a.calib, a.sa_table)
    rows = ["smiles\tscore"]
    for _, smi, m in read_corpus(a.corpus):
        rows.append(f"{smi}\t{_fmt(prop.score(m))}")
    _write(a.output, rows, header("score", settings=notes))
    return EXIT_OK


def cmd_calibrate(a) -> int:
    mols = [m for _, _, m in read_corpus(a.corpus)]
    if not mols:
        raise InputError(f"{a.corpus}: no molecules")
    cfg, warnings = calibrate(mols, _sa(a.sa_table), a.max_atoms)
    for w in warnings:
        log.warning(w)
    sa_note = f"sa_table = {a.sa_table}" if a.sa_table else "sa_table = none (complexity-only SA score)"
    head = header("calibrate", settings=[f"molecules = {len(mols)}", sa_note] + [f"warning: {w}" for w in warnings])
    _write(a.output, cfg.dumps().splitlines(), head)
    return EXIT_OK


def cmd_pairs(a) -> int:
    corpus = read_corpus(a.corpus)
    mols = [m for _, _, m in corpus]
    prop, _, notes = _scorer(a.prop, a.calib, a.sa_table)
    vocab = NodeVocabulary.from_molecules(mols)
    pairs, st = extract_pairs(mols, a.sim, prop, a.delta, vocab)
    settings = [f"corpus = {a.corpus}", f"sim = {a.sim!r}", f"delta = {a.delta!r}", *notes,
                f"candidates = {st.candidates}", f"similar = {st.similar}", f"improved = {st.improved}",
                f"ged_skipped = {st.ged_skipped}", f"replay_failed = {st.replay_failed}", f"kept = {st.kept}"]
    write_pairs(a.output, pairs, header("pairs", settings=settings))
    log.info("kept %d of %d candidate pairs", st.kept, st.candidates)
    if a.vocab:
        vocab.save(a.vocab)
    if a.hist:
        total = sum(st.site_hist.values())
        lines = ["sites\tpairs\tpercent"]
        for k in sorted(st.site_hist):
            lines.append(f"{k}\t{st.site_hist[k]}\t{100.0 * st.site_hist[k] / total:.2f}")
        _write(None if a.hist == "-" else a.hist, lines, header("pairs --hist", settings=settings[:3 + len(notes)]))
    return EXIT_OK


def cmd_train(a) -> int:
    try:
        rows = read_pair_rows(a.pairs)
    except OSError as e:
        raise InputError(f"cannot read {a.pairs}: {e.strerror}") from None
    except ValueError as e:
        raise InputError(str(e)) from None
    vocab = pair_vocabulary(rows)
    try:
        pairs, _ = read_pairs(a.pairs, vocab)
    except (ValueError, VocabularyMiss) as e:
        raise InputError(str(e)) from None
    overrides = {"epochs": a.epochs, "seed": a.seed, "hidden_dim": a.hidden, "batch": a.batch, "lr": a.lr}
    hp = resolve(HyperParams, a.config, overrides)
    if a.resume and Path(a.output).exists():
        model = Model.load(a.output, expect_vocab=vocab)
        if a.config is not None or any(v is not None for k, v in overrides.items() if k != "epochs"):
            stored = replace(model.hp, epochs=hp.epochs)
            if stored != hp:
                raise InputError("settings differ from the checkpoint being resumed; only --epochs may change")
        model.hp = replace(model.hp, epochs=hp.epochs if a.epochs is not None or a.config else model.hp.epochs)
        log.info("resuming from epoch %d", model.epoch)
    else:
        model = Model.fresh(hp, vocab)
    log.info("config: %s", "; ".join(dump_kv(model.hp)))
    try:
        train(model, pairs, epochs=model.hp.epochs, log_path=a.log, checkpoint=a.output,
              target_accuracy=a.target_accuracy)
    except PairError as e:
        raise InputError(f"pair is not replayable: {e}") from None
    return EXIT_OK


def _optimize_one(job):
    idx, smi = job
    model, prop, cfg, multi = _WORKER
    run = modof_pipe_m if multi else modof_pipe
    return run(parse_smiles(smi), model, prop, cfg, idx, _WORKER_DECODER[0])


_WORKER = None
_WORKER_DECODER = [None]


def _init_worker(model_path, prop_name, calib, sa_table, cfg, multi):
    global _WORKER
    model = Model.load(model_path)
    prop, _, _ = _scorer(prop_name, calib, sa_table)
    _WORKER = (model, prop, cfg, multi)
    _WORKER_DECODER[0] = Decoder(model, cfg.cap)


def _file_sets(path, key: str) -> bool:
    if path is None:
        return False
    try:
        return key in parse_kv(Path(path).read_text(encoding="utf-8"), str(path))
    except OSError:
        return False


def cmd_optimize(a) -> int:
    corpus = read_corpus(a.corpus)
    try:
        model = Model.load(a.model)
    except FileNotFoundError:
        raise InputError(f"cannot read model {a.model}") from None
    prop, pcfg, notes = _scorer(a.prop, a.calib, a.sa_table)
    overrides = {"delta": a.delta, "K": a.k, "max_iters": a.iters, "m": a.m, "b": a.b, "seed": a.seed,
                 "improving_only": a.improving_only or None}
    if a.m is None and not _file_sets(a.config, "m"):
        # default beam width shrinks to fit a small K
        k = resolve(PipeConfig, a.config, {**overrides, "m": 1}).K
        overrides["m"] = min(PipeConfig.m, k)
    cfg = resolve(PipeConfig, a.config, overrides)
    if pcfg is not None:
        cfg = resolve(PipeConfig, None, {"cap": pcfg.max_atoms}, base=cfg)
    settings = dump_kv(cfg) + [f"multi = {a.multi}", f"vocab = {model.vocab.digest()}"] + notes
    log.info("config: %s", "; ".join(settings))
    jobs = [(i, smi) for i, (_, smi, _) in enumerate(corpus)]
    threads = a.threads or os.cpu_count() or 1
    if threads > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(threads, initializer=_init_worker,
                                 initargs=(a.model, a.prop, a.calib, a.sa_table, cfg, a.multi)) as ex:
            results = list(ex.map(_optimize_one, jobs))
    else:
        decoder = Decoder(model, cfg.cap)
        run = modof_pipe_m if a.multi else modof_pipe
        results = [run(parse_smiles(smi), model, prop, cfg, i, decoder) for i, smi in jobs]
    rows = ["\t".join(RESULT_COLUMNS)]
    for r in results:
        for o in r.outputs:
            rows.append("\t".join((r.input_smiles, o.smiles, _fmt(r.input_score), _fmt(o.score), _fmt(o.sim),
                                   str(r.iterations_used))))
    _write(a.output, rows, header("optimize", settings=settings))
    if a.trace:
        lines = ["input_index\titeration\tsource_count\tcandidate\tscore\tsim\taccepted"]
        for i, r in enumerate(results):
            for tr in r.iterations:
                acc = set(tr.accepted)
                for c in tr.candidates:
                    lines.append(f"{i}\t{tr.t + 1}\t{len(tr.sources)}\t{c.smiles}\t{_fmt(c.score)}\t{_fmt(c.sim)}\t"
                                 f"{int(c.smiles in acc)}")
        _write(a.trace, lines, header("optimize --trace", cfg.seed))
    if a.report:
        rep = summarize(results, cfg.max_iters)
        lines = ["iteration\tin_pct\tp_pct\timprv_mean\timprv_std\tsim_mean\tsim_std"]
        for row in rep.per_iteration:
            lines.append(f"{row.t}\t{row.in_pct:.2f}\t{row.p_pct:.2f}\t{_fmt(row.imprv[0])}\t{_fmt(row.imprv[1])}\t"
                         f"{_fmt(row.sim[0])}\t{_fmt(row.sim[1])}")
        lines.append(f"all\t100.00\t{rep.improved_pct:.2f}\t{_fmt(rep.imprv[0])}\t{_fmt(rep.imprv[1])}\t"
                     f"{_fmt(rep.sim[0])}\t{_fmt(rep.sim[1])}")
        _write(a.report, lines, header("optimize --report", settings=settings))
    return EXIT_OK


def cmd_stats(a) -> int:
    try:
        rows = read_pair_rows(a.pairs)
        vocab = pair_vocabulary(rows)
        pairs, _ = read_pairs(a.pairs, vocab)
    except OSError as e:
        raise InputError(f"cannot read {a.pairs}: {e.strerror}") from None
    except (ValueError, VocabularyMiss) as e:
        raise InputError(str(e)) from None
    rep = fragment_stats(pairs)
    _write(a.output, rep.to_tsv(a.top).splitlines(), header("stats", settings=[f"pairs_file = {a.pairs}"]))
    return EXIT_OK


# ------------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("-v", "--verbose", action="store_true")
    common.add_argument("--threads", type=int, default=None, help="worker processes (default: all CPUs)")
    p = argparse.ArgumentParser(prog="modof", description="single-fragment molecule optimisation toolkit")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("score", parents=[common], help="score every molecule of a corpus")
    s.add_argument("corpus")
    s.add_argument("--prop", default="plogp", choices=("plogp", "logp", "sa", "cycle"))
    s.add_argument("--calib")
    s.add_argument("--sa-table", help="hash<TAB>score fragment table for the SA score")
    s.add_argument("-o", "--output")
    s.set_defaults(func=cmd_score)

    s = sub.add_parser("calibrate", parents=[common], help="normalisation constants for penalized logP")
    s.add_argument("corpus")
    s.add_argument("-o", "--output", required=True)
    s.add_argument("--max-atoms", type=int, default=38)
    s.add_argument("--sa-table", help="hash<TAB>score fragment table for the SA score")
    s.set_defaults(func=cmd_calibrate)

    s = sub.add_parser("pairs", parents=[common], help="extract single-site training pairs")
    s.add_argument("corpus")
    s.add_argument("--sim", type=float, default=0.6)
    s.add_argument("--delta", type=float, default=0.0)
    s.add_argument("--prop", default="plogp", choices=("plogp", "logp", "sa", "cycle"))
    s.add_argument("--calib")
    s.add_argument("--sa-table", help="hash<TAB>score fragment table for the SA score")
    s.add_argument("--vocab", help="also write the node vocabulary here")
    s.add_argument("--hist", nargs="?", const="-", help="write the disconnection-site histogram (default stdout)")
    s.add_argument("-o", "--output", required=True)
    s.set_defaults(func=cmd_pairs)

    s = sub.add_parser("train", parents=[common], help="train a model on a pairs file")
    s.add_argument("pairs")
    s.add_argument("--config")
    s.add_argument("-o", "--output", required=True)
    s.add_argument("--log")
    s.add_argument("--resume", action="store_true")
    s.add_argument("--epochs", type=int)
    s.add_argument("--seed", type=int)
    s.add_argument("--hidden", type=int)
    s.add_argument("--batch", type=int)
    s.add_argument("--lr", type=float)
    s.add_argument("--target-accuracy", type=float)
    s.set_defaults(func=cmd_train)

    s = sub.add_parser("optimize", parents=[common], help="optimise molecules with a trained model")
    s.add_argument("corpus")
    s.add_argument("--model", required=True)
    s.add_argument("--config")
    s.add_argument("--prop", default="plogp", choices=("plogp", "logp", "sa", "cycle"))
    s.add_argument("--calib")
    s.add_argument("--sa-table", help="hash<TAB>score fragment table for the SA score")
    s.add_argument("--delta", type=float)
    s.add_argument("--k", type=int)
    s.add_argument("--iters", type=int)
    s.add_argument("--multi", action="store_true")
    s.add_argument("--m", type=int)
    s.add_argument("--b", type=int)
    s.add_argument("--improving-only", action="store_true")
    s.add_argument("--seed", type=int)
    s.add_argument("--trace")
    s.add_argument("--report")
    s.add_argument("-o", "--output")
    s.set_defaults(func=cmd_optimize)

    s = sub.add_parser("stats", parents=[common], help="fragment frequency report of a pairs file")
    s.add_argument("pairs")
    s.add_argument("--top", type=int)
    s.add_argument("-o", "--output")
    s.set_defaults(func=cmd_stats)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    a = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if a.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    for name in ("score", "calibrate", "pairs", "train", "stats"):
        if a.command == name and a.threads not in (None, 1):
            log.info("%s runs single-process; --threads ignored", name)
    try:
        return a.func(a)
    except InputError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INPUT
    except (VocabularyMismatch, CheckpointError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_MODEL
    except NumericError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
