"""Iterative optimisation: repeated sampling of single-fragment edits under a similarity floor."""
from __future__ import annotations

import math
import zlib
from dataclasses import dataclass, field

from .chem.molecule import Molecule
from .chem.smiles import parse_smiles, write_smiles
from .net.decoder import TemplateCache, sample_decode
from .props.fingerprint import morgan_fp, tanimoto
from .tensor.rng import stream


@dataclass
class PipeConfig:
    delta: float = 0.4
    K: int = 20
    max_iters: int = 5
    m: int = 5
    b: int = 20
    cap: int = 38
    seed: int = 0
    improving_only: bool = False   # pipe^m: keep only outputs that beat the input

    def __post_init__(self):
        if not 0.0 <= self.delta <= 1.0:
            raise ValueError("delta must lie in [0, 1]")
        if self.K < 1 or self.max_iters < 1 or self.b < 1 or self.m < 1:
            raise ValueError("K, max_iters, m and b must be at least 1")
        if self.m > self.K:
            raise ValueError("beam width m cannot exceed K")


@dataclass
class Candidate:
    smiles: str
    score: float
    sim: float


@dataclass
class IterationTrace:
    t: int
    sources: list[str]
    candidates: list[Candidate]
    accepted: list[str] = field(default_factory=list)


@dataclass
class OptimResult:
    input_smiles: str
    input_score: float
    iterations: list[IterationTrace]
    outputs: list[Candidate]
    tag: str = ""

    @property
    def best(self) -> Candidate:
        return self.outputs[0]

    @property
    def iterations_used(self) -> int:
        return len(self.iterations)


class Decoder:
    """Seeded single-edit sampler with a cache keyed by (source smiles, seed key).

    The key of a draw depends only on the run seed, the input position, the
    iteration, the sample index and the source molecule, so pipe and pipe^m
    see identical edits of identical molecules.
    """

    def __init__(self, model, cap: int):
        self.model = model
        self.cap = cap
        self.templates = TemplateCache(model.vocab, model.params, model.hp.t_a)
        self.cache: dict[tuple, str] = {}

    def draw(self, source: str, key: tuple[int, ...]) -> str:
        k = (source,) + key
        hit = self.cache.get(k)
        if hit is None:
            rng = stream(*key, zlib.crc32(source.encode()))
            res = sample_decode(parse_smiles(source), self.model.params, self.model.hp, self.model.vocab, rng,
                                self.cap, templates=self.templates)
            hit = self.cache[k] = write_smiles(res.mol)
        return hit


class Scorer:
    """Memoised property score and similarity to the original input."""

    def __init__(self, prop, reference: Molecule):
        self.prop = prop
        self.ref_fp = morgan_fp(reference)
        self._cache: dict[str, tuple[float, float]] = {}

    def __call__(self, smiles: str) -> Candidate:
        hit = self._cache.get(smiles)
        if hit is None:
            m = parse_smiles(smiles)
            hit = self._cache[smiles] = (float(self.prop.score(m)), tanimoto(morgan_fp(m), self.ref_fp))
        return Candidate(smiles, *hit)


def _rank(c: Candidate):
    return (-c.score, c.smiles)


def modof_pipe(mx: Molecule, model, prop, cfg: PipeConfig, index: int = 0, decoder: Decoder | None = None) -> OptimResult:
    """Greedy loop: keep the best improving candidate above the similarity floor, stop when none improves."""
    decoder = decoder or Decoder(model, cfg.cap)
    src = write_smiles(mx)
    score = Scorer(prop, mx)
    start = score(src)
    current = start
    traces = []
    for t in range(cfg.max_iters):
        cands = [score(decoder.draw(current.smiles, (cfg.seed, index, t, k))) for k in range(cfg.K)]
        tr = IterationTrace(t, [current.smiles], cands)
        traces.append(tr)
        ok = [c for c in cands if c.sim >= cfg.delta and c.score > current.score]
        if not ok:
            break
        current = min(ok, key=_rank)
        tr.accepted.append(current.smiles)
    return OptimResult(src, start.score, traces, [current])


def modof_pipe_m(mx: Molecule, model, prop, cfg: PipeConfig, index: int = 0,
                 decoder: Decoder | None = None) -> OptimResult:
    """Beam variant: carry the top-m similar candidates forward and report the top-b of everything seen."""
    decoder = decoder or Decoder(model, cfg.cap)
    src = write_smiles(mx)
    score = Scorer(prop, mx)
    start = score(src)
    beam = [src]
    pool: dict[str, Candidate] = {}
    traces = []
    for t in range(cfg.max_iters):
        cands = []
        for s in beam:
            cands += [score(decoder.draw(s, (cfg.seed, index, t, k))) for k in range(cfg.K)]
        tr = IterationTrace(t, list(beam), cands)
        traces.append(tr)
        similar = {}
        for c in cands:
            if c.sim >= cfg.delta and c.smiles != src:
                similar[c.smiles] = c
        if not similar:
            break
        pool.update(similar)
        beam = [c.smiles for c in sorted(similar.values(), key=_rank)[:cfg.m]]
        tr.accepted = list(beam)
    outs = sorted(pool.values(), key=_rank)
    if cfg.improving_only:
        outs = [c for c in outs if c.score > start.score]
    if not outs:
        return OptimResult(src, start.score, traces, [start], "no-op")
    return OptimResult(src, start.score, traces, outs[:cfg.b])


def _mean_std(xs) -> tuple[float, float]:
    if not xs:
        return 0.0, 0.0
    mu = math.fsum(xs) / len(xs)
    return mu, math.sqrt(math.fsum((x - mu) ** 2 for x in xs) / len(xs))


@dataclass
class IterationRow:
    t: int
    in_pct: float        # inputs still being optimised at iteration t
    p_pct: float         # inputs improved at least once up to iteration t
    imprv: tuple[float, float]
    sim: tuple[float, float]


@dataclass
class BatchReport:
    results: list[OptimResult]
    imprv: tuple[float, float]     # over improved inputs
    sim: tuple[float, float]
    improved_pct: float
    per_iteration: list[IterationRow]


def summarize(results: list[OptimResult], max_iters: int) -> BatchReport:
    """Aggregate improvement and similarity of the best output per input, overall and per iteration."""
    n = len(results)
    if n == 0:
        return BatchReport([], (0.0, 0.0), (0.0, 0.0), 0.0, [])
    gains, sims = [], []
    for r in results:
        if r.best.score > r.input_score:
            gains.append(r.best.score - r.input_score)
            sims.append(r.best.sim)
    rows = []
    for t in range(max_iters):
        running = sum(1 for r in results if len(r.iterations) > t)
        g_t, s_t = [], []
        for r in results:
            best = None
            for tr in r.iterations[:t + 1]:
                for s in tr.accepted:
                    c = next(c for c in tr.candidates if c.smiles == s)
                    if c.score > r.input_score and (best is None or _rank(c) < _rank(best)):
                        best = c
            if best is not None:
                g_t.append(best.score - r.input_score)
                s_t.append(best.sim)
        rows.append(IterationRow(t + 1, 100.0 * running / n, 100.0 * len(g_t) / n, _mean_std(g_t), _mean_std(s_t)))
    return BatchReport(results, _mean_std(gains), _mean_std(sims), 100.0 * len(gains) / n, rows)


def batch_optimize(mols, model, prop, cfg: PipeConfig, multi: bool = False) -> BatchReport:
    decoder = Decoder(model, cfg.cap)
    run = modof_pipe_m if multi else modof_pipe
    results = [run(m, model, prop, cfg, i, decoder) for i, m in enumerate(mols)]
    return summarize(results, cfg.max_iters)
