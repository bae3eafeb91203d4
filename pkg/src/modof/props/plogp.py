"""Cycle score, penalized logP and the pluggable property-scorer interface."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, fields
from pathlib import Path
from typing import Protocol

from ..chem.molecule import Molecule
from ..chem.rings import largest_ring_size
from .crippen import crippen_logp
from .sascore import SAScorer


def cycle_score(m: Molecule) -> float:
    """Penalty for rings larger than six atoms; 0 for anything smaller."""
    return float(-max(0, largest_ring_size(m) - 6))


@dataclass
class PlogpConfig:
    """z-normalisation constants. The ``sa_*`` pair applies to the negated SA score."""
    logp_mean: float = 0.0
    logp_std: float = 1.0
    sa_mean: float = 0.0
    sa_std: float = 1.0
    cycle_mean: float = 0.0
    cycle_std: float = 1.0
    max_atoms: int = 38

    def __post_init__(self):
        for name in ("logp_std", "sa_std", "cycle_std"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.max_atoms < 1:
            raise ValueError("max_atoms must be at least 1")

    def dumps(self) -> str:
        out = []
        for k, v in asdict(self).items():
            out.append(f"{k} = {v!r}" if isinstance(v, float) else f"{k} = {v}")
        return "\n".join(out) + "\n"

    @classmethod
    def loads(cls, text: str) -> PlogpConfig:
        known = {f.name: f.type for f in fields(cls)}
        vals = {}
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"line {lineno}: expected key = value")
            k, v = (x.strip() for x in line.split("=", 1))
            if k not in known:
                raise ValueError(f"line {lineno}: unknown key {k!r}")
            vals[k] = int(v) if k == "max_atoms" else float(v)
        return cls(**vals)

    @classmethod
    def load(cls, path) -> PlogpConfig:
        return cls.loads(Path(path).read_text(encoding="utf-8"))


def plogp_components(m: Molecule, sa: SAScorer | None = None) -> tuple[float, float, float]:
    """(logP, -SA, cycle score): each component is 'higher is better'."""
    sa = sa or SAScorer()
    return crippen_logp(m), -sa.score(m), cycle_score(m)


def plogp(m: Molecule, cfg: PlogpConfig | None = None, sa: SAScorer | None = None) -> float:
    cfg = cfg or PlogpConfig()
    logp, neg_sa, cyc = plogp_components(m, sa)
    return ((logp - cfg.logp_mean) / cfg.logp_std + (neg_sa - cfg.sa_mean) / cfg.sa_std
            + (cyc - cfg.cycle_mean) / cfg.cycle_std)


def _mean_std(xs: list[float]) -> tuple[float, float]:
    mu = math.fsum(xs) / len(xs)
    var = math.fsum((x - mu) ** 2 for x in xs) / len(xs)
    return mu, math.sqrt(var)


def calibrate(mols, sa: SAScorer | None = None, max_atoms: int = 38) -> tuple[PlogpConfig, list[str]]:
    """Corpus mean/std of each component. Degenerate spreads fall back to 1 with a warning."""
    rows = [plogp_components(m, sa) for m in mols]
    if not rows:
        raise ValueError("cannot calibrate on an empty corpus")
    warnings = []
    vals = {}
    for name, col in zip(("logp", "sa", "cycle"), zip(*rows)):
        mu, sd = _mean_std(list(col))
        if not sd > 1e-12:
            warnings.append(f"{name} has zero spread on this corpus; using std = 1")
            sd = 1.0
        vals[f"{name}_mean"], vals[f"{name}_std"] = mu, sd
    return PlogpConfig(**vals, max_atoms=max_atoms), warnings


class PropertyScorer(Protocol):
    name: str

    def score(self, m: Molecule) -> float: ...


@dataclass
class LogPScorer:
    name: str = "logp"

    def score(self, m: Molecule) -> float:
        return crippen_logp(m)


@dataclass
class SAScoreScorer:
    sa: SAScorer
    name: str = "sa"

    def score(self, m: Molecule) -> float:
        return self.sa.score(m)


@dataclass
class CycleScorer:
    name: str = "cycle"

    def score(self, m: Molecule) -> float:
        return cycle_score(m)


@dataclass
class PlogpScorer:
    cfg: PlogpConfig
    sa: SAScorer
    name: str = "plogp"

    def score(self, m: Molecule) -> float:
        return plogp(m, self.cfg, self.sa)


def get_scorer(name: str, cfg: PlogpConfig | None = None, sa: SAScorer | None = None) -> PropertyScorer:
    sa = sa or SAScorer()
    if name == "plogp":
        return PlogpScorer(cfg or PlogpConfig(), sa)
    if name == "logp":
        return LogPScorer()
    if name == "sa":
        return SAScoreScorer(sa)
    if name == "cycle":
        return CycleScorer()
    raise ValueError(f"unknown property {name!r}")
