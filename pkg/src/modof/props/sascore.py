"""Synthetic-accessibility score on the 1 (easy) .. 10 (hard) scale."""
from __future__ import annotations

import math
from pathlib import Path

from ..chem.molecule import Molecule
from .fingerprint import atom_environments

DEFAULT_FRAGMENT_SCORE = -4.0
SCORE_MIN, SCORE_MAX = -4.0, 2.5
# fragment term that maps a penalty-free molecule onto the easy end of the scale
NEUTRAL_FRAGMENT_SCORE = 10.0 * (SCORE_MAX - SCORE_MIN) / 9.0 + SCORE_MIN - 1.0


def load_fragment_table(path) -> tuple[dict[int, float], float]:
    """Read ``hash<TAB>score`` lines; an optional ``#default<TAB>value`` line overrides the default."""
    table: dict[int, float] = {}
    default = DEFAULT_FRAGMENT_SCORE
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = line.strip()
        if not line:
            continue
        if line.startswith("#"):
            parts = line[1:].split("\t")
            if parts[0].strip() == "default" and len(parts) > 1:
                default = float(parts[1])
            continue
        parts = line.split("\t")
        if len(parts) < 2:
            raise ValueError(f"{path}:{lineno}: expected hash<TAB>score")
        table[int(parts[0])] = float(parts[1])
    return table, default


def ring_topology(m: Molecule) -> tuple[int, int, int]:
    """(spiro atoms, bridgehead atoms, rings larger than eight)."""
    rings = [set(r) for r in m.rings]
    spiro, bridge = set(), set()
    for a in range(len(rings)):
        for b in range(a + 1, len(rings)):
            shared = rings[a] & rings[b]
            if len(shared) == 1:
                spiro |= shared
            elif len(shared) >= 3:
                union = rings[a] | rings[b]
                for x in shared:
                    deg = sum(1 for y in m.neighbors(x) if y in union)
                    if deg >= 3:
                        bridge.add(x)
    macro = sum(1 for r in rings if len(r) > 8)
    return len(spiro), len(bridge), macro


class SAScorer:
    """Fragment contribution plus complexity penalties, rescaled to [1, 10].

    Without a fragment table the fragment term is pinned so that a molecule with
    no penalties scores 1 and the symmetry term is dropped; ``complexity_only``
    reports this mode.
    """

    def __init__(self, table: dict[int, float] | None = None, default: float = DEFAULT_FRAGMENT_SCORE):
        self.table = table
        self.default = default

    @classmethod
    def from_file(cls, path) -> SAScorer:
        table, default = load_fragment_table(path)
        return cls(table, default)

    @property
    def complexity_only(self) -> bool:
        return self.table is None

    def raw(self, m: Molecule) -> float:
        n = len(m.atoms)
        if n == 0:
            return NEUTRAL_FRAGMENT_SCORE
        envs = atom_environments(m, 2)
        if self.table is None:
            frag = NEUTRAL_FRAGMENT_SCORE
            symmetry = 0.0
        else:
            total = sum(envs.values())
            frag = sum(self.table.get(h, self.default) * c for h, c in envs.items()) / total
            symmetry = 0.5 * math.log(n / len(envs)) if n > len(envs) else 0.0
        n_spiro, n_bridge, n_macro = ring_topology(m)
        penalty = (n ** 1.005 - n) + math.log10(n_spiro + 1) + math.log10(n_bridge + 1)
        if n_macro:
            penalty += math.log10(2)
        return frag - penalty + symmetry

    def score(self, m: Molecule) -> float:
        raw = self.raw(m)
        sa = 11.0 - (raw - SCORE_MIN + 1.0) / (SCORE_MAX - SCORE_MIN) * 9.0
        if sa > 8.0:
            sa = 8.0 + math.log(sa - 8.0)
        return min(10.0, max(1.0, sa))


def sa_score(m: Molecule, scorer: SAScorer | None = None) -> float:
    return (scorer or SAScorer()).score(m)
