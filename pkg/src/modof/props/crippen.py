"""Wildman-Crippen atom-contribution logP."""
from __future__ import annotations

from functools import lru_cache
from importlib import resources

from ..chem.molecule import Molecule
from .smarts import HGraph, Pattern


class AtomTypeError(ValueError):
    pass


@lru_cache(maxsize=1)
def atom_types() -> tuple[tuple[str, Pattern, float], ...]:
    text = resources.files("modof.props").joinpath("data/crippen.tsv").read_text(encoding="utf-8")
    rows = []
    for line in text.splitlines():
        if not line.strip() or line.startswith("#"):
            continue
        name, smarts, logp = line.split("\t")[:3]
        rows.append((name, Pattern(smarts), float(logp)))
    return tuple(rows)


def atom_contributions(m: Molecule) -> list[tuple[int, str, float]]:
    """(vertex, type, logP share) for every atom, hydrogens appended after heavy atoms."""
    g = HGraph.from_molecule(m)
    out = []
    types = atom_types()
    for i in range(len(g)):
        for name, pat, val in types:
            if pat.matches_at(g, i):
                out.append((i, name, val))
                break
        else:
            what = f"heavy atom {i}" if i < g.n_heavy else f"hydrogen on atom {g.adj[i][0][0]}"
            raise AtomTypeError(f"{what} matches no Crippen atom type")
    return out


def crippen_logp(m: Molecule) -> float:
    return float(sum(v for _, _, v in atom_contributions(m)))
