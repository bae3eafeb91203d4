"""Morgan-style circular fingerprints with a fully specified 64-bit FNV-1a hash."""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass

import numpy as np

from ..chem.molecule import ATOMIC_NUMBER, Molecule

FNV_OFFSET = 0xCBF29CE484222325
FNV_PRIME = 0x100000001B3
MASK64 = (1 << 64) - 1


def fnv1a64(values) -> int:
    """FNV-1a over the little-endian signed 64-bit encoding of each integer."""
    h = FNV_OFFSET
    for v in values:
        for byte in int(v).to_bytes(8, "little", signed=True):
            h ^= byte
            h = (h * FNV_PRIME) & MASK64
    return h


def _signed(h: int) -> int:
    return h - (1 << 64) if h >= 1 << 63 else h


def atom_environments(m: Molecule, radius: int = 2) -> Counter:
    """Hashes of distinct circular environments (layer 0..radius) with occurrence counts.

    An environment is skipped when its bond set repeats one already emitted;
    among atoms sharing a new bond set the smallest hash is kept.
    """
    n = len(m.atoms)
    ring = m.ring_atom_flags
    inv = [fnv1a64((ATOMIC_NUMBER[a.element], a.charge, m.heavy_degree(i), m.hydrogens(i), int(ring[i])))
           for i, a in enumerate(m.atoms)]
    out: Counter = Counter(inv)
    envs = [frozenset() for _ in range(n)]
    seen = {frozenset()}
    for layer in range(1, radius + 1):
        new_inv, new_envs = [], []
        for i in range(n):
            nb = sorted((m.bonds[k].order, _signed(inv[j])) for j, k in m.adjacency[i])
            flat = [layer, _signed(inv[i])]
            for order, h in nb:
                flat.extend((order, h))
            new_inv.append(fnv1a64(flat))
            env = set(envs[i])
            for j, k in m.adjacency[i]:
                env.add(k)
                env |= envs[j]
            new_envs.append(frozenset(env))
        groups: dict[frozenset, int] = {}
        for i in range(n):
            e = new_envs[i]
            if e in seen:
                continue
            groups[e] = min(groups.get(e, new_inv[i]), new_inv[i])
        for e, h in groups.items():
            seen.add(e)
            out[h] += 1
        inv, envs = new_inv, new_envs
    return out


@dataclass(frozen=True)
class Fingerprint:
    words: np.ndarray  # packed uint64 words, bit b lives in word b // 64
    nbits: int
    radius: int = 2

    def __post_init__(self):
        if self.words.dtype != np.uint64 or self.words.shape != (_n_words(self.nbits),):
            raise ValueError("fingerprint words must be uint64 covering nbits")

    def on_bits(self) -> list[int]:
        bits = np.unpackbits(self.words.view(np.uint8), bitorder="little")
        return [int(b) for b in np.flatnonzero(bits)]

    def popcount(self) -> int:
        return int(np.bitwise_count(self.words).sum())

    def __eq__(self, other):
        return isinstance(other, Fingerprint) and self.nbits == other.nbits and bool(
            np.array_equal(self.words, other.words))

    def __hash__(self):
        return hash((self.nbits, self.words.tobytes()))

    @classmethod
    def from_bits(cls, bits, nbits: int = 2048, radius: int = 2) -> Fingerprint:
        _check_width(nbits)
        words = np.zeros(_n_words(nbits), dtype=np.uint64)
        for b in bits:
            if not 0 <= b < nbits:
                raise ValueError(f"bit {b} outside width {nbits}")
            words[b // 64] |= np.uint64(1) << np.uint64(b % 64)
        return cls(words, nbits, radius)


def _n_words(nbits: int) -> int:
    return (nbits + 63) // 64


def _check_width(nbits: int) -> None:
    if nbits < 1 or nbits & (nbits - 1):
        raise ValueError(f"nbits must be a power of two, got {nbits}")


def morgan_fp(m: Molecule, radius: int = 2, nbits: int = 2048) -> Fingerprint:
    _check_width(nbits)
    return Fingerprint.from_bits({h % nbits for h in atom_environments(m, radius)}, nbits, radius)


def tanimoto(a: Fingerprint, b: Fingerprint) -> float:
    if a.nbits != b.nbits:
        raise ValueError(f"fingerprint width mismatch: {a.nbits} vs {b.nbits}")
    inter = int(np.bitwise_count(a.words & b.words).sum())
    union = int(np.bitwise_count(a.words | b.words).sum())
    return 1.0 if union == 0 else inter / union


def stack_words(fps) -> np.ndarray:
    fps = list(fps)
    if not fps:
        return np.zeros((0, 1), dtype=np.uint64)
    return np.stack([f.words for f in fps])
