"""``key = value`` configuration files mapped onto dataclasses, plus corpus reading."""
from __future__ import annotations

from dataclasses import fields, replace
from pathlib import Path

from . import __version__
from .chem.smiles import SmilesError, parse_smiles


class InputError(ValueError):
    """Bad user input: unreadable file, malformed line, unknown key."""


def _convert(kind: str, raw: str, key: str):
    try:
        if kind == "bool":
            low = raw.lower()
            if low not in ("true", "false", "1", "0", "yes", "no"):
                raise ValueError(raw)
            return low in ("true", "1", "yes")
        if kind == "int":
            return int(raw)
        if kind == "float":
            return float(raw)
    except ValueError:
        raise InputError(f"{key}: cannot read {raw!r} as {kind}") from None
    return raw


def parse_kv(text: str, source: str = "<config>") -> dict[str, str]:
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InputError(f"{source}:{lineno}: expected 'key = value'")
        k, v = (x.strip() for x in line.split("=", 1))
        if k in out:
            raise InputError(f"{source}:{lineno}: duplicate key {k!r}")
        out[k] = v
    return out


def resolve(cls, path=None, overrides: dict | None = None, base=None):
    """An instance of dataclass ``cls`` from defaults (or ``base``), then the file, then overrides.

    Unknown keys in the file are rejected; ``None`` overrides are ignored.
    """
    kinds = {f.name: f.type if isinstance(f.type, str) else f.type.__name__ for f in fields(cls)}
    vals = {}
    if path is not None:
        try:
            text = Path(path).read_text(encoding="utf-8")
        except OSError as e:
            raise InputError(f"cannot read config {path}: {e.strerror}") from None
        for k, v in parse_kv(text, str(path)).items():
            if k not in kinds:
                raise InputError(f"{path}: unknown key {k!r} (known: {', '.join(sorted(kinds))})")
            vals[k] = _convert(kinds[k], v, k)
    for k, v in (overrides or {}).items():
        if v is not None:
            vals[k] = v
    try:
        return replace(base, **vals) if base is not None else cls(**vals)
    except (TypeError, ValueError) as e:
        raise InputError(str(e)) from None


def dump_kv(obj, skip=()) -> list[str]:
    return [f"{f.name} = {getattr(obj, f.name)!r}" for f in fields(obj) if f.name not in skip]


def header(command: str, seed=None, settings: list[str] | None = None) -> list[str]:
    """Comment lines (without the leading '# ') recording version, seed and resolved settings."""
    lines = [f"modof {__version__} {command}"]
    if seed is not None:
        lines.append(f"seed = {seed}")
    lines += settings or []
    return lines


def read_corpus(path) -> list[tuple[int, str, object]]:
    """(line number, smiles, Molecule) for every non-blank, non-comment line; the first column is the SMILES."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise InputError(f"cannot read {path}: {e.strerror}") from None
    out = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        smi = line.split()[0]
        try:
            out.append((lineno, smi, parse_smiles(smi)))
        except SmilesError as e:
            raise InputError(f"{path}:{lineno}: cannot parse {smi!r}: {e}") from None
    return out
