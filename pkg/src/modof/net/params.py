"""Hyperparameters, the KL weight schedule and the named parameter set of the model."""
from __future__ import annotations

from dataclasses import asdict, dataclass, fields

import numpy as np

from ..tensor import ParamStore
from ..tensor.rng import stream

N_ATOM_TYPES = 120  # 12 elements x 5 charges x aromatic flag
N_BOND_TYPES = 4


@dataclass
class HyperParams:
    hidden_dim: int = 256
    z_dim: int = 32
    t_a: int = 6
    t_n: int = 3
    max_atoms: int = 38
    beta_init: float = 0.1
    beta_step: float = 0.05
    beta_every: int = 500
    beta_cap: float = 0.5
    lr: float = 0.001
    batch: int = 32
    epochs: int = 10
    seed: int = 0
    max_children: int = 8
    max_attachments: int = 30
    type_fallback: int = 10

    def __post_init__(self):
        for f in fields(self):
            v = getattr(self, f.name)
            if f.type in ("int", int) and f.name != "seed" and v < 1:
                raise ValueError(f"{f.name} must be at least 1, got {v}")
        if self.seed < 0:
            raise ValueError("seed must be non-negative")
        if not 0 < self.beta_init <= self.beta_cap:
            raise ValueError("need 0 < beta_init <= beta_cap")
        if self.beta_step < 0 or self.lr <= 0:
            raise ValueError("beta_step must be >= 0 and lr > 0")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> HyperParams:
        known = {f.name for f in fields(cls)}
        extra = set(d) - known
        if extra:
            raise ValueError(f"unknown hyperparameters: {sorted(extra)}")
        return cls(**d)


def beta_at(hp: HyperParams, batch_index: int, batches_per_epoch: int) -> float:
    """KL weight for the global (0-based) batch index.

    Constant during the first epoch, then raised by ``beta_step`` after every
    ``beta_every`` further batches up to ``beta_cap``.
    """
    if batch_index < batches_per_epoch:
        return hp.beta_init
    k = (batch_index - batches_per_epoch) // hp.beta_every
    return min(hp.beta_cap, hp.beta_init + hp.beta_step * k)


def param_shapes(hp: HyperParams, n_types: int) -> dict[str, tuple[int, ...]]:
    h, z = hp.hidden_dim, hp.z_dim
    return {
        # atom-level message passing
        "gmpn.atom_in": (N_ATOM_TYPES, h),
        "gmpn.bond_in": (N_BOND_TYPES, h),
        "gmpn.message": (h, h),
        "gmpn.atom_self": (N_ATOM_TYPES, h),
        "gmpn.readout": (hp.t_a * h, h),
        # tree-level message passing
        "tmpn.node_type": (n_types, h),
        "tmpn.node_in": (2 * h, h),
        "tmpn.node_msg": (h, h),
        "tmpn.shared": (h, h),
        "tmpn.message": (h, h),
        "tmpn.node_self_in": (2 * h, h),
        "tmpn.node_self": (h, h),
        "tmpn.readout": (hp.t_n * h, h),
        # latent heads
        "latent.minus_mu.w": (h, z), "latent.minus_mu.b": (z,),
        "latent.minus_logvar.w": (h, z), "latent.minus_logvar.b": (z,),
        "latent.plus_mu.w": (h, z), "latent.plus_mu.b": (z,),
        "latent.plus_logvar.w": (h, z), "latent.plus_logvar.b": (z,),
        # disconnection site
        "site.node": (h, h), "site.z": (2 * z, h), "site.out": (h,),
        # removal
        "remove.node": (h, h), "remove.z": (z, h), "remove.out": (h,),
        # expand or stop
        "expand.node": (h, h), "expand.z": (z, h), "expand.out": (h,),
        # child node type
        "ntype.node": (h, h), "ntype.z": (z, h), "ntype.out": (h, n_types),
        # parent attachment point
        "pattach.atom": (h, h), "pattach.child_type": (h, h), "pattach.parent": (h, h), "pattach.z": (z, h),
        "pattach.out": (h,),
        # child attachment point
        "cattach.atom": (h, h), "cattach.child_type": (h, h), "cattach.parent_atom": (h, h), "cattach.z": (z, h),
        "cattach.orient": (h, h), "cattach.out": (h,),
    }


def init_params(hp: HyperParams, n_types: int, seed: int | None = None, zero: bool = False) -> ParamStore:
    """Uniform(+-sqrt(6/(fan_in+fan_out))) weights and zero biases, drawn from a seeded stream."""
    store = ParamStore()
    rng = stream(hp.seed if seed is None else seed, 0)
    for name, shape in param_shapes(hp, n_types).items():
        if zero or name.endswith(".b"):
            store.add(name, np.zeros(shape))
            continue
        if len(shape) == 1:
            limit = np.sqrt(3.0 / shape[0])
        else:
            limit = np.sqrt(6.0 / (shape[0] + shape[1]))
        store.add(name, rng.uniform(-limit, limit, size=shape))
    return store
