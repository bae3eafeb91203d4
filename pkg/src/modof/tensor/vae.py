"""Diagonal Gaussians, their KL to the standard normal, and reparameterised sampling."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .autodiff import Tensor, add, exp, gaussian_kl, mul, scale


@dataclass
class Gaussian:
    mu: Tensor
    logvar: Tensor

    def __post_init__(self):
        if self.mu.shape != self.logvar.shape:
            raise ValueError(f"mu {self.mu.shape} and logvar {self.logvar.shape} differ in shape")


def kl_normal(g: Gaussian) -> Tensor:
    return gaussian_kl(g.mu, g.logvar)


def reparam_sample(g: Gaussian, rng: np.random.Generator) -> Tensor:
    eps = rng.standard_normal(g.mu.shape)
    return add(g.mu, mul(exp(scale(g.logvar, 0.5)), Tensor(eps)))
