"""Central-difference gradient checking."""
from __future__ import annotations

import numpy as np

from .autodiff import no_grad
from .optim import ParamStore


def grad_check(f, store: ParamStore, h: float = 1e-5, max_coords: int | None = None,
               rng: np.random.Generator | None = None, names=None) -> float:
    """Max over checked coordinates of |analytic - numeric| / max(1, |analytic|).

    ``f`` maps the store to a scalar Tensor and must be deterministic. With
    ``max_coords`` only that many coordinates per parameter are sampled.
    """
    store.zero_grad()
    out = f(store)
    out.backward()
    grads = store.grads()
    rng = rng or np.random.default_rng(0)
    worst = 0.0
    for name in names or store.names():
        t = store[name]
        flat = t.data.reshape(-1)
        coords = np.arange(flat.size)
        if max_coords is not None and flat.size > max_coords:
            coords = np.sort(rng.choice(flat.size, size=max_coords, replace=False))
        ga = grads[name].reshape(-1)
        for c in coords:
            orig = flat[c]
            with no_grad():
                flat[c] = orig + h
                up = f(store).item()
                flat[c] = orig - h
                down = f(store).item()
            flat[c] = orig
            num = (up - down) / (2 * h)
            err = abs(ga[c] - num) / max(1.0, abs(ga[c]))
            worst = max(worst, err)
    store.zero_grad()
    return worst
