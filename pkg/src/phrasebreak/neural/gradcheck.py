"""Central finite-difference verification of analytic gradients."""

from __future__ import annotations

import math

import numpy as np

from phrasebreak.neural.param import zero_gradients


def finite_difference_check(loss_fn, params, h: float = 1e-5,
                            max_coords_per_param: int | None = None,
                            rng=None) -> float:
    """Compare analytic gradients against central differences.

    `loss_fn()` must run the forward pass and return a scalar; gradients are
    produced by one forward+backward sweep here, then each parameter
    coordinate is perturbed by +/-h and re-evaluated. Parameters must be
    float64 for the comparison to be meaningful. Returns the maximum relative
    error with denominator max(|analytic|, |numeric|, 1e-8).

    max_coords_per_param subsamples coordinates of large tensors (seeded by
    `rng`); by default every coordinate is checked.
    """
    for p in params:
        if p.value.dtype != np.float64:
            raise ValueError(
                f"gradient checks require float64 parameters, {p.name} is {p.value.dtype}"
            )
    zero_gradients(params)
    base = float(loss_fn(compute_grads=True))
    if not math.isfinite(base):
        raise ValueError(f"loss is non-finite: {base}")
    analytic = {p.name: p.grad.copy() for p in params}

    max_rel_error = 0.0
    for p in params:
        flat = p.value.reshape(-1)
        grad_flat = analytic[p.name].reshape(-1)
        n = flat.size
        if max_coords_per_param is not None and n > max_coords_per_param:
            picker = rng or np.random.default_rng(0)
            coords = picker.choice(n, size=max_coords_per_param, replace=False)
        else:
            coords = range(n)
        for idx in coords:
            original = flat[idx]
            flat[idx] = original + h
            loss_plus = float(loss_fn(compute_grads=False))
            flat[idx] = original - h
            loss_minus = float(loss_fn(compute_grads=False))
            flat[idx] = original
            if not (math.isfinite(loss_plus) and math.isfinite(loss_minus)):
                raise ValueError(f"loss non-finite while perturbing {p.name}[{idx}]")
            numeric = (loss_plus - loss_minus) / (2.0 * h)
            a = grad_flat[idx]
            rel = abs(a - numeric) / max(abs(a), abs(numeric), 1e-8)
            max_rel_error = max(max_rel_error, rel)
    return max_rel_error
