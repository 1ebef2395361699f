"""Alignment pooling of a group-sparse code into a candidate likelihood."""

import numpy as np

__all__ = ["alignment_pool", "aligned_mass", "likelihood_from_codes"]


def _check_codes(C_hat, l, k):
    C_hat = np.asarray(C_hat, dtype=float)
    if C_hat.shape[-2:] != (l * k, l):
        raise ValueError(f"code must have trailing shape ({l * k}, {l}), got {C_hat.shape}")
    return C_hat


def aligned_mass(C_hat, l, k):
    """Aligned coefficients ``C_hat[q*l + r, r]`` as an array ``(..., k, l)``."""
    C_hat = _check_codes(C_hat, l, k)
    blocks = C_hat.reshape(C_hat.shape[:-2] + (k, l, l))
    return np.diagonal(blocks, axis1=-2, axis2=-1)


def alignment_pool(C_hat, l, k):
    """Representative vector ``v_r = mean_q C_hat[q*l + r, r]``.

    Only coefficients that pair patch ``r`` of the candidate with patch ``r``
    of a template survive; they are averaged over the ``k`` templates.
    Accepts a single ``(l*k, l)`` code or a stack ``(n, l*k, l)``.
    """
    return aligned_mass(C_hat, l, k).mean(axis=-2)


def likelihood_from_codes(C_hat, l, k):
    """Sum of the pooled vector; lies in ``[0, l]`` for feasible codes."""
    return alignment_pool(C_hat, l, k).sum(axis=-1)
