"""Mapped Legendre bases on [0, 1] for rescaled time and covariate values."""

import numpy as np

from .errors import DomainError


def legendre_table(u, count: int) -> np.ndarray:
    """Orthonormal shifted Legendre polynomials of degree ``0..count-1``.

    Component ``l`` (0-based) is ``sqrt(2l + 1) * P_l(2u - 1)``, evaluated
    with Bonnet's three-term recurrence.  Returns an array of shape
    ``u.shape + (count,)``.
    """
    if count < 1:
        raise DomainError(f"basis count must be >= 1, got {count}")
    x = 2.0 * np.asarray(u, dtype=float) - 1.0
    out = np.empty(x.shape + (count,))
    p_prev = np.ones_like(x)
    out[..., 0] = p_prev
    if count > 1:
        p_cur = x.copy()
        out[..., 1] = p_cur
        for k in range(1, count - 1):
            p_next = ((2 * k + 1) * x * p_cur - k * p_prev) / (k + 1)
            out[..., k + 1] = p_next
            p_prev, p_cur = p_cur, p_next
    out *= np.sqrt(2.0 * np.arange(count) + 1.0)
    return out


def eval_time_basis(u, count: int) -> np.ndarray:
    """Time basis at rescaled time(s) ``u``; raises :class:`DomainError` outside [0, 1]."""
    u = np.asarray(u, dtype=float)
    # tolerate roundoff from the affine time remap
    if np.any((u < -1e-12) | (u > 1 + 1e-12)) or not np.all(np.isfinite(u)):
        raise DomainError("rescaled time must lie in [0, 1]")
    return legendre_table(np.clip(u, 0.0, 1.0), count)


def map_covariate(z, scale: float = 1.0) -> np.ndarray:
    """Compress the real line into (0, 1) by inverting the algebraic map.

    ``z / sqrt(scale**2 + z**2)`` lands in (-1, 1) and is then shifted onto
    (0, 1).  Strictly increasing, with ``0 -> 0.5``.
    """
    if scale <= 0:
        raise DomainError(f"scale must be positive, got {scale}")
    z = np.asarray(z, dtype=float)
    return 0.5 * (z / np.hypot(scale, z) + 1.0)


def eval_covariate_basis(z, count: int, scale: float = 1.0) -> np.ndarray:
    return legendre_table(map_covariate(z, scale), count)
