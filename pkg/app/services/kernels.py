# app/services/kernels.py
"""Free-space kernels of the 2D Laplacian.

All functions accept a single point of shape (2,) or a stack of shape (..., 2)
and broadcast over the leading axes.
"""
import numpy as np

from app.exceptions import DomainError

TWO_PI = 2.0 * np.pi


def perp(z):
    """z^perp = (-z2, z1)."""
    z = np.asarray(z, dtype=np.float64)
    return np.stack((-z[..., 1], z[..., 0]), axis=-1)


def _squared_norm(z):
    return z[..., 0] ** 2 + z[..., 1] ** 2


def newtonian_potential(z):
    """G(z) = -(1/2pi) log|z|."""
    z = np.asarray(z, dtype=np.float64)
    r2 = _squared_norm(z)
    if np.any(r2 == 0.0):
        raise DomainError("Newtonian potential is singular at z = 0.")
    return -np.log(r2) / (2.0 * TWO_PI)


def biot_savart_kernel(z):
    """K(z) = (1/2pi) z^perp / |z|^2, the rotated gradient -grad^perp G."""
    z = np.asarray(z, dtype=np.float64)
    r2 = _squared_norm(z)
    if np.any(r2 == 0.0):
        raise DomainError("Biot-Savart kernel is singular at z = 0.")
    return perp(z) / (TWO_PI * r2)[..., None]


def blob_kernel(z, blob_size: float):
    """Algebraic (Rosenhead-Moore) regularization: (1/2pi) z^perp / (|z|^2 + blob_size^2).

    Vanishes at z = 0, so a particle never advects itself.
    """
    if not blob_size > 0.0:
        raise DomainError(f"Blob size must be positive, got {blob_size}.")
    z = np.asarray(z, dtype=np.float64)
    denom = _squared_norm(z) + blob_size * blob_size
    return perp(z) / (TWO_PI * denom)[..., None]


def blob_sum(targets, sources, weights, blob_size: float):
    """Sum_q weights[q] * K_blob(targets[p] - sources[q]) for every target.

    The reduction over sources runs in a fixed order for every target, so the
    result does not depend on how targets are partitioned.
    """
    targets = np.asarray(targets, dtype=np.float64).reshape(-1, 2)
    sources = np.asarray(sources, dtype=np.float64).reshape(-1, 2)
    weights = np.asarray(weights, dtype=np.float64).reshape(-1)
    if sources.shape[0] == 0 or targets.shape[0] == 0:
        return np.zeros((targets.shape[0], 2))
    dx = targets[:, None, 0] - sources[None, :, 0]
    dy = targets[:, None, 1] - sources[None, :, 1]
    coef = weights[None, :] / (TWO_PI * (dx * dx + dy * dy + blob_size * blob_size))
    return np.stack((-(coef * dy).sum(axis=1), (coef * dx).sum(axis=1)), axis=-1)


def point_vortex_sum(targets, sources, strengths):
    """Singular Biot-Savart sum that skips coincident target/source pairs."""
    targets = np.asarray(targets, dtype=np.float64).reshape(-1, 2)
    sources = np.asarray(sources, dtype=np.float64).reshape(-1, 2)
    strengths = np.asarray(strengths, dtype=np.float64).reshape(-1)
    dx = targets[:, None, 0] - sources[None, :, 0]
    dy = targets[:, None, 1] - sources[None, :, 1]
    r2 = dx * dx + dy * dy
    same = r2 == 0.0
    r2 = np.where(same, 1.0, r2)
    coef = np.where(same, 0.0, strengths[None, :] / (TWO_PI * r2))
    return np.stack((-(coef * dy).sum(axis=1), (coef * dx).sum(axis=1)), axis=-1)
