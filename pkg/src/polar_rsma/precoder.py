"""Two-stage precoding.

The outer stage ``F_g`` projects each polarization onto the null space
of every other group's dominant eigenvectors, so groups no longer
interfere.  Inside a group the common message gets a random isotropic
beam and each private message a beam that nulls the co-group users'
effective horizontal channels.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .channel import ConfigurationError, GroupModel, standard_complex_normal

__all__ = [
    "GroupPrecoder",
    "PrecoderSet",
    "group_precoder",
    "private_precoders",
    "private_precoders_batch",
    "common_precoder",
    "common_precoder_batch",
]

_SVD_ZERO = 1e-10


@dataclass(frozen=True, eq=False)
class GroupPrecoder:
    """Per-polarization projection ``F`` (the full one is ``I_2 kron F``)."""

    f: np.ndarray
    projected_dim: int
    null_basis: np.ndarray

    @property
    def k(self) -> np.ndarray:
        return np.kron(np.eye(2), self.f)


@dataclass(frozen=True, eq=False)
class PrecoderSet:
    common: np.ndarray
    private: np.ndarray  # (U, M_bar/2), one unit-norm row per user

    def stacked_common(self) -> np.ndarray:
        """Zero-padded common beam: vertical half carries it."""
        return np.concatenate([self.common, np.zeros_like(self.common)])

    def stacked_private(self, u: int) -> np.ndarray:
        return np.concatenate([np.zeros_like(self.private[u]), self.private[u]])


def group_precoder(own_group: GroupModel, other_groups: Sequence[GroupModel], projected_dim: int,
                   *, basis: str = "svd") -> GroupPrecoder:
    """Null-space precoder for one group.

    Stacks the kept eigenvectors of every other group, takes the left
    singular vectors belonging to zero singular values, and keeps
    ``projected_dim // 2`` of them.

    Parameters
    ----------
    own_group : GroupModel
        The served group.  Only its antenna count is needed for
        ``basis="svd"``.
    other_groups : sequence of GroupModel
        Interfering groups to be nulled.
    projected_dim : int
        Even total projected dimension over both polarizations (M_bar).
    basis : {"svd", "dominant"}
        ``"svd"`` keeps the first null-space columns in the order LAPACK
        returns them.  ``"dominant"`` rotates inside the null space to
        the directions carrying most of the own group's energy.
    """
    if projected_dim < 2 or projected_dim % 2:
        raise ConfigurationError(f"projected_dim must be an even integer >= 2, got {projected_dim}")
    n = own_group.antennas
    half = projected_dim // 2
    interferer_rank = sum(g.reduced_rank for g in other_groups)
    if not n > interferer_rank:
        raise ConfigurationError(
            f"M/2 > sum of other groups' ranks violated: {n} <= {interferer_rank}")
    if not half <= n - interferer_rank:
        raise ConfigurationError(
            f"M_bar/2 <= M/2 - sum of other groups' ranks violated: {half} > {n} - {interferer_rank}")

    if other_groups:
        stacked = np.hstack([g.eigvecs for g in other_groups])
        left, sv, _ = np.linalg.svd(stacked, full_matrices=True)
        rank = int(np.sum(sv > sv[0] * _SVD_ZERO))
        null = left[:, rank:]
    else:
        null = np.eye(n, dtype=complex)
    if null.shape[1] < half:
        raise ConfigurationError(
            f"null space of interfering groups has dimension {null.shape[1]} < M_bar/2 = {half}")

    if basis == "svd":
        f = null[:, :half]
    elif basis == "dominant":
        vals, vecs = np.linalg.eigh(null.conj().T @ own_group.covariance @ null)
        f = null @ vecs[:, np.argsort(vals)[::-1][:half]]
    else:
        raise ValueError(f"unknown basis {basis!r}")
    return GroupPrecoder(f=np.ascontiguousarray(f), projected_dim=projected_dim, null_basis=null)


def private_precoders_batch(effective: np.ndarray) -> np.ndarray:
    """Null-steering private beams for a batch of realizations.

    Parameters
    ----------
    effective : ndarray, shape (..., U, d)
        Effective channels ``F^H h_hh`` for each user.

    Returns
    -------
    ndarray, shape (..., U, d)
        Row ``u`` is orthogonal to every other user's effective channel.
        Among such vectors it is the one maximizing ``|e_u^H p|``, i.e.
        the normalized projection of ``e_u`` onto the null space.
    """
    e = np.asarray(effective)
    n_users, d = e.shape[-2], e.shape[-1]
    if n_users - 1 >= d:
        raise ConfigurationError(
            f"private null space is empty: U - 1 = {n_users - 1} >= M_bar/2 = {d}")
    out = np.empty_like(e)
    for u in range(n_users):
        own = e[..., u, :]
        if n_users == 1:
            p = own
        else:
            others = np.delete(e, u, axis=-2)  # (..., U-1, d)
            q, _ = np.linalg.qr(np.swapaxes(others, -1, -2))  # (..., d, U-1)
            coeff = np.einsum("...ij,...i->...j", q.conj(), own)
            p = own - np.einsum("...ij,...j->...i", q, coeff)
        norm = np.linalg.norm(p, axis=-1, keepdims=True)
        out[..., u, :] = p / norm
    return out


def private_precoders(f: GroupPrecoder, effective_hh_channels) -> np.ndarray:
    """Private beams for one realization.

    ``effective_hh_channels`` holds ``F^H h_hh`` per user, shape (U, M_bar/2).
    """
    e = np.asarray(effective_hh_channels)
    if e.shape[-1] != f.projected_dim // 2:
        raise ConfigurationError(
            f"effective channels have length {e.shape[-1]}, expected {f.projected_dim // 2}")
    p = private_precoders_batch(e)
    if not np.all(np.isfinite(p)):
        # own channel inside the span of the others (measure zero): any null vector works
        for u in np.flatnonzero(~np.all(np.isfinite(p), axis=-1)):
            others = np.delete(e, u, axis=0)
            _, _, vh = np.linalg.svd(others.conj(), full_matrices=True)
            p[u] = vh[-1].conj()
    return p


def common_precoder_batch(dim: int, rng: np.random.Generator, size: int) -> np.ndarray:
    c = standard_complex_normal(rng, (size, dim))
    return c / np.linalg.norm(c, axis=-1, keepdims=True)


def common_precoder(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Random isotropic unit-norm beam of length ``dim``."""
    if dim < 1:
        raise ConfigurationError(f"dim must be >= 1, got {dim}")
    return common_precoder_batch(dim, rng, 1)[0]
