"""Arithmetic on label distributions (points of the probability simplex).

Every function works on a single distribution of shape ``(L,)`` and also
broadcasts over leading axes, so ``(n, L)`` batches are reduced row-wise.
Logarithms are natural; ``0 * log 0`` is taken to be 0 and a zero in ``q``
under the support of ``p`` yields ``+inf`` rather than an error.
"""

from __future__ import annotations

import enum

import numpy as np

SIMPLEX_TOL = 1e-9


class PsiKind(enum.Enum):
    """Strictly convex generator of a Bregman distance."""

    QUADRATIC = "t2"  # psi(t) = t^2
    NEG_ENTROPY = "tlogt"  # psi(t) = t log t


def as_distribution(probs, num_labels: int | None = None) -> np.ndarray:
    """Validate ``probs`` as a simplex point (or batch of them) and return a float array."""
    p = np.asarray(probs, dtype=float)
    if p.ndim == 0:
        raise ValueError("a label distribution needs at least one axis")
    if num_labels is not None and p.shape[-1] != num_labels:
        raise ValueError(f"expected {num_labels} labels, got {p.shape[-1]}")
    if not np.all(np.isfinite(p)) or np.any(p < 0):
        raise ValueError("label distribution entries must be finite and non-negative")
    if np.any(np.abs(p.sum(axis=-1) - 1.0) > SIMPLEX_TOL):
        raise ValueError("label distribution does not sum to 1")
    return p


def uniform(num_labels: int) -> np.ndarray:
    if num_labels < 2:
        raise ValueError("need at least two labels")
    return np.full(num_labels, 1.0 / num_labels)


def point_mass(label: int, num_labels: int) -> np.ndarray:
    if num_labels < 2:
        raise ValueError("need at least two labels")
    if not 0 <= label < num_labels:
        raise ValueError(f"label {label} out of range for L={num_labels}")
    p = np.zeros(num_labels)
    p[label] = 1.0
    return p


def is_uniform(probs, atol: float = 1e-12) -> np.ndarray | bool:
    """True where a distribution equals the uniform one (row-wise for batches)."""
    p = np.asarray(probs, dtype=float)
    return np.all(np.abs(p - 1.0 / p.shape[-1]) <= atol, axis=-1)


def random_simplex(rng: np.random.Generator, num_labels: int, size=None) -> np.ndarray:
    """Draw from the symmetric Dirichlet(1), i.e. uniformly on the simplex."""
    return rng.dirichlet(np.ones(num_labels), size=size)


def _xlogy(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    # x * log(y) with 0 * log(anything) = 0
    with np.errstate(divide="ignore", invalid="ignore"):
        out = x * np.log(y)
    return np.where(x == 0, 0.0, out)


def shannon_entropy(p) -> np.ndarray | float:
    p = np.asarray(p, dtype=float)
    return -np.sum(_xlogy(p, p), axis=-1)


def kl_divergence(p, q) -> np.ndarray | float:
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = p * (np.log(p) - np.log(q))
    terms = np.where(p == 0, 0.0, terms)
    return np.sum(terms, axis=-1)


def cross_entropy(p, q) -> np.ndarray | float:
    """``sum_j p_j log(1 / q_j)``."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    return -np.sum(_xlogy(p, q), axis=-1)


def psi(kind: PsiKind, t) -> np.ndarray:
    t = np.asarray(t, dtype=float)
    if kind is PsiKind.QUADRATIC:
        return t * t
    return _xlogy(t, t)


def psi_prime(kind: PsiKind, t) -> np.ndarray:
    t = np.asarray(t, dtype=float)
    if kind is PsiKind.QUADRATIC:
        return 2.0 * t
    with np.errstate(divide="ignore"):
        return np.log(t) + 1.0


def psi_second(kind: PsiKind, t) -> np.ndarray:
    t = np.asarray(t, dtype=float)
    if kind is PsiKind.QUADRATIC:
        return np.full_like(t, 2.0)
    with np.errstate(divide="ignore"):
        return 1.0 / t


def psi_entropy(kind: PsiKind, p) -> np.ndarray | float:
    return -np.sum(psi(kind, p), axis=-1)


def bregman_distance(kind: PsiKind, p, q) -> np.ndarray | float:
    """``sum_i psi(p_i) - psi(q_i) - psi'(q_i) (p_i - q_i)``.

    For ``t log t`` the terms are rearranged to ``p log(p/q) - p + q`` so that
    coordinates with ``q_i = 0`` are handled by the usual conventions
    (0 when ``p_i = 0`` as well, ``+inf`` otherwise).
    """
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    if kind is PsiKind.QUADRATIC:
        return np.sum((p - q) ** 2, axis=-1)
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = p * (np.log(p) - np.log(q))
    terms = np.where(p == 0, 0.0, terms) - p + q
    return np.sum(terms, axis=-1)


def psi_cross_entropy(kind: PsiKind, p, q) -> np.ndarray | float:
    """ψ-entropy of ``p`` plus the Bregman distance from ``p`` to ``q``."""
    return psi_entropy(kind, p) + bregman_distance(kind, p, q)
