"""lq quasinorms, the sparsity index, keep-count rule, and compression metrics."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "lq_norm",
    "l0_norm",
    "sparsity_index",
    "keep_count",
    "keep_count_bound",
    "compression_ratio",
    "pruning_ratio",
    "achieved_tail_ratio",
    "top_m_indices",
    "SparsityProfile",
    "sparsity_profile",
]

_EXP_MAX = 709.782712893384  # log of the largest finite float64


def _as_vector(w) -> np.ndarray:
    a = np.asarray(w, dtype=float).ravel()
    if a.size == 0:
        raise ValueError("empty vector")
    if not np.isfinite(a).all():
        raise ValueError("vector contains NaN or Inf")
    return a


def _rescale_exact(a: np.ndarray, mx: float) -> tuple[np.ndarray, int]:
    # exact power-of-two rescale putting max|w| in [0.5, 1); ldexp keeps the
    # scaling lossless even when mx is subnormal
    e = math.frexp(mx)[1]
    return np.ldexp(a, -e), e


def lq_norm(w, q: float) -> float:
    """(sum |w_i|^q)^(1/q) for q in (0, 1].

    The vector is rescaled by an exact power of two before the powers are
    taken, so extreme magnitudes (subnormal or near-overflow) and small q
    cannot corrupt the intermediate arithmetic; a log-space fallback covers
    rescaled powers that still overflow.
    """
    if not 0.0 < q <= 1.0:
        raise ValueError(f"q must lie in (0, 1], got {q}")
    a = np.abs(_as_vector(w))
    mx = float(a.max())
    if mx == 0.0:
        return 0.0
    scaled, e = _rescale_exact(a, mx)
    m2 = float(scaled.max())
    s = float(np.sum((scaled / m2) ** q))
    val = s ** (1.0 / q)
    if math.isfinite(val):
        return float(np.ldexp(m2 * val, e))
    t = math.log(m2) + math.log(s) / q + e * math.log(2.0)
    return math.exp(t) if t < _EXP_MAX else math.inf


def l0_norm(w) -> int:
    """Number of exactly-nonzero entries."""
    return int(np.count_nonzero(_as_vector(w)))


def sparsity_index(w, q: float) -> float:
    """||w||_1 / ||w||_q for q in (0, 1); lives in [d^(1-1/q), 1], larger is sparser.

    Scale-invariant, so both norms are taken on an exactly rescaled copy of
    the vector and the ratio stays fully precise even at extreme magnitudes.
    """
    if not 0.0 < q < 1.0:
        raise ValueError(f"q must lie in (0, 1), got {q}")
    a = np.abs(_as_vector(w))
    mx = float(a.max())
    if mx == 0.0:
        raise ValueError("sparsity index is undefined for the zero vector")
    scaled, _ = _rescale_exact(a, mx)
    return float(np.sum(scaled)) / lq_norm(scaled, q)


def keep_count_bound(w, q: float, eta: float) -> float:
    """Real-valued lower bound on the keep count: SI^(-q/(1-q)) (1+eta)^(-1/(1-q))."""
    if eta < 0:
        raise ValueError(f"eta must be >= 0, got {eta}")
    si = sparsity_index(w, q)
    return si ** (-q / (1.0 - q)) * (1.0 + eta) ** (-1.0 / (1.0 - q))


def keep_count(w, q: float, eta: float) -> int:
    """Number of coefficients to keep: the bound rounded up, clamped to [1, d]."""
    a = _as_vector(w)
    raw = keep_count_bound(a, q, eta)
    return min(a.size, max(1, math.ceil(raw)))


def compression_ratio(total: int, kept: int) -> float:
    """total/kept; kept must be >= 1 (an all-pruned vector has no finite ratio)."""
    if total < 1:
        raise ValueError(f"total must be >= 1, got {total}")
    if not 0 <= kept <= total:
        raise ValueError(f"kept must lie in [0, total], got {kept}")
    if kept == 0:
        raise ValueError("compression ratio is infinite when nothing is kept")
    return total / kept


def pruning_ratio(total: int, kept: int) -> float:
    """1 - kept/total."""
    if total < 1:
        raise ValueError(f"total must be >= 1, got {total}")
    if not 0 <= kept <= total:
        raise ValueError(f"kept must lie in [0, total], got {kept}")
    return 1.0 - kept / total


def top_m_indices(w, m: int) -> np.ndarray:
    """Indices of the m largest |w_i|, ties broken by lower index; sorted ascending."""
    a = np.abs(_as_vector(w))
    if not 1 <= m <= a.size:
        raise ValueError(f"m must lie in [1, {a.size}], got {m}")
    order = np.argsort(-a, kind="stable")
    return np.sort(order[:m])


def achieved_tail_ratio(w, m: int, q: float) -> float:
    """sum_{i not in I_m} |w_i|^q / sum_{i in I_m} |w_i|^q with I_m the top-m set.

    Diagnoses the tolerance the chosen keep count actually realizes. Returns
    0.0 for the zero vector (empty head and tail).
    """
    if not 0.0 < q <= 1.0:
        raise ValueError(f"q must lie in (0, 1], got {q}")
    a = np.abs(_as_vector(w))
    idx = top_m_indices(a, m)
    powers = a**q
    head = float(powers[idx].sum())
    tail = float(powers.sum() - powers[idx].sum())
    if head == 0.0:
        return 0.0
    return max(tail, 0.0) / head


@dataclass(frozen=True)
class SparsityProfile:
    """Norm summary of one weight vector at a fixed q in (0, 1)."""

    d: int
    lq: float
    l1: float
    l0: int
    si: float
    q: float


def sparsity_profile(w, q: float) -> SparsityProfile:
    a = _as_vector(w)
    return SparsityProfile(
        d=a.size,
        lq=lq_norm(a, q),
        l1=float(np.sum(np.abs(a))),
        l0=l0_norm(a),
        si=sparsity_index(a, q),
        q=q,
    )
