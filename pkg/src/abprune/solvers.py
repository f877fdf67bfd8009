"""Least-squares and LASSO solvers used for per-neuron weight refitting.

The LASSO objective is (1/2N)||y - Xw||^2 + lambda * sum over penalized
coordinates of |w_j|. Coordinates flagged unpenalized (typically the constant
bias column) get plain least-squares updates. Coordinate descent runs on the
Gram matrix so many fits can share one X^T X.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit

__all__ = [
    "LassoConfig",
    "FitResult",
    "ols_min_norm",
    "gram_ols_min_norm",
    "lasso_cd",
    "lasso_gram",
    "kkt_violation",
]


@dataclass(frozen=True)
class LassoConfig:
    """Penalty and stopping settings for `lasso_cd`."""

    lam: float = 0.0
    tol: float = 1e-8
    max_iter: int = 10000
    penalize_constant: bool = False

    def __post_init__(self):
        if self.lam < 0:
            raise ValueError(f"lambda must be >= 0, got {self.lam}")
        if self.tol <= 0:
            raise ValueError(f"tol must be > 0, got {self.tol}")
        if self.max_iter < 1:
            raise ValueError(f"max_iter must be >= 1, got {self.max_iter}")


@dataclass
class FitResult:
    """Solver output: dense weights, their nonzero support, and a certificate."""

    weights: np.ndarray
    support: np.ndarray
    iterations: int
    converged: bool
    objective: float

    def __post_init__(self):
        if not math.isfinite(self.objective):
            raise ValueError(f"objective must be finite, got {self.objective}")


def _check_design(X, y) -> tuple[np.ndarray, np.ndarray]:
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float).ravel()
    if X.ndim != 2:
        raise ValueError(f"design matrix must be 2-D, got shape {X.shape}")
    if X.shape[0] != y.shape[0]:
        raise ValueError(f"{X.shape[0]} rows in X but {y.shape[0]} targets")
    if X.shape[0] < 1 or X.shape[1] < 1:
        raise ValueError(f"design must be at least 1x1, got {X.shape}")
    if not np.isfinite(X).all() or not np.isfinite(y).all():
        raise ValueError("design or targets contain NaN or Inf")
    return X, y


def ols_min_norm(X, y) -> FitResult:
    """Minimum-l2-norm least-squares solution (handles rank deficiency)."""
    X, y = _check_design(X, y)
    w, *_ = np.linalg.lstsq(X, y, rcond=None)
    r = y - X @ w
    obj = 0.5 * float(r @ r) / X.shape[0]
    return FitResult(w, np.flatnonzero(w), 0, True, obj)


def gram_ols_min_norm(G: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Min-norm least squares from normal-equation data G = X^T X, b = X^T y.

    The min-norm solution of G w = b equals pinv(X) y, so this matches
    `ols_min_norm` without touching the N-row design again.
    """
    G = np.asarray(G, dtype=float)
    b = np.asarray(b, dtype=float).ravel()
    w, *_ = np.linalg.lstsq(G, b, rcond=None)
    return w


@njit(cache=True)
def _gram_kkt(G, b, w, gw, thresh, n_rows):
    viol = 0.0
    for j in range(b.shape[0]):
        if G[j, j] <= 0.0:
            continue
        cj = (b[j] - gw[j]) / n_rows
        lam_j = thresh[j] / n_rows
        if w[j] > 0.0:
            v = abs(cj - lam_j)
        elif w[j] < 0.0:
            v = abs(cj + lam_j)
        else:
            v = abs(cj) - lam_j
            if v < 0.0:
                v = 0.0
        if v > viol:
            viol = v
    return viol


@njit(cache=True)
def _cd_kernel(G, b, thresh, n_rows, tol, max_iter, kkt_target, w, gw, obj_out, record_obj, yty, sweep0):
    d = b.shape[0]
    sweeps = 0
    converged = False
    while sweeps < max_iter:
        max_delta = 0.0
        w_inf = 0.0
        for j in range(d):
            gjj = G[j, j]
            if gjj <= 0.0:
                continue
            c = b[j] - gw[j] + gjj * w[j]
            t = thresh[j]
            if c > t:
                wj = (c - t) / gjj
            elif c < -t:
                wj = (c + t) / gjj
            else:
                wj = 0.0
            delta = wj - w[j]
            if delta != 0.0:
                for i in range(d):
                    gw[i] += G[i, j] * delta
                w[j] = wj
            a = abs(delta)
            if a > max_delta:
                max_delta = a
            a = abs(wj)
            if a > w_inf:
                w_inf = a
        sweeps += 1
        if record_obj:
            quad = yty
            pen = 0.0
            for j in range(d):
                quad += w[j] * (gw[j] - 2.0 * b[j])
                pen += thresh[j] * abs(w[j])
            obj_out[sweep0 + sweeps - 1] = 0.5 * quad / n_rows + pen / n_rows
        if max_delta <= tol * max(w_inf, 1e-12):
            if _gram_kkt(G, b, w, gw, thresh, n_rows) <= kkt_target:
                # incremental gw drifts; certify against a fresh product
                for i in range(d):
                    s = 0.0
                    for jj in range(d):
                        s += G[i, jj] * w[jj]
                    gw[i] = s
                if _gram_kkt(G, b, w, gw, thresh, n_rows) <= kkt_target:
                    converged = True
                    break
    return sweeps, converged


def _full_kkt(G, b, thresh, n_rows, w, usable):
    gw = G @ w
    c = np.where(usable, (b - gw) / n_rows, 0.0)
    lam = thresh / n_rows
    viol = np.where(
        w != 0.0,
        np.abs(c - lam * np.sign(w)),
        np.maximum(0.0, np.abs(c) - lam),
    )
    return float(viol.max()) if viol.size else 0.0


def _active_set_polish(G, b, thresh, n_rows, w, kkt_target):
    """Exact stationarity refinement when plain sweeps crawl.

    Repeatedly solves the fixed-sign normal equations on the active set,
    dropping coordinates whose solved sign flips and entering the worst
    KKT-violating coordinate, until the full conditions certify. Returns the
    refined weights or None if no certificate was reached.
    """
    d = b.shape[0]
    usable = np.diag(G) > 0.0
    penalized = thresh > 0.0
    active = (w != 0.0) & usable
    # unpenalized usable coordinates always participate
    active |= usable & ~penalized
    signs = np.sign(w)
    for _ in range(3 * d + 10):
        idx = np.flatnonzero(active)
        if idx.size:
            rhs = b[idx] - thresh[idx] * signs[idx]
            sol, *_ = np.linalg.lstsq(G[np.ix_(idx, idx)], rhs, rcond=None)
            if not np.isfinite(sol).all():
                return None
            flipped = penalized[idx] & ((np.sign(sol) != signs[idx]) | (sol == 0.0))
            if flipped.any():
                active[idx[flipped]] = False
                continue
            w2 = np.zeros(d)
            w2[idx] = sol
        else:
            w2 = np.zeros(d)
        gw2 = G @ w2
        c = np.where(usable, (b - gw2) / n_rows, 0.0)
        lam = thresh / n_rows
        viol = np.where(
            w2 != 0.0,
            np.abs(c - lam * np.sign(w2)),
            np.maximum(0.0, np.abs(c) - lam),
        )
        worst = int(np.argmax(viol))
        if viol[worst] <= kkt_target:
            return w2
        if active[worst]:
            return None  # stationarity solve failed to certify; give up
        active[worst] = True
        signs[worst] = np.sign(c[worst])
        w = w2
    return None


def _homotopy_rescue(G, b, thresh, n_rows, kkt_target):
    """Exact piecewise-linear path from the largest penalty down to the target.

    Classic least-angle-style homotopy on the Gram data. On each segment the
    active-set weights are affine in the penalty; we step to the next
    enter/leave event until the target penalty is reached, then certify the
    full conditions. Returns the solution or None if the path degenerates.
    """
    d = b.shape[0]
    usable = np.diag(G) > 0.0
    penalized = (thresh > 0.0) & usable
    lam_t = float(thresh.max()) / n_rows  # single penalty level by construction
    active = usable & ~(thresh > 0.0)
    signs = np.zeros(d)

    def solve_pair(idx):
        # w_A(lam) = u - lam * v on the current segment
        GA = G[np.ix_(idx, idx)]
        u, *_ = np.linalg.lstsq(GA, b[idx], rcond=None)
        v, *_ = np.linalg.lstsq(GA, n_rows * signs[idx], rcond=None)
        return u, v

    idx = np.flatnonzero(active)
    if idx.size:
        u, v = solve_pair(idx)
    else:
        u = v = np.zeros(0)
    c0 = (b - G[:, idx] @ u) / n_rows if idx.size else b / n_rows
    start = np.where(penalized & ~active, np.abs(c0), 0.0)
    lam_cur = float(start.max())
    if lam_cur <= lam_t:
        w = np.zeros(d)
        if idx.size:
            w[idx] = u
        return w if _full_kkt(G, b, thresh, n_rows, w, usable) <= kkt_target else None
    j0 = int(np.argmax(start))
    active[j0] = True
    signs[j0] = np.sign(c0[j0])

    guard = 1.0 - 1e-10
    for _ in range(20 * d + 50):
        idx = np.flatnonzero(active)
        u, v = solve_pair(idx)
        if not (np.isfinite(u).all() and np.isfinite(v).all()):
            return None
        # correlations are affine in lam: c_j(lam) = alpha_j + lam * beta_j
        alpha = (b - G[:, idx] @ u) / n_rows
        beta = (G[:, idx] @ v) / n_rows
        best_lam = lam_t
        best_event = (-1, 0.0)  # (coordinate, new sign); sign 0 => leave
        for j in np.flatnonzero(penalized & ~active):
            for sgn in (1.0, -1.0):
                denom = sgn - beta[j]
                if denom != 0.0:
                    cand = alpha[j] / denom
                    if lam_t < cand <= lam_cur * guard and cand > best_lam:
                        best_lam, best_event = cand, (j, sgn)
        for pos, a in enumerate(idx):
            if not penalized[a] or v[pos] == 0.0:
                continue
            cand = u[pos] / v[pos]
            if lam_t < cand <= lam_cur * guard and cand > best_lam:
                best_lam, best_event = cand, (a, 0.0)
        if best_event[0] < 0:
            w = np.zeros(d)
            w[idx] = u - lam_t * v
            if _full_kkt(G, b, thresh, n_rows, w, usable) <= kkt_target:
                return w
            return None
        j, sgn = best_event
        lam_cur = best_lam
        if sgn == 0.0:
            active[j] = False
            signs[j] = 0.0
        else:
            active[j] = True
            signs[j] = sgn
    return None


def lasso_gram(
    G: np.ndarray,
    b: np.ndarray,
    yty: float,
    n_rows: int,
    cfg: LassoConfig,
    penalized: np.ndarray | None = None,
    debug: bool = False,
):
    """Cyclic coordinate descent on Gram data; shared by `lasso_cd` and the pruner.

    Stops when the largest relative coefficient change over a sweep falls
    below cfg.tol AND the stationarity residual is certified small; the
    certificate target is 1e-7 scaled by max(1, ||b||_inf / N). Zero-norm
    columns keep coefficient 0. With debug=True also returns the objective
    after every sweep (non-increasing by construction of exact coordinate
    minimization).
    """
    G = np.ascontiguousarray(G, dtype=float)
    b = np.ascontiguousarray(b, dtype=float).ravel()
    d = b.shape[0]
    if G.shape != (d, d):
        raise ValueError(f"gram shape {G.shape} incompatible with {d} correlations")
    if penalized is None:
        penalized = np.ones(d, dtype=bool)
    thresh = np.where(penalized, cfg.lam * n_rows, 0.0)
    kkt_target = 1e-7 * max(1.0, float(np.abs(b).max()) / n_rows)
    w = np.zeros(d)
    gw = np.zeros(d)
    obj_out = np.zeros(cfg.max_iter if debug else 0)
    if debug:
        # plain sweeps only, so the recorded objectives reflect pure CD
        done, conv = _cd_kernel(
            G, b, thresh, float(n_rows), cfg.tol, cfg.max_iter, kkt_target, w, gw, obj_out, True, float(yty), 0
        )
        sweeps = int(done)
    else:
        # sweep in chunks; between chunks try the exact active-set refinement,
        # then the homotopy path, which rescue the slow-crawl regime
        # (tiny lambda, underdetermined designs)
        chunk = min(200, cfg.max_iter)
        sweeps = 0
        conv = False
        homotopy_tried = False
        while sweeps < cfg.max_iter and not conv:
            budget = min(chunk, cfg.max_iter - sweeps)
            done, conv = _cd_kernel(
                G, b, thresh, float(n_rows), cfg.tol, budget, kkt_target, w, gw, obj_out, False, float(yty), 0
            )
            sweeps += int(done)
            if conv:
                break
            refined = _active_set_polish(G, b, thresh, float(n_rows), w.copy(), kkt_target)
            if refined is None and not homotopy_tried:
                homotopy_tried = True
                refined = _homotopy_rescue(G, b, thresh, float(n_rows), kkt_target)
            if refined is not None:
                w = refined
                gw = G @ w
                conv = True
    objective = 0.5 * (yty + float(w @ (gw - 2.0 * b))) / n_rows + cfg.lam * float(
        np.abs(w[penalized]).sum()
    )
    result = FitResult(w, np.flatnonzero(w), int(sweeps), bool(conv), max(objective, 0.0))
    if debug:
        return result, obj_out[:sweeps].copy()
    return result


def _unpenalized_mask(X: np.ndarray, cfg: LassoConfig, constant_col: int | None) -> np.ndarray:
    penalized = np.ones(X.shape[1], dtype=bool)
    if cfg.penalize_constant:
        return penalized
    if constant_col is not None:
        penalized[constant_col] = False
    else:
        const = (X.max(axis=0) == X.min(axis=0)) & (X[0] != 0.0)
        penalized[const] = False
    return penalized


def lasso_cd(X, y, cfg: LassoConfig, constant_col: int | None = None, debug: bool = False):
    """LASSO via cyclic coordinate descent with exact-zero soft thresholding.

    Unless cfg.penalize_constant, the bias column (given explicitly via
    constant_col, else auto-detected as a constant nonzero column) is left
    unpenalized. converged=False only when max_iter sweeps were exhausted.
    """
    X, y = _check_design(X, y)
    penalized = _unpenalized_mask(X, cfg, constant_col)
    out = lasso_gram(X.T @ X, X.T @ y, float(y @ y), X.shape[0], cfg, penalized, debug=debug)
    result, objectives = out if debug else (out, None)
    # recompute the objective from the raw design: the gram form cancels badly
    r = y - X @ result.weights
    result.objective = 0.5 * float(r @ r) / X.shape[0] + cfg.lam * float(
        np.abs(result.weights[penalized]).sum()
    )
    if debug:
        return result, objectives
    return result


def kkt_violation(X, y, w, lam: float, penalized: np.ndarray | None = None) -> float:
    """Max stationarity violation of the LASSO optimality conditions at w.

    For w_j != 0: |X_j^T r / N - lam * sign(w_j)|; for w_j = 0:
    max(0, |X_j^T r / N| - lam). Unpenalized coordinates use lam = 0.
    """
    X, y = _check_design(X, y)
    w = np.asarray(w, dtype=float).ravel()
    if w.shape[0] != X.shape[1]:
        raise ValueError(f"{w.shape[0]} weights for {X.shape[1]} columns")
    if penalized is None:
        penalized = np.ones(w.shape[0], dtype=bool)
    lam_j = np.where(penalized, lam, 0.0)
    c = X.T @ (y - X @ w) / X.shape[0]
    active = w != 0
    viol_active = np.abs(c[active] - lam_j[active] * np.sign(w[active]))
    viol_zero = np.maximum(0.0, np.abs(c[~active]) - lam_j[~active])
    pieces = [v for v in (viol_active, viol_zero) if v.size]
    return float(max(v.max() for v in pieces)) if pieces else 0.0
