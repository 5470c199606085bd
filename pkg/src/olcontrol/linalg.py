"""Dense linear-algebra kernels used throughout the package.

Everything here is deterministic: the power iteration uses fixed start
vectors and least squares goes through an SVD, so repeated calls on the
same inputs give bit-identical results.
"""

import numpy as np

from .errors import InvalidInputError

NORM_TOL = 1e-10        # relative convergence tolerance of the power iteration
POWER_ITER_CAP = 10_000
LSQ_REG = 1e-12         # relative singular-value cutoff for least squares


def as_matrix(m, name="matrix") -> np.ndarray:
    """Coerce to a finite 2-d float array or raise InvalidInputError."""
    arr = np.asarray(m, dtype=float)
    if arr.ndim != 2:
        raise InvalidInputError(f"{name} must be 2-dimensional, got shape {arr.shape}")
    if arr.size and not np.isfinite(arr).all():
        raise InvalidInputError(f"{name} contains non-finite entries")
    return arr


def as_vector(v, name="vector") -> np.ndarray:
    """Coerce to a finite 1-d float array or raise InvalidInputError."""
    arr = np.asarray(v, dtype=float)
    if arr.ndim != 1:
        raise InvalidInputError(f"{name} must be 1-dimensional, got shape {arr.shape}")
    if arr.size and not np.isfinite(arr).all():
        raise InvalidInputError(f"{name} contains non-finite entries")
    return arr


def _power_iteration(gram: np.ndarray, start: np.ndarray) -> float:
    """Largest eigenvalue of a PSD matrix from one fixed start vector."""
    v = start / np.linalg.norm(start)
    lam = 0.0
    for _ in range(POWER_ITER_CAP):
        y = gram @ v
        norm_y = np.linalg.norm(y)
        if norm_y == 0.0:
            return 0.0
        new_lam = float(v @ y)
        v = y / norm_y
        if abs(new_lam - lam) <= NORM_TOL * max(abs(new_lam), np.finfo(float).tiny):
            return new_lam
        lam = new_lam
    return lam


def spectral_norm(m) -> float:
    """Largest singular value of ``m`` via power iteration on ``m.T @ m``.

    Two fixed start vectors are used (normalized all-ones, then a
    normalized ramp 1..n) and the larger estimate wins.  A single fixed
    start can sit exactly in an invariant subspace of structured
    matrices -- the all-ones vector is an eigenvector of every circulant
    matrix, for instance -- and stall on a non-dominant singular value.
    """
    m = as_matrix(m)
    if m.size == 0:
        return 0.0
    gram = m.T @ m
    n = gram.shape[0]
    starts = (np.ones(n), 1.0 + np.arange(n, dtype=float))
    lam = max(_power_iteration(gram, s) for s in starts)
    return float(np.sqrt(max(lam, 0.0)))


def batch_spectral_norms(mats: np.ndarray) -> np.ndarray:
    """Spectral norm of every matrix in a (T, n, m) stack at once.

    Same algorithm and start vectors as :func:`spectral_norm`, with the
    power iteration running over all T Gram matrices simultaneously; the
    loop stops when every matrix in the stack has converged.
    """
    mats = np.asarray(mats, dtype=float)
    if mats.ndim != 3:
        raise InvalidInputError(f"expected a (T, n, m) stack, got shape {mats.shape}")
    if not np.isfinite(mats).all():
        raise InvalidInputError("matrix stack contains non-finite entries")
    count, _, n = mats.shape
    if count == 0 or n == 0:
        return np.zeros(count)
    grams = np.einsum("tji,tjk->tik", mats, mats)
    best = np.zeros(count)
    for start in (np.ones(n), 1.0 + np.arange(n, dtype=float)):
        v = np.broadcast_to(start / np.linalg.norm(start), (count, n)).copy()
        lam = np.zeros(count)
        active = np.ones(count, dtype=bool)
        for _ in range(POWER_ITER_CAP):
            y = np.einsum("tik,tk->ti", grams[active], v[active])
            new_lam = np.einsum("ti,ti->t", v[active], y)
            norm_y = np.linalg.norm(y, axis=1)
            nonzero = norm_y > 0.0
            v[active] = np.where(nonzero[:, None], y / np.where(nonzero, norm_y, 1.0)[:, None], v[active])
            done = np.abs(new_lam - lam[active]) <= NORM_TOL * np.maximum(
                np.abs(new_lam), np.finfo(float).tiny
            )
            done |= ~nonzero
            lam[active] = new_lam
            idx = np.flatnonzero(active)
            active[idx[done]] = False
            if not active.any():
                break
        best = np.maximum(best, lam)
    return np.sqrt(np.maximum(best, 0.0))


def solve_least_squares(a, b) -> np.ndarray:
    """Minimum-norm least-squares solution of ``a x = b``.

    Solved through an SVD (``np.linalg.lstsq``): among all minimizers of
    ``||a x - b||`` the minimum-norm one is returned.  Singular values
    below LSQ_REG relative to the largest are treated as zero, which is
    what makes the all-zero map return the zero vector.
    """
    a = as_matrix(a)
    b = as_vector(b)
    if a.shape[0] != b.shape[0]:
        raise InvalidInputError(
            f"matrix has {a.shape[0]} rows but right-hand side has dimension {b.shape[0]}"
        )
    x, _, _, _ = np.linalg.lstsq(a, b, rcond=LSQ_REG)
    return x


def spectral_radius_estimate(a, k: int = 64) -> float:
    """Upper-biased spectral radius estimate ``||a^k|| ** (1/k)``.

    Converges to the true spectral radius from above as ``k`` grows; for
    normal matrices it is exact for every ``k``.
    """
    a = as_matrix(a)
    if a.shape[0] != a.shape[1]:
        raise InvalidInputError(f"matrix must be square, got shape {a.shape}")
    if k < 8:
        raise InvalidInputError(f"power k must be at least 8, got {k}")
    power = np.linalg.matrix_power(a, k)
    if not np.isfinite(power).all():
        # norms exploded before k steps; the radius is certainly >= 1
        return float("inf")
    return float(spectral_norm(power) ** (1.0 / k))
