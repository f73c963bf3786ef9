"""Dense real-matrix utilities for small systems (targeting m <= 16).

Self-contained implementations on top of plain numpy arrays: matrix
exponential by scaling and squaring, determinant by partially pivoted LU,
spectral radius by closed form (m <= 2) or Gelfand iteration, and spectral
norm by power iteration on ``M.T @ M``.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import ConvergenceError

_EXPM_MAX_TERMS = 64
_GELFAND_MAX_SQUARINGS = 60
_POWER_MAX_ITERATIONS = 20_000


def _as_square(M, name: str = "M") -> np.ndarray:
    A = np.asarray(M, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"{name} must be a square matrix, got shape {A.shape}")
    return A


def expm(M) -> np.ndarray:
    """Matrix exponential by scaling and squaring with a Taylor core.

    The argument is scaled by a power of two until its infinity norm is at
    most 1/2, the series is summed to machine-precision tail, and the result
    is squared back.  Relative accuracy is ~1e-12 or better for norms up to
    the tens, which covers every transition matrix formed here.
    """
    A = _as_square(M)
    if not np.all(np.isfinite(A)):
        raise ValueError("expm requires finite entries")
    m = A.shape[0]
    norm = float(np.max(np.sum(np.abs(A), axis=1))) if m else 0.0
    squarings = max(0, math.ceil(math.log2(norm / 0.5))) if norm > 0.5 else 0
    X = A / (2.0 ** squarings)
    acc = np.eye(m) + X
    term = X.copy()
    for k in range(2, _EXPM_MAX_TERMS):
        term = term @ X / k
        acc += term
        if np.max(np.abs(term)) <= 1e-18 * max(1.0, np.max(np.abs(acc))):
            break
    for _ in range(squarings):
        acc = acc @ acc
    return acc


def int_power(M, n: int) -> np.ndarray:
    """Non-negative integer matrix power by repeated squaring."""
    A = _as_square(M)
    n = int(n)
    if n < 0:
        raise ValueError(f"int_power requires n >= 0, got {n}")
    result = np.eye(A.shape[0])
    base = A.copy()
    while n:
        if n & 1:
            result = result @ base
        n >>= 1
        if n:
            base = base @ base
    return result


def det(M) -> float:
    """Determinant via LU factorization with partial pivoting."""
    A = _as_square(M).copy()
    m = A.shape[0]
    sign = 1.0
    for col in range(m):
        pivot = col + int(np.argmax(np.abs(A[col:, col])))
        if A[pivot, col] == 0.0:
            return 0.0
        if pivot != col:
            A[[col, pivot]] = A[[pivot, col]]
            sign = -sign
        A[col + 1:, col] /= A[col, col]
        A[col + 1:, col + 1:] -= np.outer(A[col + 1:, col], A[col, col + 1:])
    return sign * float(np.prod(np.diag(A)))


def spectral_norm(M, tol: float = 1e-10) -> float:
    """Largest singular value via power iteration on ``M.T @ M``.

    Stops once the symmetric eigenvalue residual certifies the Rayleigh
    quotient to the requested relative tolerance, which also handles
    matrices whose top singular values coincide.
    """
    A = _as_square(M)
    if not np.all(np.isfinite(A)):
        raise ValueError("spectral_norm requires finite entries")
    m = A.shape[0]
    if m == 0:
        return 0.0
    scale = float(np.max(np.abs(A)))
    if scale == 0.0:
        return 0.0
    B = A / scale
    S = B.T @ B
    v = np.ones(m) + 1e-3 * np.arange(m)
    v /= np.linalg.norm(v)
    for _ in range(_POWER_MAX_ITERATIONS):
        w = S @ v
        lam = float(v @ w)
        resid = float(np.linalg.norm(w - lam * v))
        if resid <= tol * max(lam, 1e-300):
            return scale * math.sqrt(max(lam, 0.0))
        nw = float(np.linalg.norm(w))
        if nw == 0.0:
            return 0.0
        v = w / nw
    raise ConvergenceError("power iteration for the spectral norm did not stabilize")


def _eigen_moduli_2x2(A: np.ndarray) -> float:
    a, b = A[0, 0], A[0, 1]
    c, d = A[1, 0], A[1, 1]
    tr = a + d
    dt = a * d - b * c
    disc = tr * tr - 4.0 * dt
    if disc >= 0.0:
        root = math.sqrt(disc)
        return max(abs((tr + root) / 2.0), abs((tr - root) / 2.0))
    # complex conjugate pair: |lambda|^2 = det
    return math.sqrt(dt)


def spectral_radius(M, tol: float = 1e-8) -> float:
    """Largest eigenvalue modulus.

    Exact closed form for m <= 2; otherwise the Gelfand limit
    ``||M^(2^j)||^(1/2^j)`` evaluated by repeated squaring with norm
    renormalization until two consecutive estimates agree to ``tol``
    relative.  Raises :class:`ConvergenceError` if 60 squarings do not
    stabilize the estimate.
    """
    A = _as_square(M)
    if not np.all(np.isfinite(A)):
        raise ValueError("spectral_radius requires finite entries")
    m = A.shape[0]
    if m == 0:
        return 0.0
    if m == 1:
        return abs(float(A[0, 0]))
    if m == 2:
        return _eigen_moduli_2x2(A)
    X = A.copy()
    log_scale = 0.0
    previous = None
    for j in range(1, _GELFAND_MAX_SQUARINGS + 1):
        n = spectral_norm(X)
        if n == 0.0:
            return 0.0
        # X approximates M^(2^(j-1)) * exp(-log_scale)
        estimate = math.exp((log_scale + math.log(n)) / 2.0 ** (j - 1))
        if previous is not None and abs(estimate - previous) <= tol * max(estimate, 1e-300):
            return estimate
        previous = estimate
        X = X / n
        X = X @ X
        log_scale = 2.0 * (log_scale + math.log(n))
    raise ConvergenceError(
        "Gelfand iteration for the spectral radius did not stabilize in 60 squarings"
    )
