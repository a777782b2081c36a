"""Dense small-matrix solvers: discrete Lyapunov and Riccati equations,
Schur-stability tests, and state-space frequency response.

All routines operate on real double-precision numpy arrays. They target
the small, dense systems that arise when a plant and a low-order output
feedback policy are interconnected (state dimension below ~20). Solver
tolerances are module constants and can be overridden per call.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    DimensionMismatch,
    NonStable,
    NoStabilizingSolution,
    SingularResolvent,
)

__all__ = [
    "StabilityVerdict",
    "spectral_radius",
    "is_schur_stable",
    "solve_dlyap",
    "solve_dare",
    "freq_response",
]

# Stopping threshold for the squared-Smith update, relative to ``|X|``.
DLYAP_TOL = 1e-13
# Doubling cap for the squared-Smith iteration.
DLYAP_MAX_DOUBLINGS = 200
# Norm growth beyond this limit signals a non-Schur state matrix.
DLYAP_DIVERGENCE_LIMIT = 1e12
# Relative convergence tolerance of the structured doubling iteration.
DARE_TOL = 1e-12
DARE_MAX_ITER = 200
# Post-hoc residual bound for the Riccati solution, relative to 1 + |X|_F.
DARE_RESIDUAL_RTOL = 1e-9
# Spectral radii within this distance of the unit circle count as unstable.
SCHUR_BOUNDARY_TOL = 1e-9


@dataclass(frozen=True)
class StabilityVerdict:
    """Outcome of a Schur-stability test.

    ``stable`` is True exactly when ``spectral_radius_estimate`` lies below
    1 by more than the boundary tolerance; radii within the tolerance of
    the unit circle are conservatively reported unstable.
    """

    stable: bool
    spectral_radius_estimate: float


def _as_square(A, name="A"):
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise DimensionMismatch(f"{name} must be square, got shape {A.shape}")
    return A


def spectral_radius(A) -> float:
    """Largest eigenvalue magnitude of a square matrix."""
    A = _as_square(A)
    if A.shape[0] == 0:
        return 0.0
    return float(np.max(np.abs(np.linalg.eigvals(A))))


def _radii_batch(A):
    """Spectral radii of a stacked (..., n, n) array of square matrices.

    Matrices containing non-finite entries get radius +inf instead of
    propagating LinAlgError out of LAPACK.
    """
    A = np.asarray(A, dtype=float)
    if A.shape[-1] == 0:
        return np.zeros(A.shape[:-2])
    finite = np.isfinite(A).all(axis=(-2, -1))
    if finite.all():
        return np.max(np.abs(np.linalg.eigvals(A)), axis=-1)
    radii = np.full(A.shape[:-2], np.inf)
    if finite.any():
        radii[finite] = np.max(np.abs(np.linalg.eigvals(A[finite])), axis=-1)
    return radii


def is_schur_stable(A) -> StabilityVerdict:
    """Test whether all eigenvalues of ``A`` lie strictly inside the unit circle.

    Eigenvalue magnitudes come from the QR algorithm on the Hessenberg
    form (LAPACK via numpy). Radii within ``SCHUR_BOUNDARY_TOL`` of 1 are
    reported unstable, so the verdict errs on the side of caution at the
    stability boundary.
    """
    A = _as_square(A)
    if not np.isfinite(A).all():
        raise ValueError("matrix entries must be finite")
    rho = spectral_radius(A)
    return StabilityVerdict(stable=bool(rho < 1.0 - SCHUR_BOUNDARY_TOL), spectral_radius_estimate=rho)


def _smith_batch(A, W, tol=DLYAP_TOL, max_doublings=DLYAP_MAX_DOUBLINGS,
                 divergence_limit=DLYAP_DIVERGENCE_LIMIT):
    """Squared-Smith iteration for ``X = A X A^T + W`` on stacked inputs.

    Parameters are (..., n, n) arrays. Returns ``(X, ok)`` where ``ok`` is a
    boolean array over the batch; entries that diverged or failed to
    converge are flagged False and their ``X`` content is meaningless.
    The iteration doubles the propagator each sweep::

        X <- X + A X A^T,   A <- A A

    and stops when the update norm drops below ``tol * |X|`` everywhere.
    Divergence (norm growth past ``divergence_limit`` or overflow) marks
    the offending batch entries as failed.
    """
    A = np.asarray(A, dtype=float)
    W = np.asarray(W, dtype=float)
    X = W.copy()
    Ak = A.copy()
    batch_shape = X.shape[:-2]
    ok = np.ones(batch_shape, dtype=bool)
    done = np.zeros(batch_shape, dtype=bool)
    with np.errstate(over="ignore", invalid="ignore"):
        for _ in range(max_doublings):
            T = Ak @ X @ np.swapaxes(Ak, -1, -2)
            Xn = X + T
            upd = np.abs(T).sum(axis=(-2, -1))
            mag = np.abs(Xn).sum(axis=(-2, -1))
            bad = ~np.isfinite(mag) | (mag > divergence_limit)
            ok &= ~bad
            done |= bad | (upd <= tol * mag)
            X = Xn
            if done.all():
                break
            Ak = Ak @ Ak
        else:
            ok &= done
    ok &= np.isfinite(X).all(axis=(-2, -1))
    # enforce exact symmetry of the converged solutions
    X = 0.5 * (X + np.swapaxes(X, -1, -2))
    return X, ok


def solve_dlyap(A, W, tol=DLYAP_TOL, max_doublings=DLYAP_MAX_DOUBLINGS):
    """Solve the discrete Lyapunov equation in covariance form, X = A X A^T + W.

    ``A`` must be Schur stable and ``W`` symmetric (positive semidefinite
    for the covariance interpretation; any symmetric right-hand side is
    accepted, as needed by gradient computations). Uses the squared-Smith
    iteration, which requires only matrix products and detects non-Schur
    inputs through divergence.

    Raises
    ------
    DimensionMismatch
        If shapes do not conform.
    NonStable
        If the iteration diverges, signaling that ``A`` is not Schur.
    """
    A = _as_square(A)
    W = _as_square(W, "W")
    if A.shape != W.shape:
        raise DimensionMismatch(f"A {A.shape} and W {W.shape} must have equal shapes")
    if not np.allclose(W, W.T, rtol=0.0, atol=1e-12 * (1.0 + np.abs(W).max())):
        raise ValueError("W must be symmetric")
    X, ok = _smith_batch(A[None], W[None], tol=tol, max_doublings=max_doublings)
    if not ok[0]:
        raise NonStable("Lyapunov iteration diverged; A is not Schur stable")
    return X[0]


def solve_dare(A, B, Q, R, tol=DARE_TOL, max_iter=DARE_MAX_ITER):
    """Stabilizing solution of the discrete-time algebraic Riccati equation

        X = A^T X A - A^T X B (R + B^T X B)^{-1} B^T X A + Q

    via the structured doubling iteration. Requires ``(A, B)`` stabilizable,
    ``R`` symmetric positive definite and ``Q`` symmetric positive
    semidefinite. The residual of the returned solution is verified to be
    below ``DARE_RESIDUAL_RTOL * (1 + |X|_F)`` and the implied closed-loop
    matrix is verified Schur; failure of either check raises
    ``NoStabilizingSolution``.
    """
    A = _as_square(A)
    B = np.asarray(B, dtype=float)
    if B.ndim == 1:
        B = B[:, None]
    Q = _as_square(Q, "Q")
    R = _as_square(R, "R")
    n, m = B.shape
    if A.shape[0] != n or Q.shape[0] != n or R.shape[0] != m:
        raise DimensionMismatch(
            f"inconsistent shapes: A {A.shape}, B {B.shape}, Q {Q.shape}, R {R.shape}")
    try:
        np.linalg.cholesky(R)
    except np.linalg.LinAlgError:
        raise ValueError("R must be symmetric positive definite") from None

    G = B @ np.linalg.solve(R, B.T)
    G = 0.5 * (G + G.T)
    Ak = A.copy()
    Gk = G
    Hk = 0.5 * (Q + Q.T)
    eye = np.eye(n)
    converged = False
    for _ in range(max_iter):
        try:
            IGH = eye + Gk @ Hk
            W1 = np.linalg.solve(IGH, Ak)   # (I + G H)^{-1} A
            W2 = np.linalg.solve(IGH, Gk)   # (I + G H)^{-1} G
        except np.linalg.LinAlgError:
            raise NoStabilizingSolution("doubling iteration hit a singular pencil") from None
        Hn = Hk + Ak.T @ (Hk @ W1)
        if not np.isfinite(Hn).all():
            raise NoStabilizingSolution("doubling iteration diverged")
        delta = np.abs(Hn - Hk).sum()
        Gk = Gk + Ak @ W2 @ Ak.T
        Gk = 0.5 * (Gk + Gk.T)
        Ak = Ak @ W1
        Hk = 0.5 * (Hn + Hn.T)
        if delta <= tol * max(np.abs(Hk).sum(), 1.0):
            converged = True
            break
    if not converged:
        raise NoStabilizingSolution(f"no convergence within {max_iter} doubling steps")

    X = Hk
    # post-hoc verification: residual bound and closed-loop stability
    BtXB = R + B.T @ X @ B
    K = np.linalg.solve(BtXB, B.T @ X @ A)
    residual = A.T @ X @ A - X - (A.T @ X @ B) @ K + Q
    if np.linalg.norm(residual, "fro") > DARE_RESIDUAL_RTOL * (1.0 + np.linalg.norm(X, "fro")):
        raise NoStabilizingSolution("Riccati residual exceeds tolerance")
    if not is_schur_stable(A - B @ K).stable:
        raise NoStabilizingSolution("solution does not stabilize the closed loop")
    return X


def freq_response(A, B, C, D, omega):
    """Frequency response C (zI - A)^{-1} B + D at z = exp(j*omega).

    ``omega`` is the frequency in radians per sample; it may be a scalar
    (returning an (n_y, n_u) complex matrix) or a 1-D array (returning a
    stacked (len(omega), n_y, n_u) array). Raises ``SingularResolvent``
    when z coincides numerically with an eigenvalue of ``A``.
    """
    A = _as_square(A)
    B = np.asarray(B, dtype=float)
    C = np.asarray(C, dtype=float)
    D = np.asarray(D, dtype=float)
    if B.ndim == 1:
        B = B[:, None]
    if C.ndim == 1:
        C = C[None, :]
    n = A.shape[0]
    if B.shape[0] != n or C.shape[1] != n:
        raise DimensionMismatch(
            f"inconsistent shapes: A {A.shape}, B {B.shape}, C {C.shape}")
    if D.ndim == 0:
        D = np.full((C.shape[0], B.shape[1]), float(D))
    scalar = np.isscalar(omega) or np.ndim(omega) == 0
    w = np.atleast_1d(np.asarray(omega, dtype=float))
    z = np.exp(1j * w)
    if n == 0:
        out = np.broadcast_to(D.astype(complex), (len(w),) + D.shape).copy()
        return out[0] if scalar else out
    resolvent_rhs = np.broadcast_to(B.astype(complex), (len(w),) + B.shape)
    zI_A = z[:, None, None] * np.eye(n) - A
    try:
        sol = np.linalg.solve(zI_A, resolvent_rhs)
    except np.linalg.LinAlgError:
        raise SingularResolvent("exp(j*omega) is an eigenvalue of A") from None
    out = C @ sol + D
    if not np.isfinite(out).all():
        raise SingularResolvent("exp(j*omega) is numerically an eigenvalue of A")
    return out[0] if scalar else out
