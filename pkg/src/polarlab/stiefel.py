"""Stiefel manifold primitives and spectral diagnostics.

Conventions used throughout the package:

* matrices are dense 2-D float64 numpy arrays,
* St(m, r) = {X in R^{m x r} : X^T X = I_r} with m >= r,
* randomness always flows through an explicit ``numpy.random.Generator``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import FeasibilityError, RankDeficientError

# Default feasibility tolerance for freshly constructed Stiefel points.
SAMPLE_FEASIBILITY_TOL = 1e-10
# Retraction outputs are certified slightly looser (accumulated rounding).
RETRACT_FEASIBILITY_TOL = 1e-9
# Relative singular-value cutoff below which an input counts as rank deficient.
RANK_DEFICIENCY_RTOL = 1e-12
# Floor applied to eigenvalues before inverse square roots.
EIG_FLOOR = 1e-14
# Newton-Schulz polishing target; effectively machine precision for the
# Gram residual (unreachable at large r, where the no-improvement stop kicks in).
SAMPLE_NS_FLOOR = 1e-14


def require_matrix(a, name: str = "matrix") -> np.ndarray:
    """Validate and return ``a`` as a finite 2-D float64 array."""
    out = np.asarray(a, dtype=np.float64)
    if out.ndim != 2:
        raise ValueError(f"{name} must be 2-D, got shape {out.shape}")
    if not np.isfinite(out).all():
        raise ValueError(f"{name} contains non-finite entries")
    return out


def stiefel_error(X) -> float:
    """Frobenius norm of X^T X - I."""
    X = np.asarray(X)
    r = X.shape[1]
    return float(np.linalg.norm(X.T @ X - np.eye(r)))


def require_stiefel(X, tol: float = SAMPLE_FEASIBILITY_TOL, name: str = "X") -> np.ndarray:
    """Validate that ``X`` has orthonormal columns within ``tol``."""
    X = require_matrix(X, name)
    m, r = X.shape
    if m < r:
        raise ValueError(f"{name} must be tall (m >= r), got {X.shape}")
    err = stiefel_error(X)
    if err > tol:
        raise FeasibilityError(f"{name} is off St({m},{r}): ||X'X - I||_F = {err:.3e} > {tol:.1e}")
    return X


def _inv_sqrt_psd(M: np.ndarray) -> np.ndarray:
    """Inverse square root of a symmetric PSD matrix via eigendecomposition."""
    w, Q = np.linalg.eigh(M)
    w = np.maximum(w, EIG_FLOOR)
    return (Q / np.sqrt(w)) @ Q.T


def sample_stiefel_uniform(m: int, r: int, rng: np.random.Generator) -> np.ndarray:
    """Draw X uniformly (Haar) from St(m, r).

    Uses the Gaussian construction X = Z (Z^T Z)^{-1/2} with Z i.i.d.
    standard normal. A singular Z^T Z (a measure-zero event) is retried
    once before raising.

    Parameters
    ----------
    m, r : int
        Target shape, 1 <= r <= m.
    rng : numpy.random.Generator
        Seeded random source.

    Returns
    -------
    ndarray of shape (m, r) with ||X^T X - I||_F <= 1e-10.
    """
    if not (1 <= r <= m):
        raise ValueError(f"need 1 <= r <= m, got m={m}, r={r}")
    eye = np.eye(r)
    for attempt in range(2):
        Z = rng.standard_normal((m, r))
        G = Z.T @ Z
        w, Q = np.linalg.eigh(G)
        if w[0] > RANK_DEFICIENCY_RTOL * w[-1]:
            X = Z @ ((Q / np.sqrt(w)) @ Q.T)
            # an ill-conditioned Z leaves rounding of order kappa(Z)^2 eps.
            # Newton-Schulz polishing restores machine precision; stopping at
            # the certificate instead would leave a seed-dependent error that
            # downstream gradients amplify by the square of the target scale.
            err = stiefel_error(X)
            for _ in range(8):
                if err <= SAMPLE_NS_FLOOR:
                    break
                polished = X @ (1.5 * eye - 0.5 * (X.T @ X))
                polished_err = stiefel_error(polished)
                if polished_err >= err:
                    break
                X, err = polished, polished_err
            return require_stiefel(X, SAMPLE_FEASIBILITY_TOL, "sampled X")
    raise RankDeficientError("Gaussian sample was rank deficient twice in a row")


def polar_decompose(Z) -> tuple[np.ndarray, np.ndarray]:
    """Polar decomposition Z = X Theta with X semi-orthogonal, Theta symmetric PSD.

    Computed from the thin SVD Z = P S Q^T as X = P Q^T, Theta = Q S Q^T.
    Rank-deficient input is an error; nothing is silently regularized.

    Returns
    -------
    (X, Theta) with X in St(m, r) and ||X Theta - Z||_F <= 1e-10 ||Z||_F.
    """
    Z = require_matrix(Z, "Z")
    m, r = Z.shape
    if m < r:
        raise ValueError(f"Z must be tall (m >= r), got {Z.shape}")
    P, s, Qt = np.linalg.svd(Z, full_matrices=False)
    if s[-1] <= RANK_DEFICIENCY_RTOL * s[0] or s[0] == 0.0:
        raise RankDeficientError(
            f"Z is numerically rank deficient (sigma_min/sigma_max = {s[-1] / max(s[0], 1e-300):.3e})"
        )
    X = P @ Qt
    Theta = (Qt.T * s) @ Qt
    recon = float(np.linalg.norm(X @ Theta - Z))
    if recon > 1e-10 * float(np.linalg.norm(Z)):
        raise FeasibilityError(f"polar reconstruction error {recon:.3e} exceeds tolerance")
    return X, Theta


def polar_retract(X, D, eta: float) -> np.ndarray:
    """Polar retraction (X - eta D)(I + eta^2 D^T D)^{-1/2}.

    For tangent D (X^T D + D^T X = 0) the output is exactly on St(m, r)
    up to rounding. Tangency is asserted only under ``python`` debug mode;
    the output feasibility is always certified at 1e-9.
    """
    X = np.asarray(X, dtype=np.float64)
    D = np.asarray(D, dtype=np.float64)
    if X.shape != D.shape:
        raise ValueError(f"shape mismatch: X {X.shape} vs D {D.shape}")
    if eta < 0:
        raise ValueError("eta must be nonnegative")
    assert float(np.linalg.norm(X.T @ D + D.T @ X)) <= 1e-8 * max(1.0, float(np.linalg.norm(D))), (
        "retraction direction is not tangent"
    )
    M = D.T @ D
    w, Q = np.linalg.eigh(M)
    scale = 1.0 / np.sqrt(np.maximum(1.0 + eta * eta * w, EIG_FLOOR))
    S = (Q * scale) @ Q.T
    out = (X - eta * D) @ S
    return require_stiefel(out, RETRACT_FEASIBILITY_TOL, "retracted X")


def skew_part(M) -> np.ndarray:
    """Skew-symmetric part (M - M^T) / 2 of a square matrix."""
    M = np.asarray(M, dtype=np.float64)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError(f"M must be square, got shape {M.shape}")
    return 0.5 * (M - M.T)


def tangent_project(X: np.ndarray, G: np.ndarray) -> np.ndarray:
    """Projection of G onto the tangent space of St at X: G - X sym(X^T G)."""
    M = X.T @ G
    return G - X @ (0.5 * (M + M.T))


def distance_to_stiefel(X) -> float:
    """Squared feasibility gap N(X) = ||X^T X - I_r||_F^2."""
    X = require_matrix(X, "X")
    r = X.shape[1]
    diff = X.T @ X - np.eye(r)
    return float(np.sum(diff * diff))


@dataclass(frozen=True)
class SpectrumSummary:
    """Singular spectrum of a matrix with its stable rank."""

    singular_values: np.ndarray  # descending
    fro: float
    spectral: float
    stable_rank: float


def stable_rank(W) -> SpectrumSummary:
    """Stable rank ||W||_F^2 / ||W||_2^2 together with the full spectrum.

    Always lies in [1, #nonzero singular values]. Undefined (raises) for
    the zero matrix.
    """
    W = require_matrix(W, "W")
    s = np.linalg.svd(W, compute_uv=False)
    if s[0] <= 0.0:
        raise ValueError("stable rank is undefined for the zero matrix")
    fro2 = float(np.sum(s * s))
    return SpectrumSummary(
        singular_values=s,
        fro=float(np.sqrt(fro2)),
        spectral=float(s[0]),
        stable_rank=fro2 / float(s[0]) ** 2,
    )


@dataclass(frozen=True)
class AlignmentReport:
    """Alignment of a Stiefel point X with a reference basis U.

    ``phi`` is U^T X. ``trace_phi`` = Tr(Phi Phi^T) grows toward r_A as
    span(U) is captured by span(X); ``misalignment_trace`` = Tr(I - Phi Phi^T)
    is the squared chordal distance and satisfies
    trace_phi + misalignment_trace = r_A.
    """

    phi: np.ndarray
    trace_phi: float
    sigma_min_phi: float
    misalignment_trace: float


def alignment(U, X) -> AlignmentReport:
    """Alignment diagnostics Phi = U^T X for U in St(m, r_A), X in St(m, r), r_A <= r."""
    U = require_stiefel(U, 1e-8, "U")
    X = require_stiefel(X, 1e-8, "X")
    if U.shape[0] != X.shape[0]:
        raise ValueError(f"row mismatch: U {U.shape} vs X {X.shape}")
    r_a, r = U.shape[1], X.shape[1]
    if r_a > r:
        raise ValueError(f"need r_A <= r, got r_A={r_a}, r={r}")
    phi = U.T @ X
    s = np.linalg.svd(phi, compute_uv=False)
    trace_phi = float(np.sum(phi * phi))
    return AlignmentReport(
        phi=phi,
        trace_phi=trace_phi,
        sigma_min_phi=float(s[-1]),
        misalignment_trace=float(r_a) - trace_phi,
    )


def misalignment_trace(U, X) -> float:
    """Tr(Omega Omega^T) for Omega = U_perp^T X, without forming U_perp.

    Uses the projector identity Tr(X^T (I - U U^T) X) = r - ||U^T X||_F^2.
    """
    U = require_stiefel(U, 1e-8, "U")
    X = require_stiefel(X, 1e-8, "X")
    if U.shape[0] != X.shape[0]:
        raise ValueError(f"row mismatch: U {U.shape} vs X {X.shape}")
    phi = U.T @ X
    return float(X.shape[1]) - float(np.sum(phi * phi))


def orthogonal_complement(U) -> np.ndarray:
    """Orthonormal basis U_perp of the orthogonal complement of span(U).

    Returns an m x (m - r) matrix; requires m > r. The basis choice is the
    deterministic QR completion, fixed for a fixed U.
    """
    U = require_stiefel(U, 1e-8, "U")
    m, r = U.shape
    if m <= r:
        raise ValueError(f"complement is empty for square U, got shape {U.shape}")
    Q = np.linalg.qr(U, mode="complete")[0]
    return Q[:, r:]


@dataclass(frozen=True)
class DirectionDiversity:
    """Pairwise distances between unit-normalized rows of a matrix.

    ``distances`` covers the kept rows only (zero rows are excluded and
    listed in ``excluded_rows``); ``mean_distance`` is the mean of the
    off-diagonal entries, NaN when fewer than two rows survive.
    """

    distances: np.ndarray
    mean_distance: float
    excluded_rows: tuple[int, ...]


def pairwise_direction_distances(W, zero_tol: float = 1e-12) -> DirectionDiversity:
    """Pairwise Euclidean distances between the unit-normalized rows of W.

    Entries live in [0, 2]; 0 means identical directions, 2 antipodal.
    Rows with norm < ``zero_tol`` are excluded and reported.
    """
    W = require_matrix(W, "W")
    norms = np.linalg.norm(W, axis=1)
    kept = norms >= zero_tol
    excluded = tuple(int(i) for i in np.flatnonzero(~kept))
    if not kept.any():
        raise ValueError("all rows of W are numerically zero")
    R = W[kept] / norms[kept, None]
    gram = np.clip(R @ R.T, -1.0, 1.0)
    dist = np.sqrt(np.maximum(0.0, 2.0 - 2.0 * gram))
    dist = 0.5 * (dist + dist.T)
    np.fill_diagonal(dist, 0.0)
    k = dist.shape[0]
    if k >= 2:
        mean = float(dist.sum() / (k * (k - 1)))
    else:
        mean = float("nan")
    return DirectionDiversity(distances=dist, mean_distance=mean, excluded_rows=excluded)
