"""Low-rank matrix factorization testbed.

Three algorithms on synthetic targets with controlled spectrum:

* ``polar-rgd``: overparameterized X Theta Y^T with X, Y on Stiefel
  manifolds, Theta refreshed by a gamma-damped closed-form update, X and Y
  moved by Riemannian gradient descent with the polar retraction,
* ``bm-gd``: plain gradient descent on the two-factor form Z1 Z2^T,
* ``polar-rgd-sym``: the symmetric PSD variant X Theta X^T.

Losses are 0.5 * ||residual||_F^2 throughout. Alignment diagnostics track
how the factor subspaces capture the target's singular subspaces.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .exceptions import DivergenceError
from .stiefel import (
    alignment,
    polar_retract,
    require_stiefel,
    sample_stiefel_uniform,
    tangent_project,
)
from .trace import RunTrace

DIVERGENCE_LOSS = 1e12


# ---------------------------------------------------------------------------
# targets


@dataclass(frozen=True)
class FactorizationTarget:
    """Rank-r_A target A = U diag(sigma) V^T with sigma_1 / sigma_{r_A} = kappa."""

    A: np.ndarray
    U: np.ndarray
    V: np.ndarray
    sigma: np.ndarray
    kappa: float

    @property
    def m(self) -> int:
        return self.A.shape[0]

    @property
    def n(self) -> int:
        return self.A.shape[1]

    @property
    def r_a(self) -> int:
        return self.sigma.size


@dataclass(frozen=True)
class SymTarget:
    """Symmetric PSD target B = U diag(sigma) U^T, same spectrum convention."""

    B: np.ndarray
    U: np.ndarray
    sigma: np.ndarray
    kappa: float

    @property
    def m(self) -> int:
        return self.B.shape[0]

    @property
    def r_a(self) -> int:
        return self.sigma.size


def _spaced_spectrum(r_a: int, kappa: float, spacing: str, normalize: bool) -> np.ndarray:
    if spacing != "even":
        raise ValueError(f"unsupported spacing {spacing!r}; only 'even' is defined")
    if kappa < 1.0:
        raise ValueError(f"kappa must be >= 1, got {kappa}")
    if r_a == 1:
        if kappa != 1.0:
            raise ValueError("r_a = 1 forces kappa = 1 (the spectrum is a single value)")
        return np.ones(1)
    sigma = np.linspace(kappa, 1.0, r_a)
    # the convergence experiments run on [1, kappa]; normalize rescales to
    # sigma_1 = 1, which slows the eta-dependent dynamics by kappa^2
    return sigma / kappa if normalize else sigma


def make_target(
    m: int,
    n: int,
    r_a: int,
    kappa: float,
    rng: np.random.Generator,
    spacing: str = "even",
    normalize: bool = False,
) -> FactorizationTarget:
    """Build a rank-r_A target with evenly spaced spectrum and condition number kappa.

    Singular values are evenly spaced on [1, kappa]; ``normalize`` rescales
    them to [1/kappa, 1]. Requires r_a <= min(m, n) / 2 (overparameterization
    headroom). If m < n the target is built transposed so that the stored A
    always has m >= n.
    """
    if m < n:
        m, n = n, m
    if not (1 <= r_a <= min(m, n) / 2):
        raise ValueError(f"need 1 <= r_a <= min(m, n)/2, got r_a={r_a}, m={m}, n={n}")
    sigma = _spaced_spectrum(r_a, float(kappa), spacing, normalize)
    U = sample_stiefel_uniform(m, r_a, rng)
    V = sample_stiefel_uniform(n, r_a, rng)
    A = (U * sigma) @ V.T
    return FactorizationTarget(A=A, U=U, V=V, sigma=sigma, kappa=float(kappa))


def make_sym_target(
    m: int,
    r_a: int,
    kappa: float,
    rng: np.random.Generator,
    spacing: str = "even",
    normalize: bool = False,
) -> SymTarget:
    """Symmetric PSD analogue of :func:`make_target`."""
    if not (1 <= r_a <= m / 2):
        raise ValueError(f"need 1 <= r_a <= m/2, got r_a={r_a}, m={m}")
    sigma = _spaced_spectrum(r_a, float(kappa), spacing, normalize)
    U = sample_stiefel_uniform(m, r_a, rng)
    B = (U * sigma) @ U.T
    B = 0.5 * (B + B.T)
    return SymTarget(B=B, U=U, sigma=sigma, kappa=float(kappa))


# ---------------------------------------------------------------------------
# factor containers and initialization


@dataclass
class PolarFactors:
    X: np.ndarray
    Theta: np.ndarray
    Y: np.ndarray

    @property
    def r(self) -> int:
        return self.X.shape[1]


@dataclass
class BMFactors:
    Z1: np.ndarray
    Z2: np.ndarray

    @property
    def r(self) -> int:
        return self.Z1.shape[1]


@dataclass
class SymFactors:
    X: np.ndarray
    Theta: np.ndarray

    @property
    def r(self) -> int:
        return self.X.shape[1]


def init_polar_factors(target: FactorizationTarget, r: int, rng: np.random.Generator) -> PolarFactors:
    """Uniform Stiefel X, Y and Theta = 0. Requires r_a < r <= n."""
    if not (target.r_a < r <= target.n):
        raise ValueError(f"need r_a < r <= n, got r={r}, r_a={target.r_a}, n={target.n}")
    X = sample_stiefel_uniform(target.m, r, rng)
    Y = sample_stiefel_uniform(target.n, r, rng)
    return PolarFactors(X=X, Theta=np.zeros((r, r)), Y=Y)


def init_bm_factors(target: FactorizationTarget, r: int, rng: np.random.Generator) -> BMFactors:
    """i.i.d. Gaussian factors with std 1/sqrt(max(m, n))."""
    if not (target.r_a < r <= target.n):
        raise ValueError(f"need r_a < r <= n, got r={r}, r_a={target.r_a}, n={target.n}")
    std = 1.0 / np.sqrt(max(target.m, target.n))
    Z1 = std * rng.standard_normal((target.m, r))
    Z2 = std * rng.standard_normal((target.n, r))
    return BMFactors(Z1=Z1, Z2=Z2)


def init_sym_factors(target: SymTarget, r: int, rng: np.random.Generator) -> SymFactors:
    if not (target.r_a < r <= target.m):
        raise ValueError(f"need r_a < r <= m, got r={r}, r_a={target.r_a}, m={target.m}")
    X = sample_stiefel_uniform(target.m, r, rng)
    return SymFactors(X=X, Theta=np.zeros((r, r)))


# ---------------------------------------------------------------------------
# losses


def loss_polar(target: FactorizationTarget, f: PolarFactors) -> float:
    """0.5 ||X Theta Y^T - A||_F^2."""
    resid = (f.X @ f.Theta) @ f.Y.T - target.A
    return 0.5 * float(np.sum(resid * resid))


def loss_bm(target: FactorizationTarget, f: BMFactors) -> float:
    """0.5 ||Z1 Z2^T - A||_F^2."""
    resid = f.Z1 @ f.Z2.T - target.A
    return 0.5 * float(np.sum(resid * resid))


def loss_sym(target: SymTarget, f: SymFactors) -> float:
    """0.5 ||X Theta X^T - B||_F^2."""
    resid = (f.X @ f.Theta) @ f.X.T - target.B
    return 0.5 * float(np.sum(resid * resid))


# ---------------------------------------------------------------------------
# gradients and single steps


def theta_update(target: FactorizationTarget, f: PolarFactors, gamma: float) -> np.ndarray:
    """Damped closed-form refresh Theta <- (1 - gamma) Theta + gamma X^T A Y."""
    return (1.0 - gamma) * f.Theta + gamma * (f.X.T @ target.A @ f.Y)


def theta_update_sym(target: SymTarget, f: SymFactors, gamma: float) -> np.ndarray:
    return (1.0 - gamma) * f.Theta + gamma * (f.X.T @ target.B @ f.X)


def riemannian_grads_asym(target: FactorizationTarget, f: PolarFactors) -> tuple[np.ndarray, np.ndarray]:
    """Projector-form gradients E = -(I - XX^T) A Y Theta^T, F = -(I - YY^T) A^T X Theta.

    These equal the Euclidean loss gradients (and are exactly tangent)
    when Theta has just been refreshed with gamma = 1; for damped Theta
    use the Euclidean + tangent-projection path in :func:`rgd_step_asym`.
    """
    T1 = (target.A @ f.Y) @ f.Theta.T
    E = f.X @ (f.X.T @ T1) - T1
    T2 = (target.A.T @ f.X) @ f.Theta
    F = f.Y @ (f.Y.T @ T2) - T2
    return E, F


def riemannian_grad_sym(target: SymTarget, f: SymFactors) -> np.ndarray:
    """G = -(I - XX^T) B X X^T B X, the symmetric-variant descent direction at gamma = 1."""
    W = target.B @ f.X
    P = W @ (f.X.T @ W)
    return f.X @ (f.X.T @ P) - P


def euclid_grads_asym(target: FactorizationTarget, f: PolarFactors) -> tuple[np.ndarray, np.ndarray]:
    """Euclidean gradients of loss_polar in X and Y at fixed Theta."""
    resid = (f.X @ f.Theta) @ f.Y.T - target.A
    return resid @ (f.Y @ f.Theta.T), resid.T @ (f.X @ f.Theta)


def euclid_grad_theta(target: FactorizationTarget, f: PolarFactors) -> np.ndarray:
    """Euclidean gradient of loss_polar in Theta."""
    resid = (f.X @ f.Theta) @ f.Y.T - target.A
    return f.X.T @ resid @ f.Y


def euclid_grads_bm(target: FactorizationTarget, f: BMFactors) -> tuple[np.ndarray, np.ndarray]:
    """Euclidean gradients of loss_bm."""
    resid = f.Z1 @ f.Z2.T - target.A
    return resid @ f.Z2, resid.T @ f.Z1


def euclid_grad_sym(target: SymTarget, f: SymFactors) -> np.ndarray:
    """Euclidean gradient of loss_sym in X at fixed Theta (general, possibly asymmetric Theta)."""
    resid = (f.X @ f.Theta) @ f.X.T - target.B
    return resid @ (f.X @ f.Theta.T) + resid.T @ (f.X @ f.Theta)


def _asym_iteration(
    target: FactorizationTarget, f: PolarFactors, eta: float, gamma: float
) -> tuple[PolarFactors, float, float]:
    """One Theta refresh + RGD step. Returns (new factors, loss at refreshed state, grad norm^2)."""
    AY = target.A @ f.Y
    AtX = target.A.T @ f.X
    M = f.X.T @ AY
    Theta = M if gamma == 1.0 else (1.0 - gamma) * f.Theta + gamma * M
    # 0.5||X Theta Y^T - A||^2 expanded under X^T X = Y^T Y = I
    a2 = float(np.sum(target.A * target.A))
    loss = 0.5 * (a2 - 2.0 * float(np.sum(Theta * M)) + float(np.sum(Theta * Theta)))
    if gamma == 1.0:
        T1 = AY @ Theta.T
        E = f.X @ (f.X.T @ T1) - T1
        T2 = AtX @ Theta
        F = f.Y @ (f.Y.T @ T2) - T2
    else:
        # Euclidean gradients at fixed (damped) Theta, then tangent projection
        gX = f.X @ (Theta @ Theta.T) - AY @ Theta.T
        gY = f.Y @ (Theta.T @ Theta) - AtX @ Theta
        E = tangent_project(f.X, gX)
        F = tangent_project(f.Y, gY)
    grad_sq = float(np.sum(E * E) + np.sum(F * F))
    X_new = polar_retract(f.X, E, eta)
    Y_new = polar_retract(f.Y, F, eta)
    return PolarFactors(X=X_new, Theta=Theta, Y=Y_new), max(loss, 0.0), grad_sq


def rgd_step_asym(target: FactorizationTarget, f: PolarFactors, eta: float, gamma: float = 1.0) -> PolarFactors:
    """One full step of the asymmetric algorithm: Theta refresh, then
    simultaneous retraction updates of X and Y from that same Theta."""
    new_f, _, _ = _asym_iteration(target, f, eta, gamma)
    return new_f


def gd_step_bm(target: FactorizationTarget, f: BMFactors, eta: float) -> BMFactors:
    """Simultaneous GD update of both factors from the same residual."""
    resid = f.Z1 @ f.Z2.T - target.A
    Z1 = f.Z1 - eta * (resid @ f.Z2)
    Z2 = f.Z2 - eta * (resid.T @ f.Z1)
    return BMFactors(Z1=Z1, Z2=Z2)


def _sym_iteration(target: SymTarget, f: SymFactors, eta: float, gamma: float) -> tuple[SymFactors, float, float]:
    BX = target.B @ f.X
    M = f.X.T @ BX
    Theta = M if gamma == 1.0 else (1.0 - gamma) * f.Theta + gamma * M
    b2 = float(np.sum(target.B * target.B))
    loss = 0.5 * (b2 - 2.0 * float(np.sum(Theta * M)) + float(np.sum(Theta * Theta)))
    if gamma == 1.0:
        P = BX @ M
        G = f.X @ (f.X.T @ P) - P
    else:
        # Euclidean gradient R X Theta^T + R^T X Theta expanded under X^T X = I
        gX = f.X @ (Theta @ Theta.T + Theta.T @ Theta) - BX @ (Theta.T + Theta)
        G = tangent_project(f.X, gX)
    grad_sq = float(np.sum(G * G))
    X_new = polar_retract(f.X, G, eta)
    return SymFactors(X=X_new, Theta=Theta), max(loss, 0.0), grad_sq


def rgd_step_sym(target: SymTarget, f: SymFactors, eta: float, gamma: float = 1.0) -> SymFactors:
    """One Theta refresh + retraction step of the symmetric algorithm."""
    new_f, _, _ = _sym_iteration(target, f, eta, gamma)
    return new_f


# ---------------------------------------------------------------------------
# alignment monotonicity diagnostics


@dataclass(frozen=True)
class AlignmentGainReport:
    """Both sides of the increasing-alignment condition and whether it holds."""

    lhs_x: float
    rhs_x: float
    lhs_y: float
    rhs_y: float
    holds_x: bool
    holds_y: bool

    @property
    def holds(self) -> bool:
        return self.holds_x and self.holds_y


def alignment_gain_predicate(target: FactorizationTarget, f: PolarFactors, eta: float) -> AlignmentGainReport:
    """Sufficient condition under which one gamma = 1 RGD step cannot decrease
    the alignment traces Tr(Phi Phi^T), Tr(Psi Psi^T).

    With beta = sigma_1(I - Phi Phi^T) and delta = sigma_1(I - Psi Psi^T):

        2 (1 - eta^2 beta) sigma_min^2(Psi) / kappa^2 * Tr((I - Phi Phi^T) Phi Phi^T)
            >= eta beta Tr(Phi Phi^T)

    and the Psi analogue with the roles of Phi and Psi swapped. The condition
    is stated for sigma_1 = 1; a step with eta on A equals a step with
    eta sigma_1^2 on A / sigma_1, so eta is rescaled accordingly.
    """
    eta = eta * float(target.sigma[0]) ** 2
    kappa2 = target.kappa**2
    s_phi = np.linalg.svd(target.U.T @ f.X, compute_uv=False)
    s_psi = np.linalg.svd(target.V.T @ f.Y, compute_uv=False)
    lam_phi = s_phi**2
    lam_psi = s_psi**2
    beta = float(1.0 - lam_phi.min())
    delta = float(1.0 - lam_psi.min())
    lhs_x = 2.0 * (1.0 - eta**2 * beta) * float(lam_psi.min()) / kappa2 * float(np.sum(lam_phi * (1.0 - lam_phi)))
    rhs_x = eta * beta * float(np.sum(lam_phi))
    lhs_y = 2.0 * (1.0 - eta**2 * delta) * float(lam_phi.min()) / kappa2 * float(np.sum(lam_psi * (1.0 - lam_psi)))
    rhs_y = eta * delta * float(np.sum(lam_psi))
    return AlignmentGainReport(
        lhs_x=lhs_x,
        rhs_x=rhs_x,
        lhs_y=lhs_y,
        rhs_y=rhs_y,
        holds_x=lhs_x >= rhs_x,
        holds_y=lhs_y >= rhs_y,
    )


def loss_alignment_bound(target: FactorizationTarget, f: PolarFactors) -> tuple[float, float]:
    """(loss, bound) where bound = 2 sigma_1^2 (rho_1 + rho_2) with
    rho_1 = Tr(I - Phi Phi^T), rho_2 = Tr(I - Psi Psi^T).

    The bound dominates the full squared residual at a gamma = 1 state
    (Theta = X^T A Y), hence also the halved loss reported here.
    """
    phi = target.U.T @ f.X
    psi = target.V.T @ f.Y
    rho1 = target.r_a - float(np.sum(phi * phi))
    rho2 = target.r_a - float(np.sum(psi * psi))
    bound = 2.0 * float(target.sigma[0]) ** 2 * (rho1 + rho2)
    return loss_polar(target, f), bound


# ---------------------------------------------------------------------------
# runners


def _record_asym(trace, target, f, it, loss, grad_sq, t0):
    rep_phi = alignment(target.U, f.X)
    rep_psi = alignment(target.V, f.Y)
    trace.append(
        it,
        loss,
        trace_phi=rep_phi.trace_phi,
        trace_psi=rep_psi.trace_phi,
        sigma_min_phi=rep_phi.sigma_min_phi,
        sigma_min_psi=rep_psi.sigma_min_phi,
        grad_norm=float(np.sqrt(grad_sq)),
        wall_time=time.perf_counter() - t0,
    )


def _check_divergence(loss: float, algorithm: str, it: int):
    if not np.isfinite(loss) or loss > DIVERGENCE_LOSS:
        raise DivergenceError(f"{algorithm} diverged at iteration {it}: loss = {loss:.3e}")


def _record_bm(trace, target, f, it, loss, G1, G2, t0):
    # subspace alignment of the orthonormalized factors
    Q1 = np.linalg.qr(f.Z1)[0]
    Q2 = np.linalg.qr(f.Z2)[0]
    rep_phi = alignment(target.U, Q1)
    rep_psi = alignment(target.V, Q2)
    trace.append(
        it,
        loss,
        trace_phi=rep_phi.trace_phi,
        trace_psi=rep_psi.trace_phi,
        sigma_min_phi=rep_phi.sigma_min_phi,
        sigma_min_psi=rep_psi.sigma_min_phi,
        grad_norm=float(np.sqrt(np.sum(G1 * G1) + np.sum(G2 * G2))),
        wall_time=time.perf_counter() - t0,
    )


def run_polar_rgd(
    target: FactorizationTarget,
    r: int,
    eta: float,
    seed: int,
    gamma: float = 1.0,
    max_iters: int = 100_000,
    loss_threshold: float = 1e-8,
    record_every: int = 100,
) -> tuple[RunTrace, PolarFactors]:
    """Run the asymmetric Stiefel algorithm until the loss threshold or budget.

    The trace records the loss at the Theta-refreshed state of each recorded
    iteration. ``metadata['converged']`` reports threshold attainment;
    ``metadata['iterations']`` is the exact crossing iteration when converged
    and ``max_iters`` otherwise.
    """
    rng = np.random.default_rng(seed)
    f = init_polar_factors(target, r, rng)
    trace = RunTrace(
        algorithm="polar-rgd",
        metadata={
            "seed": seed,
            "eta": eta,
            "gamma": gamma,
            "m": target.m,
            "n": target.n,
            "r": r,
            "r_A": target.r_a,
            "kappa": target.kappa,
            "max_iters": max_iters,
            "loss_threshold": loss_threshold,
            "record_every": record_every,
        },
    )
    t0 = time.perf_counter()
    converged = False
    steps = 0
    for it in range(max_iters):
        f_next, loss, grad_sq = _asym_iteration(target, f, eta, gamma)
        _check_divergence(loss, "polar-rgd", it)
        hit = loss <= loss_threshold
        if it % record_every == 0 or hit:
            # report the refreshed-Theta state the step was computed from
            probe = PolarFactors(X=f.X, Theta=f_next.Theta, Y=f.Y)
            _record_asym(trace, target, probe, it, loss, grad_sq, t0)
        if hit:
            converged = True
            steps = it
            f = PolarFactors(X=f.X, Theta=f_next.Theta, Y=f.Y)
            break
        f = f_next
    else:
        # budget exhausted: evaluate and record the state after the last step
        f_next, loss, grad_sq = _asym_iteration(target, f, eta, gamma)
        _check_divergence(loss, "polar-rgd", max_iters)
        f = PolarFactors(X=f.X, Theta=f_next.Theta, Y=f.Y)
        _record_asym(trace, target, f, max_iters, loss, grad_sq, t0)
        steps = max_iters
    trace.metadata["converged"] = converged
    trace.metadata["iterations"] = steps
    trace.metadata["final_loss"] = trace.final_loss
    return trace, f


def run_bm_gd(
    target: FactorizationTarget,
    r: int,
    eta: float,
    seed: int,
    max_iters: int = 100_000,
    loss_threshold: float = 1e-8,
    record_every: int = 100,
) -> tuple[RunTrace, BMFactors]:
    """Plain GD baseline on the two-factor parameterization."""
    rng = np.random.default_rng(seed)
    f = init_bm_factors(target, r, rng)
    trace = RunTrace(
        algorithm="bm-gd",
        metadata={
            "seed": seed,
            "eta": eta,
            "gamma": float("nan"),
            "m": target.m,
            "n": target.n,
            "r": r,
            "r_A": target.r_a,
            "kappa": target.kappa,
            "max_iters": max_iters,
            "loss_threshold": loss_threshold,
            "record_every": record_every,
        },
    )
    t0 = time.perf_counter()
    converged = False
    steps = 0
    for it in range(max_iters):
        resid = f.Z1 @ f.Z2.T - target.A
        loss = 0.5 * float(np.sum(resid * resid))
        _check_divergence(loss, "bm-gd", it)
        G1 = resid @ f.Z2
        G2 = resid.T @ f.Z1
        hit = loss <= loss_threshold
        if it % record_every == 0 or hit:
            _record_bm(trace, target, f, it, loss, G1, G2, t0)
        if hit:
            converged = True
            steps = it
            break
        f = BMFactors(Z1=f.Z1 - eta * G1, Z2=f.Z2 - eta * G2)
    else:
        resid = f.Z1 @ f.Z2.T - target.A
        loss = 0.5 * float(np.sum(resid * resid))
        _check_divergence(loss, "bm-gd", max_iters)
        _record_bm(trace, target, f, max_iters, loss, resid @ f.Z2, resid.T @ f.Z1, t0)
        steps = max_iters
    trace.metadata["converged"] = converged
    trace.metadata["iterations"] = steps
    trace.metadata["final_loss"] = trace.final_loss
    return trace, f


def run_sym_rgd(
    target: SymTarget,
    r: int,
    eta: float,
    seed: int,
    gamma: float = 1.0,
    max_iters: int = 100_000,
    loss_threshold: float = 1e-8,
    record_every: int = 100,
) -> tuple[RunTrace, SymFactors]:
    """Symmetric-variant runner; psi diagnostics are undefined and recorded as NaN."""
    rng = np.random.default_rng(seed)
    f = init_sym_factors(target, r, rng)
    trace = RunTrace(
        algorithm="polar-rgd-sym",
        metadata={
            "seed": seed,
            "eta": eta,
            "gamma": gamma,
            "m": target.m,
            "n": target.m,
            "r": r,
            "r_A": target.r_a,
            "kappa": target.kappa,
            "max_iters": max_iters,
            "loss_threshold": loss_threshold,
            "record_every": record_every,
        },
    )
    t0 = time.perf_counter()
    converged = False
    steps = 0
    for it in range(max_iters):
        f_next, loss, grad_sq = _sym_iteration(target, f, eta, gamma)
        _check_divergence(loss, "polar-rgd-sym", it)
        hit = loss <= loss_threshold
        if it % record_every == 0 or hit:
            _record_sym(trace, target, f, it, loss, grad_sq, t0)
        if hit:
            converged = True
            steps = it
            f = SymFactors(X=f.X, Theta=f_next.Theta)
            break
        f = f_next
    else:
        f_next, loss, grad_sq = _sym_iteration(target, f, eta, gamma)
        _check_divergence(loss, "polar-rgd-sym", max_iters)
        f = SymFactors(X=f.X, Theta=f_next.Theta)
        _record_sym(trace, target, f, max_iters, loss, grad_sq, t0)
        steps = max_iters
    trace.metadata["converged"] = converged
    trace.metadata["iterations"] = steps
    trace.metadata["final_loss"] = trace.final_loss
    return trace, f


def _record_sym(trace, target, f, it, loss, grad_sq, t0):
    rep_phi = alignment(target.U, f.X)
    trace.append(
        it,
        loss,
        trace_phi=rep_phi.trace_phi,
        sigma_min_phi=rep_phi.sigma_min_phi,
        grad_norm=float(np.sqrt(grad_sq)),
        wall_time=time.perf_counter() - t0,
    )
