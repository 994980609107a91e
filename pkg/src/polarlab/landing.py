"""Landing-method adapter training on a whitened least-squares task.

The adapter is DeltaW = (alpha/r) X Theta Y^T with X, Y kept near their
Stiefel manifolds not by retraction but by descending the landing field

    Gamma(X) = Skew(grad_X L . X^T) X + lambda * grad N(X),
    N(X) = ||X^T X - I||_F^2,

whose two components are Frobenius-orthogonal by construction. All three
parameter updates of one step use gradients evaluated at the pre-step
state (one backward pass), each run through its own Adam transform.

The task is least squares against whitened inputs: L = ||(W0 + DeltaW) D
- labels||_F^2 with D D^T = I, which collapses to the factored form
||DeltaW - residual||_F^2 + c; both evaluation paths are implemented.
A plain LoRA-style baseline (two Euclidean factors, Z2 zero-initialized)
trains on the same task for comparison.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import io
from .exceptions import DivergenceError
from .stiefel import (
    distance_to_stiefel,
    pairwise_direction_distances,
    sample_stiefel_uniform,
    stable_rank,
)
from .trace import RunTrace

# ---------------------------------------------------------------------------
# states and configuration


@dataclass
class AdapterState:
    """Frozen base weights plus the polar-parameterized update."""

    W0: np.ndarray
    X: np.ndarray
    Theta: np.ndarray
    Y: np.ndarray
    scale_alpha: float = 32.0

    @property
    def r(self) -> int:
        return self.X.shape[1]

    def delta_w(self) -> np.ndarray:
        """(scale_alpha / r) * X Theta Y^T."""
        return (self.scale_alpha / self.r) * ((self.X @ self.Theta) @ self.Y.T)


@dataclass
class LoraState:
    """Two-factor Euclidean baseline, DeltaW = (scale_alpha / r) Z1 Z2^T."""

    W0: np.ndarray
    Z1: np.ndarray
    Z2: np.ndarray
    scale_alpha: float = 32.0

    @property
    def r(self) -> int:
        return self.Z1.shape[1]

    def delta_w(self) -> np.ndarray:
        return (self.scale_alpha / self.r) * (self.Z1 @ self.Z2.T)


def init_adapter_state(W0, r: int, rng: np.random.Generator, scale_alpha: float = 32.0) -> AdapterState:
    """Uniform Stiefel X, Y and Theta = 0, so DeltaW = 0 at initialization."""
    W0 = np.asarray(W0, dtype=np.float64)
    m, n = W0.shape
    return AdapterState(
        W0=W0,
        X=sample_stiefel_uniform(m, r, rng),
        Theta=np.zeros((r, r)),
        Y=sample_stiefel_uniform(n, r, rng),
        scale_alpha=float(scale_alpha),
    )


def init_lora_state(W0, r: int, rng: np.random.Generator, scale_alpha: float = 32.0) -> LoraState:
    """Standard LoRA init: Z1 Gaussian, Z2 = 0, so DeltaW = 0 at initialization."""
    W0 = np.asarray(W0, dtype=np.float64)
    m, n = W0.shape
    std = 1.0 / np.sqrt(max(m, n))
    return LoraState(
        W0=W0,
        Z1=std * rng.standard_normal((m, r)),
        Z2=np.zeros((n, r)),
        scale_alpha=float(scale_alpha),
    )


@dataclass
class LandingConfig:
    """Hyperparameters of the landing trainer.

    ``eta_schedule`` maps the iteration index to a positive step size;
    None means constant ``eta``.
    """

    lam: float = 1e-3
    eta: float = 1e-2
    eta_schedule: Callable[[int], float] | None = None
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    max_iters: int = 5000
    seed: int = 0

    def __post_init__(self):
        if not self.lam > 0:
            raise ValueError(f"lam must be positive, got {self.lam}")

    def eta_at(self, t: int) -> float:
        eta = self.eta_schedule(t) if self.eta_schedule is not None else self.eta
        if not (np.isfinite(eta) and eta > 0):
            raise ValueError(f"schedule returned a non-positive step at t={t}: {eta}")
        return float(eta)


def constant_schedule(eta: float) -> Callable[[int], float]:
    return lambda t: eta


def linear_decay_schedule(eta: float, total_iters: int) -> Callable[[int], float]:
    """eta * (1 - t / total); strictly positive for t < total."""
    return lambda t: eta * (1.0 - t / total_iters)


@dataclass
class AdamState:
    """First/second moment accumulators for one parameter."""

    m: np.ndarray
    v: np.ndarray
    t: int = 0

    @classmethod
    def zeros_like(cls, x) -> "AdamState":
        return cls(m=np.zeros_like(x), v=np.zeros_like(x))


def adam_transform(state: AdamState, g: np.ndarray, beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8) -> np.ndarray:
    """Bias-corrected Adam direction m_hat / (sqrt(v_hat) + eps); advances the state."""
    state.t += 1
    state.m = beta1 * state.m + (1.0 - beta1) * g
    state.v = beta2 * state.v + (1.0 - beta2) * (g * g)
    m_hat = state.m / (1.0 - beta1**state.t)
    v_hat = state.v / (1.0 - beta2**state.t)
    return m_hat / (np.sqrt(v_hat) + eps)


# ---------------------------------------------------------------------------
# landing field


def grad_distance_to_stiefel(X) -> np.ndarray:
    """Gradient of N(X) = ||X^T X - I||_F^2, namely 4 X (X^T X - I)."""
    X = np.asarray(X, dtype=np.float64)
    r = X.shape[1]
    return 4.0 * (X @ (X.T @ X - np.eye(r)))


def landing_field(X, grad_x, lam: float) -> np.ndarray:
    """Gamma(X) = Skew(grad_x X^T) X + lam * grad N(X).

    The loss component is the Riemannian gradient direction; the penalty
    component points toward the manifold; the two are orthogonal under the
    Frobenius inner product at every X.

    Skew(G X^T) X is evaluated as (G (X^T X) - X (G^T X)) / 2, which never
    materializes the m x m matrix and keeps the step at O(m r^2).
    """
    X = np.asarray(X, dtype=np.float64)
    grad_x = np.asarray(grad_x, dtype=np.float64)
    if X.shape != grad_x.shape:
        raise ValueError(f"shape mismatch: X {X.shape} vs grad {grad_x.shape}")
    loss_part = 0.5 * (grad_x @ (X.T @ X) - X @ (grad_x.T @ X))
    return loss_part + lam * grad_distance_to_stiefel(X)


# ---------------------------------------------------------------------------
# whitened task


@dataclass(frozen=True)
class WhitenedTask:
    """Least squares against whitened inputs with a planted low-rank residual.

    ``residual`` is the rank-r_A matrix labels D^T - W0 the adapter must
    represent; ``c`` is the constant offset between the direct and factored
    loss forms (zero when the labels are realizable).
    """

    W0: np.ndarray
    D: np.ndarray
    labels: np.ndarray
    residual: np.ndarray
    c: float
    planted_sigma: np.ndarray

    @property
    def r_a(self) -> int:
        return self.planted_sigma.size

    def loss(self, delta_w, direct: bool = False) -> float:
        """||(W0 + delta_w) D - labels||_F^2, by default via the factored form."""
        if direct:
            resid = (self.W0 + delta_w) @ self.D - self.labels
            return float(np.sum(resid * resid))
        diff = delta_w - self.residual
        # c is zero only up to rounding, so clamp the near-converged tail
        return max(float(np.sum(diff * diff)) + self.c, 0.0)

    def grad_delta_w(self, delta_w, direct: bool = False) -> np.ndarray:
        """Gradient of the loss in DeltaW."""
        if direct:
            return 2.0 * ((self.W0 + delta_w) @ self.D - self.labels) @ self.D.T
        return 2.0 * (delta_w - self.residual)


def make_whitened_task(
    m: int,
    n: int,
    n_cols: int,
    r_a: int,
    rng: np.random.Generator,
    kappa: float = 10.0,
    w0_scale: float = 1.0,
) -> WhitenedTask:
    """Build a whitened task whose optimal adapter is a known rank-r_a matrix.

    D is n x n_cols with orthonormal rows (n_cols >= n); labels are
    generated as (W0 + P) D for a planted P with singular values evenly
    spaced on [1/kappa, 1], so the equivalent factored target is exactly P.
    """
    if n_cols < n:
        raise ValueError(f"need n_cols >= n for D D^T = I, got n_cols={n_cols}, n={n}")
    if not (1 <= r_a <= min(m, n)):
        raise ValueError(f"need 1 <= r_a <= min(m, n), got r_a={r_a}")
    Q = np.linalg.qr(rng.standard_normal((n_cols, n)))[0]
    D = Q.T
    gram_err = float(np.linalg.norm(D @ D.T - np.eye(n)))
    if gram_err > 1e-10:
        raise ValueError(f"whitening failed: ||D D^T - I|| = {gram_err:.3e}")
    W0 = (w0_scale / np.sqrt(n)) * rng.standard_normal((m, n))
    if r_a == 1:
        sigma = np.ones(1)
    else:
        sigma = np.linspace(kappa, 1.0, r_a) / kappa
    U_p = sample_stiefel_uniform(m, r_a, rng)
    V_p = sample_stiefel_uniform(n, r_a, rng)
    P = (U_p * sigma) @ V_p.T
    labels = (W0 + P) @ D
    c = float(np.sum(labels * labels)) - float(np.sum((labels @ D.T) ** 2))
    return WhitenedTask(W0=W0, D=D, labels=labels, residual=P, c=c, planted_sigma=sigma)


def whitened_task_grads(task: WhitenedTask, state: AdapterState) -> tuple[np.ndarray, np.ndarray, np.ndarray, float]:
    """(G_X, G_Theta, G_Y, loss) of the task loss at the adapter state."""
    s = state.scale_alpha / state.r
    XT = state.X @ state.Theta
    delta = s * (XT @ state.Y.T)
    diff = delta - task.residual
    loss = max(float(np.sum(diff * diff)) + task.c, 0.0)
    G_dw = 2.0 * diff
    G_X = s * (G_dw @ (state.Y @ state.Theta.T))
    G_Y = s * (G_dw.T @ XT)
    G_Theta = s * (state.X.T @ G_dw @ state.Y)
    return G_X, G_Theta, G_Y, loss


def lora_grads(task: WhitenedTask, state: LoraState) -> tuple[np.ndarray, np.ndarray, float]:
    """(G_Z1, G_Z2, loss) of the task loss at the LoRA state."""
    s = state.scale_alpha / state.r
    delta = s * (state.Z1 @ state.Z2.T)
    diff = delta - task.residual
    loss = max(float(np.sum(diff * diff)) + task.c, 0.0)
    G_dw = 2.0 * diff
    return s * (G_dw @ state.Z2), s * (G_dw.T @ state.Z1), loss


# ---------------------------------------------------------------------------
# training steps


def _polar_landing_iteration(
    task: WhitenedTask,
    state: AdapterState,
    opt: dict,
    cfg: LandingConfig,
    t: int,
    theta_mode: str = "full",
    grad_mode: str = "landing",
):
    G_X, G_Theta, G_Y, loss = whitened_task_grads(task, state)
    if not np.isfinite(loss):
        raise DivergenceError(f"landing run hit a non-finite loss at step {t}")
    if theta_mode == "diagonal":
        G_Theta = np.diag(np.diag(G_Theta))
    elif theta_mode != "full":
        raise ValueError(f"unknown theta_mode {theta_mode!r}")
    if grad_mode == "landing":
        dir_X = landing_field(state.X, G_X, cfg.lam)
        dir_Y = landing_field(state.Y, G_Y, cfg.lam)
    elif grad_mode == "euclidean":
        # ablation arm: raw loss gradient plus the same orthogonality penalty
        dir_X = G_X + cfg.lam * grad_distance_to_stiefel(state.X)
        dir_Y = G_Y + cfg.lam * grad_distance_to_stiefel(state.Y)
    else:
        raise ValueError(f"unknown grad_mode {grad_mode!r}")
    eta_t = cfg.eta_at(t)
    new_state = AdapterState(
        W0=state.W0,
        X=state.X - eta_t * adam_transform(opt["X"], dir_X, cfg.beta1, cfg.beta2, cfg.eps),
        Theta=state.Theta - eta_t * adam_transform(opt["Theta"], G_Theta, cfg.beta1, cfg.beta2, cfg.eps),
        Y=state.Y - eta_t * adam_transform(opt["Y"], dir_Y, cfg.beta1, cfg.beta2, cfg.eps),
        scale_alpha=state.scale_alpha,
    )
    grad_norm = float(np.sqrt(np.sum(dir_X**2) + np.sum(dir_Y**2) + np.sum(G_Theta**2)))
    return new_state, loss, grad_norm


def polar_train_step(
    task: WhitenedTask,
    state: AdapterState,
    opt: dict,
    cfg: LandingConfig,
    t: int,
    theta_mode: str = "full",
    grad_mode: str = "landing",
) -> tuple[AdapterState, float]:
    """One landing step. All gradients are taken at the pre-step state; X and Y
    move along the Adam-transformed landing field (penalty inside), Theta along
    its Adam-transformed Euclidean gradient. Returns the pre-step loss."""
    new_state, loss, _ = _polar_landing_iteration(task, state, opt, cfg, t, theta_mode, grad_mode)
    return new_state, loss


def lora_train_step(
    task: WhitenedTask, state: LoraState, opt: dict, cfg: LandingConfig, t: int
) -> tuple[LoraState, float]:
    """One Adam step of the Euclidean two-factor baseline on the same task."""
    G1, G2, loss = lora_grads(task, state)
    if not np.isfinite(loss):
        raise DivergenceError(f"lora run hit a non-finite loss at step {t}")
    eta_t = cfg.eta_at(t)
    new_state = LoraState(
        W0=state.W0,
        Z1=state.Z1 - eta_t * adam_transform(opt["Z1"], G1, cfg.beta1, cfg.beta2, cfg.eps),
        Z2=state.Z2 - eta_t * adam_transform(opt["Z2"], G2, cfg.beta1, cfg.beta2, cfg.eps),
        scale_alpha=state.scale_alpha,
    )
    return new_state, loss


# ---------------------------------------------------------------------------
# runners


def _landing_metadata(task: WhitenedTask, cfg: LandingConfig, r: int, scale_alpha: float, record_every: int, method: str) -> dict:
    return {
        "seed": cfg.seed,
        "eta": cfg.eta,
        "gamma": float("nan"),
        "m": task.W0.shape[0],
        "n": task.W0.shape[1],
        "r": r,
        "r_A": task.r_a,
        "kappa": float(task.planted_sigma[0] / task.planted_sigma[-1]),
        "lam": cfg.lam,
        "scale_alpha": scale_alpha,
        "max_iters": cfg.max_iters,
        "record_every": record_every,
        "method": method,
    }


def train_polar_landing(
    task: WhitenedTask,
    r: int,
    cfg: LandingConfig,
    scale_alpha: float = 32.0,
    record_every: int = 10,
    theta_mode: str = "full",
    grad_mode: str = "landing",
) -> tuple[AdapterState, RunTrace]:
    """Train the polar adapter with the landing method.

    The trace adds per-iteration columns n_x = N(X), n_y = N(Y) and
    stable_rank of DeltaW; subspace alignment columns are undefined off
    the manifold and recorded as NaN.
    """
    import time

    rng = np.random.default_rng(cfg.seed)
    state = init_adapter_state(task.W0, r, rng, scale_alpha)
    opt = {name: AdamState.zeros_like(getattr(state, name)) for name in ("X", "Theta", "Y")}
    trace = RunTrace(
        algorithm="landing-polar",
        metadata=_landing_metadata(task, cfg, r, scale_alpha, record_every, "landing-polar"),
    )
    t0 = time.perf_counter()
    for t in range(cfg.max_iters):
        pre = state
        state, loss, grad_norm = _polar_landing_iteration(task, pre, opt, cfg, t, theta_mode, grad_mode)
        if t % record_every == 0:
            _record_adapter(trace, task, pre, t, loss, grad_norm, t0)
    _record_adapter(trace, task, state, cfg.max_iters, task.loss(state.delta_w()), float("nan"), t0)
    trace.metadata["final_loss"] = trace.final_loss
    return state, trace


def train_lora(
    task: WhitenedTask,
    r: int,
    cfg: LandingConfig,
    scale_alpha: float = 32.0,
    record_every: int = 10,
) -> tuple[LoraState, RunTrace]:
    """Train the Euclidean two-factor baseline with Adam on the same task."""
    import time

    rng = np.random.default_rng(cfg.seed)
    state = init_lora_state(task.W0, r, rng, scale_alpha)
    opt = {name: AdamState.zeros_like(getattr(state, name)) for name in ("Z1", "Z2")}
    trace = RunTrace(
        algorithm="lora",
        metadata=_landing_metadata(task, cfg, r, scale_alpha, record_every, "lora"),
    )
    t0 = time.perf_counter()
    for t in range(cfg.max_iters):
        pre = state
        state, loss = lora_train_step(task, pre, opt, cfg, t)
        if t % record_every == 0:
            _record_lora(trace, pre, t, loss, t0)
    _record_lora(trace, state, cfg.max_iters, task.loss(state.delta_w()), t0)
    trace.metadata["final_loss"] = trace.final_loss
    return state, trace


def _safe_stable_rank(delta_w) -> float:
    try:
        return stable_rank(delta_w).stable_rank
    except ValueError:
        return float("nan")


def _record_adapter(trace, task, state, t, loss, grad_norm, t0):
    import time

    trace.append(
        t,
        loss,
        grad_norm=grad_norm,
        wall_time=time.perf_counter() - t0,
        n_x=distance_to_stiefel(state.X),
        n_y=distance_to_stiefel(state.Y),
        stable_rank=_safe_stable_rank(state.delta_w()),
    )


def _record_lora(trace, state, t, loss, t0):
    import time

    trace.append(
        t,
        loss,
        wall_time=time.perf_counter() - t0,
        n_x=distance_to_stiefel(state.Z1),
        n_y=distance_to_stiefel(state.Z2),
        stable_rank=_safe_stable_rank(state.delta_w()),
    )


# ---------------------------------------------------------------------------
# diagnostics and checkpoints


def merge_theta(state: AdapterState) -> AdapterState:
    """Fold Theta into X: (X Theta, I, Y) produces the identical DeltaW."""
    return AdapterState(
        W0=state.W0,
        X=state.X @ state.Theta,
        Theta=np.eye(state.r),
        Y=state.Y,
        scale_alpha=state.scale_alpha,
    )


@dataclass(frozen=True)
class DiversityReport:
    """Stable rank, spectrum and row-direction spread of an update matrix."""

    stable_rank: float
    spectrum: np.ndarray
    mean_pairwise_distance: float
    excluded_rows: tuple


def diversity_report(state) -> DiversityReport:
    """Diagnostics of DeltaW for either adapter flavor (errors on a zero update)."""
    delta = state.delta_w()
    summary = stable_rank(delta)
    spread = pairwise_direction_distances(delta)
    return DiversityReport(
        stable_rank=summary.stable_rank,
        spectrum=summary.singular_values,
        mean_pairwise_distance=spread.mean_distance,
        excluded_rows=spread.excluded_rows,
    )


def save_adapter_checkpoint(directory, state, extra_meta: dict | None = None) -> None:
    """Dump an AdapterState or LoraState as matrix CSVs plus meta.json."""
    if isinstance(state, AdapterState):
        matrices = {"W0": state.W0, "X": state.X, "Theta": state.Theta, "Y": state.Y}
        kind = "polar-adapter"
    elif isinstance(state, LoraState):
        matrices = {"W0": state.W0, "Z1": state.Z1, "Z2": state.Z2}
        kind = "lora"
    else:
        raise TypeError(f"unsupported state type {type(state).__name__}")
    meta = {"kind": kind, "scale_alpha": state.scale_alpha}
    meta.update(extra_meta or {})
    io.save_checkpoint(directory, matrices, meta)


def load_adapter_checkpoint(directory):
    """Inverse of :func:`save_adapter_checkpoint`."""
    matrices, meta = io.load_checkpoint(directory)
    kind = meta.get("kind")
    if kind == "polar-adapter":
        return AdapterState(
            W0=matrices["W0"],
            X=matrices["X"],
            Theta=matrices["Theta"],
            Y=matrices["Y"],
            scale_alpha=float(meta["scale_alpha"]),
        ), meta
    if kind == "lora":
        return LoraState(
            W0=matrices["W0"],
            Z1=matrices["Z1"],
            Z2=matrices["Z2"],
            scale_alpha=float(meta["scale_alpha"]),
        ), meta
    raise ValueError(f"{directory}: unknown checkpoint kind {kind!r}")
