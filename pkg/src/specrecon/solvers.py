"""Classical reconstruction baselines.

* :func:`least_squares` - minimum-norm least squares through the pseudoinverse.
* :func:`nnls` - Lawson-Hanson active-set non-negative least squares.
* :func:`nnls_tv` - non-negative least squares with a 1D total-variation
  penalty, solved by monotone accelerated proximal gradient.

Objectives use the un-halved residual ``||y - R x||^2`` throughout.
"""

from __future__ import annotations

import enum
import time
import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from .core import EncodedSignal, ResponseMatrix
from .errors import DimensionMismatch, MaxIterExceeded
from .tv import prox_tv_nonneg, tv_variation

PINV_RCOND = 1e-10


class StepRule(str, enum.Enum):
    FIXED_LIPSCHITZ = "fixed_lipschitz"
    BACKTRACKING = "backtracking"


@dataclass(frozen=True)
class SolverConfig:
    """Solver settings.

    ``tv_lambda`` is an absolute weight, unless ``tv_relative`` is set; then
    the weight applied to a readout ``y`` is
    ``tv_lambda * ||y|| * sigma_max(R)``, which is invariant to rescaling
    either ``y`` or ``R``.
    """

    tv_lambda: float = 0.0
    max_iter: int = 3000
    tol: float = 1e-10
    step_rule: StepRule = StepRule.FIXED_LIPSCHITZ
    tv_relative: bool = False

    def __post_init__(self):
        if self.tv_lambda < 0:
            raise ValueError("tv_lambda must be non-negative")
        if int(self.max_iter) < 1:
            raise ValueError("max_iter must be >= 1")
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        object.__setattr__(self, "step_rule", StepRule(self.step_rule))

    def to_dict(self) -> dict:
        return {"tv_lambda": self.tv_lambda, "max_iter": self.max_iter, "tol": self.tol,
                "step_rule": self.step_rule.value, "tv_relative": self.tv_relative}


@dataclass
class SolveReport:
    x_hat: np.ndarray
    iterations: int
    final_objective: float
    converged: bool
    wall_time: float  # milliseconds
    solver: str = ""
    objective_history: list[float] = field(default_factory=list, repr=False)


def _inputs(R, y):
    A = R.entries if isinstance(R, ResponseMatrix) else np.asarray(R, dtype=np.float64)
    b = y.values if isinstance(y, EncodedSignal) else np.asarray(y, dtype=np.float64)
    if A.ndim != 2 or b.ndim != 1 or A.shape[0] != b.shape[0]:
        raise DimensionMismatch(f"R has shape {A.shape} but y has shape {b.shape}")
    return A, b


def _sq_residual(A, b, x):
    r = b - A @ x
    return float(r @ r)


def pseudoinverse(R) -> np.ndarray:
    """SVD pseudoinverse, singular values below ``1e-10 * sigma_max`` dropped."""
    A = R.entries if isinstance(R, ResponseMatrix) else np.asarray(R, dtype=np.float64)
    U, s, Vt = np.linalg.svd(A, full_matrices=False)
    keep = s > PINV_RCOND * s[0] if s.size else s > 0
    return (Vt[keep].T / s[keep]) @ U[:, keep].T


def pinv_preprocess(R, y) -> np.ndarray:
    """``R^+ y``, the pseudoinverse back-projection used as a network input
    feature by some reconstruction models (may contain negatives)."""
    A, b = _inputs(R, y)
    return pseudoinverse(A) @ b


def least_squares(R, y) -> SolveReport:
    t0 = time.perf_counter()
    A, b = _inputs(R, y)
    x = pseudoinverse(A) @ b
    obj = _sq_residual(A, b, x)
    ms = (time.perf_counter() - t0) * 1e3
    return SolveReport(x, 1, obj, True, ms, "ls")


def kkt_residual(R, y, x) -> float:
    """Largest violation of the NNLS optimality conditions at ``x``.

    With ``g = 2 R^T (R x - y)``: ``|g_j|`` where ``x_j > 0``, ``max(0, -g_j)``
    where ``x_j = 0``, and ``max(0, -x_j)`` for infeasibility.
    """
    A, b = _inputs(R, y)
    x = np.asarray(x, dtype=np.float64)
    g = 2.0 * A.T @ (A @ x - b)
    pos = x > 0
    viol = np.concatenate([np.abs(g[pos]), np.maximum(0.0, -g[~pos]), np.maximum(0.0, -x)])
    return float(viol.max(initial=0.0))


def nnls(R, y, cfg: SolverConfig | None = None) -> SolveReport:
    """Lawson-Hanson active-set solution of ``min_{x >= 0} ||y - R x||^2``.

    Parameters
    ----------
    R : ResponseMatrix or array_like, shape (K, L)
    y : EncodedSignal or array_like, shape (K,)
    cfg : SolverConfig, optional
        ``cfg.tol`` bounds the KKT residual at termination (in units of the
        gradient ``2 R^T (R x - y)``); ``cfg.max_iter`` caps the total number
        of least-squares subproblem solves.

    Returns
    -------
    SolveReport
        ``converged`` is False when ``max_iter`` was exhausted; a
        :class:`MaxIterExceeded` warning is issued and the best feasible
        iterate is returned.

    Notes
    -----
    Ties in the entering-index selection go to the lowest index.
    """
    cfg = cfg or SolverConfig()
    t0 = time.perf_counter()
    A, b = _inputs(R, y)
    n = A.shape[1]
    x = np.zeros(n)
    passive = np.zeros(n, dtype=bool)
    # columns whose entry stalled through rounding; cleared whenever x moves
    blocked = np.zeros(n, dtype=bool)
    # w = -g / 2, so the KKT bound on g translates to tol / 2 on w
    wtol = 0.5 * cfg.tol
    w = A.T @ b
    iterations = 0
    converged = False
    while True:
        cand = ~passive & ~blocked & (w > wtol)
        if not cand.any():
            converged = True
            break
        if iterations >= cfg.max_iter:
            break
        j = int(np.argmax(np.where(cand, w, -np.inf)))
        passive[j] = True
        first = True
        while iterations < cfg.max_iter:
            iterations += 1
            idx = np.flatnonzero(passive)
            z = np.zeros(n)
            z[idx] = np.linalg.lstsq(A[:, idx], b, rcond=None)[0]
            if np.all(z[idx] > 0):
                x = z
                blocked[:] = False
                break
            if first and z[j] <= 0:
                passive[j] = False
                blocked[j] = True
                break
            first = False
            neg = np.flatnonzero(passive & (z <= 0))
            ratios = x[neg] / (x[neg] - z[neg])
            step = ratios.min()
            x = x + step * (z - x)
            x[neg[ratios == step]] = 0.0
            passive &= x > 0
            x[~passive] = 0.0
            blocked[:] = False
        w = A.T @ (b - A @ x)
    obj = _sq_residual(A, b, x)
    ms = (time.perf_counter() - t0) * 1e3
    if not converged:
        warnings.warn(f"nnls stopped after {iterations} iterations", MaxIterExceeded, stacklevel=2)
    return SolveReport(x, iterations, obj, converged, ms, "nnls")


def _tv_weight(A, b, cfg: SolverConfig) -> float:
    if cfg.tv_relative:
        return cfg.tv_lambda * float(np.linalg.norm(b)) * float(np.linalg.norm(A, 2))
    return cfg.tv_lambda


def tv_objective(R, y, x, lam: float) -> float:
    A, b = _inputs(R, y)
    return _sq_residual(A, b, x) + lam * tv_variation(x)


def nnls_tv(R, y, cfg: SolverConfig | None = None, x0=None) -> SolveReport:
    """Solve ``min_{x >= 0} ||y - R x||^2 + lam * sum_j |x[j+1] - x[j]|``.

    Monotone FISTA: a gradient step on the quadratic, then the exact prox of
    ``lam * TV`` plus projection onto ``x >= 0``.  A candidate is accepted only
    if it does not increase the objective, so the recorded objective history
    is non-increasing.  The run stops when an accepted step lowers the
    objective by less than ``cfg.tol`` relative to its current value, or when
    neither the accelerated nor a plain proximal step makes progress.

    With the fixed step rule the step is ``1 / (2 sigma_max(R)^2)``, the
    inverse Lipschitz constant of the quadratic's gradient.
    """
    cfg = cfg or SolverConfig()
    t0 = time.perf_counter()
    A, b = _inputs(R, y)
    n = A.shape[1]
    lam = _tv_weight(A, b, cfg)

    def f(x):
        r = A @ x - b
        return float(r @ r)

    def F(x):
        return f(x) + lam * tv_variation(x)

    lip = 2.0 * float(np.linalg.norm(A, 2)) ** 2
    backtrack = cfg.step_rule is StepRule.BACKTRACKING
    # the backtracking step starts optimistic and only ever shrinks
    step = (4.0 if backtrack else 1.0) / lip if lip > 0 else 1.0

    x = np.zeros(n) if x0 is None else np.maximum(np.asarray(x0, dtype=np.float64), 0.0)
    Fx = F(x)
    history = [Fx]
    v = x.copy()
    tk = 1.0
    converged = False
    stalled = False
    it = 0
    while it < cfg.max_iter:
        it += 1
        rv = A @ v - b
        grad = 2.0 * (A.T @ rv)
        z = prox_tv_nonneg(v - step * grad, step * lam)
        if backtrack:
            fv = float(rv @ rv)
            while step * lip > 1.0:
                d = z - v
                if f(z) <= fv + grad @ d + (d @ d) / (2.0 * step):
                    break
                step *= 0.5
                z = prox_tv_nonneg(v - step * grad, step * lam)
        Fz = F(z)
        accepted = Fz <= Fx
        x_new = z if accepted else x
        t_new = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * tk * tk))
        if accepted:
            dec = Fx - Fz
            v = x_new + (tk / t_new) * (z - x_new) + ((tk - 1.0) / t_new) * (x_new - x)
            x, Fx, tk = x_new, Fz, t_new
            history.append(Fx)
            stalled = False
            if dec <= cfg.tol * max(Fx, np.finfo(float).tiny):
                converged = True
                break
        else:
            # restart the momentum from the last accepted iterate
            if stalled:
                converged = True
                break
            stalled = True
            v = x.copy()
            tk = 1.0
    ms = (time.perf_counter() - t0) * 1e3
    if not converged:
        warnings.warn(f"nnls_tv stopped after {it} iterations", MaxIterExceeded, stacklevel=2)
    return SolveReport(x, it, Fx, converged, ms, "nnls-tv", history)


TV_SWEEP = tuple(10.0 ** np.arange(-6, 1))


def select_tv_lambda(R: ResponseMatrix, X_val: np.ndarray, Y_val: np.ndarray,
                     factors=TV_SWEEP, base: SolverConfig | None = None) -> tuple[float, dict]:
    """Pick the relative TV weight with the lowest validation RMSE.

    Returns the best factor and a ``{factor: rmse}`` table.  The chosen
    factor is meant for ``SolverConfig(tv_lambda=factor, tv_relative=True)``.
    """
    base = base or SolverConfig(max_iter=1000, tol=1e-7)
    table = {}
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", MaxIterExceeded)
        for fac in factors:
            cfg = replace(base, tv_lambda=float(fac), tv_relative=True)
            errs = [np.sqrt(np.mean((nnls_tv(R, yv, cfg).x_hat - xv) ** 2))
                    for xv, yv in zip(X_val, Y_val)]
            table[float(fac)] = float(np.mean(errs))
    best = min(table, key=table.get)
    return best, table
