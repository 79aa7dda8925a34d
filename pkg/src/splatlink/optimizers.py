"""Unconstrained minimizers for small dense problems.

BFGS with a strong-Wolfe line search, Adam with a reduce-on-plateau learning
rate schedule, and the Adam-then-BFGS hybrid.  All three are deterministic
given (f_and_grad, x0, opts) and share termination tests: infinity-norm of
the gradient below grad_tol, infinity-norm of the step below param_tol, or
max_iters.
"""

from dataclasses import dataclass

import numpy as np

WOLFE_C1 = 1e-4
WOLFE_C2 = 0.9
CURVATURE_MIN = 1e-10
_LS_MAX_EVALS = 25


class NumericalFailure(RuntimeError):
    """Objective or gradient went non-finite; carries the best iterate seen."""

    def __init__(self, message, x, loss):
        super().__init__(message)
        self.x = x
        self.loss = loss


@dataclass(frozen=True)
class OptimOptions:
    grad_tol: float = 1e-5
    param_tol: float = 1e-6
    max_iters: int = 200
    adam_lr0: float = 1e-3
    adam_patience: int = 3
    adam_lr_factor: float = 0.5

    def __post_init__(self):
        if self.grad_tol <= 0 or self.param_tol <= 0:
            raise ValueError("tolerances must be > 0")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")


@dataclass(frozen=True)
class OptimizationResult:
    x: np.ndarray
    loss: float
    iterations: int
    function_evals: int
    converged_by: str  # "grad_tol" | "param_tol" | "max_iters"


class _Counter:
    """Wraps f_and_grad with eval counting, finiteness checks and best-x tracking."""

    def __init__(self, f_and_grad):
        self.f = f_and_grad
        self.nfev = 0
        self.best_x = None
        self.best_f = np.inf

    def __call__(self, x):
        self.nfev += 1
        fx, g = self.f(x)
        g = np.asarray(g, dtype=np.float64)
        if not (np.isfinite(fx) and np.all(np.isfinite(g))):
            raise NumericalFailure("non-finite objective or gradient",
                                   self.best_x if self.best_x is not None else x,
                                   self.best_f)
        if fx < self.best_f:
            self.best_f = fx
            self.best_x = x.copy()
        return float(fx), g


def _wolfe_line_search(f, x, p, fx, g, a_init=1.0):
    """Strong-Wolfe step along p (Nocedal-Wright bracket and zoom).

    Returns (alpha, f_new, g_new) or None when no acceptable step is found.
    """
    phi0 = fx
    dphi0 = float(g @ p)
    if dphi0 >= 0:
        return None

    def phi(a):
        fa, ga = f(x + a * p)
        return fa, float(ga @ p), ga

    def zoom(alo, ahi, flo, dlo):
        result = None
        for _ in range(_LS_MAX_EVALS):
            aj = 0.5 * (alo + ahi)             # guarded bisection
            if abs(ahi - alo) < 1e-16:
                break
            fj, dj, gj = phi(aj)
            if fj > phi0 + WOLFE_C1 * aj * dphi0 or fj >= flo:
                ahi = aj
            else:
                if abs(dj) <= -WOLFE_C2 * dphi0:
                    result = (aj, fj, gj)
                    break
                if dj * (ahi - alo) >= 0:
                    ahi = alo
                alo, flo, dlo = aj, fj, dj
        return result

    a_prev, f_prev, d_prev = 0.0, phi0, dphi0
    a = a_init
    for it in range(_LS_MAX_EVALS):
        fa, da, ga = phi(a)
        if fa > phi0 + WOLFE_C1 * a * dphi0 or (it > 0 and fa >= f_prev):
            return zoom(a_prev, a, f_prev, d_prev)
        if abs(da) <= -WOLFE_C2 * dphi0:
            return a, fa, ga
        if da >= 0:
            return zoom(a, a_prev, fa, da)
        a_prev, f_prev, d_prev = a, fa, da
        a = min(2.0 * a, 1e3)
    return None


def minimize_bfgs(f_and_grad, x0, opts: OptimOptions = OptimOptions()) -> OptimizationResult:
    """BFGS with curvature-guarded rank-2 inverse-Hessian updates."""
    f = _Counter(f_and_grad)
    x = np.asarray(x0, dtype=np.float64).copy()
    fx, g = f(x)
    n = len(x)
    if np.max(np.abs(g)) < opts.grad_tol:
        return OptimizationResult(x, fx, 0, f.nfev, "grad_tol")
    H = np.eye(n)
    converged_by = "max_iters"
    iterations = 0
    for k in range(1, opts.max_iters + 1):
        p = -H @ g
        # until H carries curvature (k=1: H=I, steepest descent) scale the
        # trial step so the first probe stays a unit move at most
        a0 = 1.0 if k > 1 else min(1.0, 1.0 / max(np.linalg.norm(p), 1.0))
        step = _wolfe_line_search(f, x, p, fx, g, a0)
        if step is None:
            iterations = k
            converged_by = "param_tol"  # no admissible step: stalled
            break
        alpha, f_new, g_new = step
        s = alpha * p
        x = x + s
        y = g_new - g
        fx, g = f_new, g_new
        iterations = k
        if np.max(np.abs(g)) < opts.grad_tol:
            converged_by = "grad_tol"
            break
        if np.max(np.abs(s)) < opts.param_tol:
            converged_by = "param_tol"
            break
        ys = float(y @ s)
        if ys > CURVATURE_MIN:
            if k == 1:
                H = (ys / float(y @ y)) * np.eye(n)
            rho = 1.0 / ys
            V = np.eye(n) - rho * np.outer(s, y)
            H = V @ H @ V.T + rho * np.outer(s, s)
            if __debug__:
                np.linalg.cholesky(H + 1e-14 * np.eye(n))  # SPD invariant
    return OptimizationResult(x, fx, iterations, f.nfev, converged_by)


def minimize_adam(f_and_grad, x0, opts: OptimOptions = OptimOptions()) -> OptimizationResult:
    """Adam (beta 0.9/0.999, eps 1e-8) with reduce-on-plateau learning rate.

    The learning rate is multiplied by adam_lr_factor after adam_patience
    consecutive iterations without loss improvement.
    """
    beta1, beta2, eps = 0.9, 0.999, 1e-8
    f = _Counter(f_and_grad)
    x = np.asarray(x0, dtype=np.float64).copy()
    fx, g = f(x)
    if np.max(np.abs(g)) < opts.grad_tol:
        return OptimizationResult(x, fx, 0, f.nfev, "grad_tol")
    m = np.zeros_like(x)
    v = np.zeros_like(x)
    lr = opts.adam_lr0
    best = fx
    stall = 0
    converged_by = "max_iters"
    iterations = 0
    for k in range(1, opts.max_iters + 1):
        m = beta1 * m + (1 - beta1) * g
        v = beta2 * v + (1 - beta2) * g * g
        mhat = m / (1 - beta1 ** k)
        vhat = v / (1 - beta2 ** k)
        s = -lr * mhat / (np.sqrt(vhat) + eps)
        x = x + s
        fx, g = f(x)
        iterations = k
        if fx < best:
            best = fx
            stall = 0
        else:
            stall += 1
            if stall >= opts.adam_patience:
                lr *= opts.adam_lr_factor
                stall = 0
        if np.max(np.abs(g)) < opts.grad_tol:
            converged_by = "grad_tol"
            break
        if np.max(np.abs(s)) < opts.param_tol:
            converged_by = "param_tol"
            break
    return OptimizationResult(x, fx, iterations, f.nfev, converged_by)


def minimize_hybrid(f_and_grad, x0, opts: OptimOptions = OptimOptions()) -> OptimizationResult:
    """Adam until its own termination, then BFGS fine-tuning from Adam's x."""
    r1 = minimize_adam(f_and_grad, x0, opts)
    r2 = minimize_bfgs(f_and_grad, r1.x, opts)
    return OptimizationResult(r2.x, r2.loss,
                              r1.iterations + r2.iterations,
                              r1.function_evals + r2.function_evals,
                              r2.converged_by)
