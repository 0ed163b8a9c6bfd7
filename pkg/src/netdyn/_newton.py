"""Damped Newton iteration with finite-difference Jacobians.

Shared by the implicit stepper and the fixpoint helpers. The linear
solves use lstsq on purpose: phase-shift families (every Kuramoto
fixpoint drags a global rotation along) make the Jacobian singular, and
the minimum-norm step is the natural choice there.
"""

import numpy as np


class ConvergenceError(RuntimeError):
    """Newton iteration failed to reach the requested residual."""


_SQRT_EPS = np.sqrt(np.finfo(float).eps)


def fd_jacobian(fn, x):
    """Central-difference Jacobian of ``fn`` at ``x``.

    Perturbation per column is ``sqrt(eps) * max(|x_k|, 1)``.
    """
    n = x.size
    delta = _SQRT_EPS * np.maximum(np.abs(x), 1.0)
    cols = []
    xp = x.copy()
    for k in range(n):
        dk = delta[k]
        xp[k] = x[k] + dk
        fp = np.asarray(fn(xp), dtype=float)
        xp[k] = x[k] - dk
        fm = np.asarray(fn(xp), dtype=float)
        xp[k] = x[k]
        cols.append((fp - fm) / (2.0 * dk))
    return np.column_stack(cols)


def damped_newton(fn, x0, tol=1e-10, max_iter=100, max_halvings=10):
    """Solve ``fn(x) = 0`` by Newton steps with residual-based damping.

    Every step is halved until the max-abs residual decreases (up to
    ``max_halvings`` times; the last trial is taken regardless so a
    temporary plateau cannot wedge the iteration). Convergence is
    declared on ``max|fn(x)| <= tol``.
    """
    x = np.array(x0, dtype=float)
    F = np.asarray(fn(x), dtype=float)
    res = _resnorm(F)
    for _ in range(max_iter):
        if res <= tol:
            return x
        if not np.isfinite(res):
            raise ConvergenceError(f"non-finite residual {res}")
        J = fd_jacobian(fn, x)
        step = np.linalg.lstsq(J, -F, rcond=None)[0]
        lam = 1.0
        for _ in range(max_halvings + 1):
            xn = x + lam * step
            Fn = np.asarray(fn(xn), dtype=float)
            rn = _resnorm(Fn)
            if rn < res:
                break
            lam *= 0.5
        x, F, res = xn, Fn, rn
    if res <= tol:
        return x
    raise ConvergenceError(
        f"no convergence after {max_iter} iterations, residual {res:.3e}")


def _resnorm(F):
    if F.size == 0:
        return 0.0
    m = np.max(np.abs(F))
    return m if np.isfinite(m) else np.inf
