"""Fixed points and consistent initial conditions.

Both helpers treat the network as autonomous and evaluate it at t = 0;
pass a different ``t`` if the right-hand side actually depends on it.
"""

import numpy as np

from . import network as _net
from ._newton import damped_newton


def find_fixpoint(nf, u_guess=None, p=None, t=0.0, tol=1e-10, max_iter=100):
    """Solve ``f(u, p, t) = 0`` for a steady state of the full network.

    Algebraic rows participate like any other residual component, so
    the result satisfies the constraints as well. The Newton steps use
    a minimum-norm linear solve, which keeps phase-shift degeneracies
    (global rotations of oscillator networks) from blowing up.

    Parameters
    ----------
    nf : NetworkFunction
    u_guess : array-like, optional
        Starting point; zeros when omitted.
    p : parameters, as accepted by ``evaluate_rhs``.
    tol : float
        Max-abs residual bound for convergence.

    Returns
    -------
    ndarray
        A state with residual at most ``tol``.
    """
    dim = nf.dim
    if u_guess is None:
        x0 = np.zeros(dim)
    else:
        x0 = np.array(u_guess, dtype=float)
        if x0.size != dim:
            raise ValueError(f"guess has {x0.size} entries, expected {dim}")
    buf = np.empty(dim)

    def resid(x):
        _net.evaluate_rhs(nf, buf, x, p, t)
        return buf.copy()

    return damped_newton(resid, x0, tol=tol, max_iter=max_iter)


def find_valid_ic(nf, u_guess, p=None, t=0.0, tol=1e-10, max_iter=100):
    """Repair an initial condition so the algebraic constraints hold.

    Differential coordinates are kept exactly as given; only the
    coordinates owned by static vertices are adjusted until their
    residual rows vanish. With no algebraic rows the guess comes back
    unchanged (as a copy).
    """
    dim = nf.dim
    x = np.array(u_guess, dtype=float)
    if x.size != dim:
        raise ValueError(f"guess has {x.size} entries, expected {dim}")
    alg = np.flatnonzero(nf.mass_diagonal == 0.0)
    if alg.size == 0:
        return x
    buf = np.empty(dim)
    work = x.copy()

    def resid(xa):
        work[alg] = xa
        _net.evaluate_rhs(nf, buf, work, p, t)
        return buf[alg].copy()

    xa = damped_newton(resid, x[alg], tol=tol, max_iter=max_iter)
    x[alg] = xa
    return x
