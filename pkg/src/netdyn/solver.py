"""Time integration for network right-hand sides.

Three entry points:

``integrate_dp5``
    Adaptive Dormand-Prince 5(4) with FSAL, PI-free step control,
    quartic dense output and event handling. Also runs in fixed-step
    mode (``SolverConfig.fixed_dt``) for convergence studies.

``integrate_mass_matrix``
    Fixed-step implicit Euler for systems with a singular diagonal mass
    matrix (static vertices contribute algebraic rows). Inner nonlinear
    solves go through the damped Newton helper.

``integrate_dde``
    Method of steps for constant-lag delay systems. Step sizes are
    capped at the lag and aligned to its multiples; delayed values are
    read back from the dense output already produced, so each segment
    only ever consumes completed segments or the history function.

All three return a ``Solution``. Dense output is kept as a list of
segment objects; ``dense_eval`` looks up and evaluates the right one,
and is the single interpolation code path used both during integration
(delayed reads, event root finding) and afterwards.
"""

import numpy as np

from . import network as _net
from ._newton import ConvergenceError, damped_newton


class SolverError(RuntimeError):
    """Integration aborted (non-finite states, step underflow, Newton failure)."""


# ---------------------------------------------------------------------------
# Dormand-Prince coefficients

_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])

_A = (
    np.array([1 / 5]),
    np.array([3 / 40, 9 / 40]),
    np.array([44 / 45, -56 / 15, 32 / 9]),
    np.array([19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729]),
    np.array([9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656]),
)

_B = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84])

# difference between the 5th and the embedded 4th order weights
_E = np.array([71 / 57600, 0.0, -71 / 16695, 71 / 1920,
               -17253 / 339200, 22 / 525, -1 / 40])

# quartic interpolation weights; u(t0 + x*h) = u0 + h * (K^T P) @ [x, x^2, x^3, x^4]
_P = np.array([
    [1.0, -8048581381 / 2820520608, 8663915743 / 2820520608,
     -12715105075 / 11282082432],
    [0.0, 0.0, 0.0, 0.0],
    [0.0, 131558114200 / 32700410799, -68118460800 / 10900136933,
     87487479700 / 32700410799],
    [0.0, -1754552775 / 470086768, 14199869525 / 1410260304,
     -10690763975 / 1880347072],
    [0.0, 127303824393 / 49829197408, -318862633887 / 49829197408,
     701980252875 / 199316789632],
    [0.0, -282668133 / 205662961, 2019193451 / 616988883,
     -1453857185 / 822651844],
    [0.0, 40617522 / 29380423, -110615467 / 29380423, 69997945 / 29380423],
])


class SolverConfig:
    """Integration settings.

    Parameters
    ----------
    rtol, atol : float
        Relative and absolute tolerance for the error norm.
    dt_init : float
        Initial step size; 0 selects it automatically.
    dt_max : float
        Upper bound on the step size.
    max_steps : int
        Abort after this many step attempts.
    safety, facmin, facmax : float
        Step controller: the accepted-step factor is
        ``clip(safety * err**(-1/5), facmin, facmax)``.
    fixed_dt : float
        If positive, take constant steps of this size and skip error
        control entirely.
    dense : bool
        Keep the interpolation segments on the returned Solution.
    """

    __slots__ = ("rtol", "atol", "dt_init", "dt_max", "max_steps",
                 "safety", "facmin", "facmax", "fixed_dt", "dense")

    def __init__(self, rtol=1e-3, atol=1e-6, dt_init=0.0, dt_max=np.inf,
                 max_steps=1_000_000, safety=0.9, facmin=0.2, facmax=10.0,
                 fixed_dt=0.0, dense=True):
        if rtol <= 0 or atol <= 0:
            raise ValueError("tolerances must be positive")
        if dt_init < 0 or fixed_dt < 0:
            raise ValueError("step sizes must be nonnegative")
        if not dt_max > 0:
            raise ValueError("dt_max must be positive")
        if max_steps < 1:
            raise ValueError("max_steps must be at least 1")
        if not (0 < facmin < 1 < facmax):
            raise ValueError("need facmin < 1 < facmax")
        if not 0 < safety <= 1:
            raise ValueError("safety must be in (0, 1]")
        self.rtol = float(rtol)
        self.atol = float(atol)
        self.dt_init = float(dt_init)
        self.dt_max = float(dt_max)
        self.max_steps = int(max_steps)
        self.safety = float(safety)
        self.facmin = float(facmin)
        self.facmax = float(facmax)
        self.fixed_dt = float(fixed_dt)
        self.dense = bool(dense)


class EventSpec:
    """A batch of scalar event conditions with a shared affect callback.

    ``condition(out, u, t)`` writes one value per condition into ``out``;
    a root of any component triggers ``affect(integrator, index)``. The
    integrator handle exposes ``t``, ``u`` and ``p``; the affect may
    modify ``u`` in place or rebind ``integrator.p``.
    """

    __slots__ = ("n_conditions", "condition", "affect")

    def __init__(self, n_conditions, condition, affect):
        if n_conditions < 1:
            raise ValueError("need at least one condition")
        if not callable(condition) or not callable(affect):
            raise ValueError("condition and affect must be callable")
        self.n_conditions = int(n_conditions)
        self.condition = condition
        self.affect = affect


class IntegratorHandle:
    """What an event affect gets to see and mutate."""

    __slots__ = ("t", "u", "p", "network")

    def __init__(self, t, u, p, net):
        self.t = t
        self.u = u
        self.p = p
        self.network = net


# ---------------------------------------------------------------------------
# Dense output segments

class PolySegment:
    """Quartic interpolant over one accepted DP5 step."""

    __slots__ = ("t0", "t_end", "h", "u0", "Q")

    def __init__(self, t0, t_end, h, u0, Q):
        self.t0 = t0
        self.t_end = t_end
        self.h = h
        self.u0 = u0
        self.Q = Q

    def eval(self, t, out=None):
        x = (t - self.t0) / self.h
        powers = np.array([x, x * x, x * x * x, x * x * x * x])
        val = self.u0 + self.h * (self.Q @ powers)
        if out is None:
            return val
        np.copyto(out, val)
        return out


class LinearSegment:
    """Linear interpolant over one implicit Euler step."""

    __slots__ = ("t0", "t_end", "u0", "u1")

    def __init__(self, t0, t_end, u0, u1):
        self.t0 = t0
        self.t_end = t_end
        self.u0 = u0
        self.u1 = u1

    def eval(self, t, out=None):
        w = (t - self.t0) / (self.t_end - self.t0)
        val = self.u0 + w * (self.u1 - self.u0)
        if out is None:
            return val
        np.copyto(out, val)
        return out


def _segment_index(segments, t):
    # rightmost segment whose t0 is <= t; clamps at the ends
    lo, hi = 0, len(segments) - 1
    while lo < hi:
        mid = (lo + hi + 1) // 2
        if segments[mid].t0 <= t:
            lo = mid
        else:
            hi = mid - 1
    return lo


def dense_eval(segments, t, out=None):
    """Evaluate the dense output at time ``t``.

    ``segments`` is an ordered segment list as stored on a Solution.
    This is the one interpolation path in the package; delayed reads
    during DDE integration go through exactly this function.
    """
    if not segments:
        raise ValueError("no dense output segments")
    return segments[_segment_index(segments, t)].eval(t, out)


class Solution:
    """Integration result: accepted times, states, dense output, events.

    Attributes
    ----------
    t : ndarray, shape (n_out,)
        Accepted output times, strictly increasing.
    u : ndarray, shape (n_out, dim)
        States at those times, one row per time.
    symbols : tuple of str or None
        Per-coordinate names when the right-hand side provides them.
    segments : list or None
        Dense output segments (None when dense output was disabled).
    events : list of (t, index)
        Every event that fired, in order.
    """

    def __init__(self, t, u, symbols=None, segments=None, events=None):
        self.t = np.asarray(t, dtype=float)
        self.u = np.asarray(u, dtype=float)
        self.symbols = symbols
        self.segments = segments
        self.events = events if events is not None else []

    @property
    def final(self):
        return self.u[-1]

    def interpolate(self, t):
        """State at time ``t`` (scalar or array-like).

        A stored output time returns the stored row bitwise; anything
        else is evaluated from the dense output.
        """
        tq = np.atleast_1d(np.asarray(t, dtype=float))
        out = np.empty((tq.size, self.u.shape[1]))
        for i, ti in enumerate(tq):
            idx = np.searchsorted(self.t, ti)
            if idx < self.t.size and self.t[idx] == ti:
                out[i] = self.u[idx]
                continue
            if self.segments is None:
                raise ValueError(
                    "dense output was disabled; only stored times are available")
            if ti < self.t[0] or ti > self.t[-1]:
                raise ValueError(f"time {ti} outside the solved span")
            dense_eval(self.segments, ti, out=out[i])
        if np.isscalar(t) or np.asarray(t).ndim == 0:
            return out[0]
        return out

    def to_csv(self, path, times=None):
        """Write ``t`` plus one column per coordinate as CSV."""
        if times is None:
            tt, uu = self.t, self.u
        else:
            tt = np.atleast_1d(np.asarray(times, dtype=float))
            uu = self.interpolate(tt)
        names = self.symbols
        if names is None:
            names = tuple(f"u_{i}" for i in range(self.u.shape[1]))
        with open(path, "w") as fh:
            fh.write("t," + ",".join(names) + "\n")
            for k in range(tt.size):
                row = ",".join(f"{v:.17g}" for v in uu[k])
                fh.write(f"{tt[k]:.17g},{row}\n")


# ---------------------------------------------------------------------------
# Event detection

def detect_events(segment, events, g_left=None, g_right=None):
    """Earliest event root inside one step, or None.

    Sign changes are judged between the endpoint condition values
    (evaluated from the segment when not supplied); an exact zero on the
    right endpoint fires there, an exact zero on the left is skipped (it
    already fired when it was a right endpoint). Roots are localised by
    bisection on the dense segment to an absolute tolerance of
    ``1e-10 * max(1, |t|)``.
    """
    if g_left is None:
        g_left = np.empty(events.n_conditions)
        events.condition(g_left, segment.eval(segment.t0), segment.t0)
    if g_right is None:
        g_right = np.empty(events.n_conditions)
        events.condition(g_right, segment.eval(segment.t_end), segment.t_end)
    best = None
    buf = np.empty(events.n_conditions)
    for i in range(events.n_conditions):
        gl = g_left[i]
        gr = g_right[i]
        if gl == 0.0:
            continue
        if gr == 0.0:
            ti = segment.t_end
        elif (gl > 0.0) != (gr > 0.0):
            ti = _bisect_root(segment, events, i, gl, buf)
        else:
            continue
        if best is None or ti < best[0]:
            best = (ti, i)
    return best


def _bisect_root(segment, events, i, g_left_i, buf):
    ta, tb = segment.t0, segment.t_end
    tol = 1e-10 * max(1.0, abs(tb))
    left_pos = g_left_i > 0.0
    while tb - ta > tol:
        tm = 0.5 * (ta + tb)
        events.condition(buf, segment.eval(tm), tm)
        gm = buf[i]
        if gm == 0.0 or (gm > 0.0) != left_pos:
            tb = tm
        else:
            ta = tm
    return tb


def _apply_event(nf, events, p, te, u_event, idx, event_log):
    handle = IntegratorHandle(te, u_event, p, nf)
    events.affect(handle, idx)
    event_log.append((te, idx))
    return np.asarray(handle.u, dtype=float), handle.p


# ---------------------------------------------------------------------------
# DP5 core

def _initial_step(f, u0, f0, p, t0, cfg, scratch, hmax):
    # Hairer/Norsett/Wanner starting-step heuristic for order 5; the
    # probe stays inside hmax so capped problems (delays) never read
    # past what exists
    sc = cfg.atol + cfg.rtol * np.abs(u0)
    d0 = _rms(u0 / sc)
    d1 = _rms(f0 / sc)
    h0 = 1e-6 if (d0 < 1e-5 or d1 < 1e-5) else 0.01 * d0 / d1
    h0 = min(h0, hmax)
    u1 = u0 + h0 * f0
    f(scratch, u1, p, t0 + h0)
    d2 = _rms((scratch - f0) / sc) / h0
    if max(d1, d2) <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** 0.2
    return min(100 * h0, h1)


def _rms(v):
    return float(np.sqrt(np.mean(v * v)))


def _dp5_core(f, u0, tspan, p, cfg, events, symbols, nf=None,
              h_cap=None, segments=None):
    t0, t1 = float(tspan[0]), float(tspan[1])
    if not t1 > t0:
        raise ValueError("tspan must satisfy t1 > t0")
    u = np.array(u0, dtype=float)
    if u.ndim != 1:
        raise ValueError("initial state must be one-dimensional")
    dim = u.size
    span = t1 - t0

    keep_dense = cfg.dense or segments is not None
    segs = segments if segments is not None else ([] if cfg.dense else None)
    need_seg = keep_dense or events is not None

    K = np.empty((7, dim))
    ts = [t0]
    us = [u.copy()]
    event_log = []

    t = t0
    f(K[0], u, p, t)
    fixed = cfg.fixed_dt > 0.0
    if fixed:
        h = cfg.fixed_dt
    elif cfg.dt_init > 0.0:
        h = cfg.dt_init
    else:
        hmax = min(cfg.dt_max, span)
        if h_cap is not None:
            hmax = min(hmax, h_cap(t))
        h = _initial_step(f, u, K[0], p, t, cfg, K[1], hmax)
    h = min(h, cfg.dt_max, span)

    if events is not None:
        g_left = np.empty(events.n_conditions)
        g_right = np.empty(events.n_conditions)
        events.condition(g_left, u, t)

    nsteps = 0
    while t < t1:
        nsteps += 1
        if nsteps > cfg.max_steps:
            raise SolverError(f"max_steps exceeded at t={t}")
        if fixed:
            h = cfg.fixed_dt
        h = min(h, cfg.dt_max, t1 - t)
        if h_cap is not None:
            h = min(h, h_cap(t))
        if t + h >= t1 - 1e-12 * span:
            h = t1 - t
            t_new = t1
        else:
            t_new = t + h
        if h <= 1e-14 * max(1.0, abs(t)):
            raise SolverError(f"step size underflow at t={t}")

        for s in range(1, 6):
            f(K[s], u + h * (_A[s - 1] @ K[:s]), p, t + _C[s] * h)
        u_new = u + h * (_B @ K[:6])
        f(K[6], u_new, p, t_new)

        if not fixed:
            err = h * (_E @ K)
            sc = cfg.atol + cfg.rtol * np.maximum(np.abs(u), np.abs(u_new))
            enorm = _rms(err / sc)
            if not np.isfinite(enorm):
                raise SolverError(f"non-finite error estimate at t={t}")
            if enorm > 1.0:
                h *= max(cfg.facmin, cfg.safety * enorm ** -0.2)
                continue

        seg = None
        if need_seg:
            Q = K.T @ _P
            seg = PolySegment(t, t_new, h, u, Q)

        if events is not None:
            events.condition(g_right, u_new, t_new)
            hit = detect_events(seg, events, g_left, g_right)
            if hit is not None:
                te, idx = hit
                u_event = seg.eval(te)
                seg.t_end = te
                if keep_dense:
                    segs.append(seg)
                u, p = _apply_event(nf, events, p, te, u_event, idx, event_log)
                t = te
                ts.append(t)
                us.append(u.copy())
                f(K[0], u, p, t)  # FSAL invalidated by the affect
                events.condition(g_left, u, t)
                continue
            np.copyto(g_left, g_right)

        if keep_dense:
            segs.append(seg)
        ts.append(t_new)
        us.append(u_new)
        np.copyto(K[0], K[6])
        t = t_new
        u = u_new
        if not fixed:
            if enorm == 0.0:
                h *= cfg.facmax
            else:
                h *= min(cfg.facmax, max(cfg.facmin,
                                         cfg.safety * enorm ** -0.2))

    return Solution(ts, np.array(us), symbols=symbols,
                    segments=segs if keep_dense else None,
                    events=event_log)


def _rhs_symbols(nf):
    return getattr(nf, "symbols", None)


def integrate_dp5(nf, u0, tspan, p=None, config=None, events=None):
    """Integrate ``du = f(u, p, t)`` with adaptive Dormand-Prince 5(4).

    Parameters
    ----------
    nf : callable
        Right-hand side with in-place signature ``f(du, u, p, t)``.
        NetworkFunction instances are called directly; any plain
        callable with that signature works too.
    u0 : array-like
        Initial state.
    tspan : (t0, t1)
        Integration interval, ``t1 > t0``.
    p : parameters forwarded to the right-hand side.
    config : SolverConfig, optional
    events : EventSpec, optional

    Returns
    -------
    Solution
    """
    cfg = config if config is not None else SolverConfig()
    mass = getattr(nf, "mass_diagonal", None)
    if mass is not None and np.any(mass == 0.0):
        raise ValueError(
            "system has algebraic constraints; use integrate_mass_matrix")
    if getattr(nf, "has_delay_edges", False):
        raise ValueError("system has delay edges; use integrate_dde")
    return _dp5_core(nf, u0, tspan, p, cfg, events, _rhs_symbols(nf), nf=nf)


# ---------------------------------------------------------------------------
# Implicit Euler with a diagonal mass matrix

def _implicit_core(rhs_vec, u0, tspan, p, mass, cfg, events, symbols, nf,
                   h_limit, segments=None):
    t0, t1 = float(tspan[0]), float(tspan[1])
    if not t1 > t0:
        raise ValueError("tspan must satisfy t1 > t0")
    u = np.array(u0, dtype=float)
    span = t1 - t0
    if mass is None:
        mass = np.ones(u.size)
    mass = np.asarray(mass, dtype=float)

    if cfg.fixed_dt > 0.0:
        hmax = min(h_limit, cfg.fixed_dt)
    else:
        hmax = min(h_limit, cfg.dt_max)
    if not np.isfinite(hmax):
        hmax = 1e-2
    h = span / int(np.ceil(span / hmax))

    keep_dense = cfg.dense or segments is not None
    segs = segments if segments is not None else ([] if cfg.dense else None)
    diff_row = mass == 1.0

    ts = [t0]
    us = [u.copy()]
    event_log = []
    if events is not None:
        g_left = np.empty(events.n_conditions)
        g_right = np.empty(events.n_conditions)
        events.condition(g_left, u, t0)

    t = t0
    nsteps = 0
    while t < t1:
        nsteps += 1
        if nsteps > cfg.max_steps:
            raise SolverError(f"max_steps exceeded at t={t}")
        t_next = min(t + h, t1)
        if t1 - t_next < 1e-12 * span:
            t_next = t1
        hstep = t_next - t
        # differential rows advance by hstep; algebraic rows keep the
        # raw residual so the Newton tolerance bounds it directly
        hv = np.where(diff_row, hstep, 1.0)
        u_prev = u

        def resid(x, _t=t_next, _up=u_prev, _hv=hv, _p=p):
            fx = rhs_vec(x, _p, _t)
            return mass * (x - _up) - _hv * fx

        try:
            u_next = damped_newton(resid, u, tol=1e-10, max_iter=25)
        except ConvergenceError as exc:
            raise SolverError(
                f"implicit step {nsteps} failed at t={t_next}: {exc}")

        seg = None
        if keep_dense or events is not None:
            seg = LinearSegment(t, t_next, u_prev, u_next)

        if events is not None:
            events.condition(g_right, u_next, t_next)
            hit = detect_events(seg, events, g_left, g_right)
            if hit is not None:
                te, idx = hit
                u_event = seg.eval(te)
                seg.t_end = te
                seg.u1 = u_event
                if keep_dense:
                    segs.append(seg)
                u, p = _apply_event(nf, events, p, te, u_event,
                                    idx, event_log)
                t = te
                ts.append(t)
                us.append(u.copy())
                events.condition(g_left, u, t)
                continue
            np.copyto(g_left, g_right)

        if keep_dense:
            segs.append(seg)
        ts.append(t_next)
        us.append(u_next)
        t = t_next
        u = u_next

    return Solution(ts, np.array(us), symbols=symbols,
                    segments=segs if keep_dense else None,
                    events=event_log)


def integrate_mass_matrix(nf, u0, tspan, p=None, config=None, events=None):
    """Implicit Euler for systems with algebraic rows (zero mass entries).

    Steps are fixed at ``(t1 - t0) / ceil((t1 - t0) / hmax)`` where hmax
    is ``config.dt_max`` when finite (``config.fixed_dt`` wins if set),
    1e-2 otherwise. Each step solves the nonlinear system

        M (x - u_n) - hv * f(x, p, t_{n+1}) = 0

    with ``hv`` equal to the step size on differential rows and 1 on
    algebraic rows, so the Newton tolerance of 1e-10 bounds the
    constraint residual itself.
    """
    if getattr(nf, "has_delay_edges", False):
        raise ValueError("system has delay edges; use integrate_dde")
    cfg = config if config is not None else SolverConfig()
    mass = getattr(nf, "mass_diagonal", None)
    dim = np.asarray(u0).size
    buf = np.empty(dim)

    def rhs_vec(x, pp, t):
        nf(buf, x, pp, t)
        return buf.copy()

    return _implicit_core(rhs_vec, u0, tspan, p, mass, cfg, events,
                          _rhs_symbols(nf), nf, h_limit=np.inf)


# ---------------------------------------------------------------------------
# Delay differential equations, method of steps

def integrate_dde(nf, u0, history, tspan, tau, p=None, config=None,
                  events=None):
    """Method-of-steps integration for constant-lag delay systems.

    Parameters
    ----------
    nf : NetworkFunction
        Must contain at least one delay edge.
    history : callable
        ``history(t) -> state vector`` for ``t <= t0``.
    tau : float
        The (single, constant) lag, strictly positive.

    Steps are capped at ``tau`` and aligned to ``t0 + k*tau`` so no step
    spans a derivative discontinuity propagated from the history. Every
    delayed read either hits the history (``t - tau <= t0``) or the
    dense output of already-completed segments, through the same
    ``dense_eval`` used for interpolation after the fact. Systems that
    also carry algebraic constraints fall back to the implicit Euler
    stepper with linear interpolation for the delayed reads.
    """
    if not tau > 0:
        raise ValueError("tau must be positive")
    if not callable(history):
        raise ValueError("history must be callable")
    if not getattr(nf, "has_delay_edges", False):
        raise ValueError("system has no delay edges; use integrate_dp5")
    cfg = config if config is not None else SolverConfig()
    t0 = float(tspan[0])
    dim = nf.dim
    u0 = np.asarray(u0, dtype=float)
    if u0.size != dim:
        raise ValueError(f"initial state has {u0.size} entries, expected {dim}")

    segs = []
    del_buf = np.empty(dim)

    def delayed_state(time):
        if time <= t0:
            np.copyto(del_buf, history(time))
        else:
            if not segs or time > segs[-1].t_end + 1e-9 * max(1.0, abs(time)):
                raise SolverError(
                    f"delayed read at t={time} beyond computed history")
            dense_eval(segs, time, out=del_buf)
        return del_buf

    mass = nf.mass_diagonal
    if np.any(mass == 0.0):
        buf = np.empty(dim)

        def rhs_vec(x, pp, t):
            _net.evaluate_rhs_delayed(nf, buf, x, delayed_state(t - tau),
                                      pp, t)
            return buf.copy()

        return _implicit_core(rhs_vec, u0, tspan, p, mass, cfg, events,
                              nf.symbols, nf, h_limit=tau, segments=segs)

    def f(du, u, pp, time):
        _net.evaluate_rhs_delayed(nf, du, u, delayed_state(time - tau),
                                  pp, time)

    def h_cap(t):
        # distance to the next multiple of the lag, so stage times in
        # (t, t+h] never read past what has been computed; a sliver
        # left by accumulated roundoff counts as already on the edge
        k = np.floor((t - t0) / tau) + 1.0
        c = t0 + k * tau - t
        if c <= 1e-6 * tau:
            c += tau
        return min(tau, c)

    return _dp5_core(f, u0, tspan, p, cfg, events, nf.symbols, nf=nf,
                     h_cap=h_cap, segments=segs)
