"""Kuramoto work-precision benchmark on Watts-Strogatz graphs.

Runs the same instances through two right-hand-side backends:

``assembled``
    The component-assembled NetworkFunction (compiled engine).

``incidence``
    The textbook sparse form du = omega - sigma * B @ sin(B.T @ theta)
    built on the oriented incidence matrix.

For every repetition a fresh graph and fresh initial data are drawn,
one high-accuracy reference trajectory is computed, and each tolerance
ladder entry is timed and scored against that reference. Timing covers
the integrate call only, as process CPU time; the compiled kernel is
warmed up beforehand so compilation never lands in a measurement.
Benchmarks are meant to run single-threaded; the parallel RHS mode is
never enabled here.

The error column is the Euclidean norm of the final-state difference
at the end of the span, normalized by sqrt(D).
"""

import time

import numpy as np
from numba import njit

from . import graphs as _graphs
from . import network as _net
from . import solver as _solver
from .components import (ANTISYMMETRIC, make_ode_vertex, make_static_vertex,
                         make_static_edge)

SIGMA = 5.0
TSPAN = (0.0, 10.0)
REF_RTOL = 1e-12
REF_ATOL = 1e-14

CSV_HEADER = "n_nodes,backend,rtol,atol,error,cpu_ms_per_node,rep,seed"


@njit(cache=True)
def _kuramoto_edge_f(e, v_s, v_d, p, t):
    e[0] = p * np.sin(v_s[0] - v_d[0])


@njit(cache=True)
def _kuramoto_vertex_f(dv, v, edges, p, t):
    acc = 0.0
    for e in edges:
        acc += e[0]
    dv[0] = p + acc


def _inertia_vertex_f(dv, v, edges, p, t):
    acc = 0.0
    for e in edges:
        acc += e[0]
    dv[0] = v[1]
    dv[1] = p - v[1] + acc


def _pinned_vertex_f(target, edges, p, t):
    target[0] = p


def kuramoto_models():
    """The per-component building blocks of the benchmark system.

    The sine coupling is declared antisymmetric, so each edge function
    runs once per edge and the reversed half is the negation.
    """
    vertex = make_ode_vertex(_kuramoto_vertex_f, 1, symbols=("theta",))
    edge = make_static_edge(_kuramoto_edge_f, 1, coupling=ANTISYMMETRIC)
    return vertex, edge


def deterministic_frequencies(n):
    """Evenly spread, zero-mean frequencies: (i - (n+1)/2) / n for i = 1..n."""
    return (np.arange(1, n + 1) - (n + 1) / 2.0) / n


def build_kuramoto(n, graph, variant="first_order", index=None, rng=None):
    """Assemble a Kuramoto network plus its frequencies and initial state.

    Parameters
    ----------
    n : int
        Number of oscillators; must match the graph.
    graph : Graph
    variant : {"first_order", "with_inertia_at", "static_at"}
        ``with_inertia_at`` swaps the vertex at ``index`` for a
        second-order (inertia) oscillator, ``static_at`` pins it to a
        constant angle (its frequency slot becomes the target value).
    index : int, optional
        Vertex position for the non-uniform variants.
    rng : numpy Generator, optional
        When given, omega then x0 are drawn uniform on [-pi, pi] (in
        that order). Otherwise both equal the deterministic spread from
        ``deterministic_frequencies``.

    Returns
    -------
    (NetworkFunction, omega, x0)
        Call the network with ``p = (omega, sigma)``. The inertia
        variant inserts the velocity coordinate (initial value 3.0)
        into x0, so its length is the state dimension, not n.
    """
    if graph.n_vertices != n:
        raise ValueError(f"graph has {graph.n_vertices} vertices, expected {n}")
    base_vertex, edge = kuramoto_models()
    if rng is None:
        omega = deterministic_frequencies(n)
        x0 = omega.copy()
    else:
        omega = rng.uniform(-np.pi, np.pi, n)
        x0 = rng.uniform(-np.pi, np.pi, n)

    if variant == "first_order":
        vertices = base_vertex
    elif variant in ("with_inertia_at", "static_at"):
        if index is None or not 0 <= index < n:
            raise ValueError(f"variant {variant} needs a vertex index in [0, {n})")
        vertices = [base_vertex] * n
        if variant == "with_inertia_at":
            vertices[index] = make_ode_vertex(
                _inertia_vertex_f, 2, symbols=("theta", "omega"))
        else:
            vertices[index] = make_static_vertex(
                _pinned_vertex_f, 1, symbols=("theta",))
    else:
        raise ValueError(f"unknown variant {variant!r}")

    nf = _net.network_dynamics(vertices, edge, graph)
    if variant == "with_inertia_at":
        x0 = np.insert(x0, index + 1, 3.0)
    return nf, omega, x0


def incidence_rhs(B, omega, sigma):
    """RHS callable computing omega - sigma * B @ sin(B.T @ theta).

    ``B`` is the sparse oriented incidence matrix of the graph; the
    returned callable has the in-place ``f(du, theta, p, t)`` signature
    the solvers expect (p is ignored, everything is baked in).
    """
    B = B.tocsr()
    Bt = B.T.tocsr()
    omega = np.asarray(omega, dtype=float)
    if B.shape[0] != omega.size:
        raise ValueError(
            f"incidence matrix has {B.shape[0]} rows, omega has {omega.size}")
    sigma = float(sigma)

    def f(du, theta, p, t):
        np.copyto(du, omega)
        du -= sigma * (B @ np.sin(Bt @ theta))

    return f


_LADDER = tuple((10.0 ** -k, 10.0 ** -k * 1e-2) for k in range(3, 10))


class BenchConfig:
    """Work-precision run settings.

    The tolerance ladder is a sequence of (rtol, atol) pairs with
    strictly decreasing rtol; the default walks 1e-3 down to 1e-9 in
    decades with atol = rtol / 100.
    """

    __slots__ = ("nodes", "degree", "rewire", "tols", "reps", "seed",
                 "backend", "out", "graph_out")

    def __init__(self, nodes=(10, 100, 1000), degree=4, rewire=0.2,
                 tols=_LADDER, reps=10, seed=42, backend="both",
                 out="wpd.csv", graph_out=None):
        nodes = tuple(int(n) for n in nodes)
        if not nodes or any(n < 1 for n in nodes):
            raise ValueError("nodes must be a nonempty list of positive counts")
        tols = tuple((float(r), float(a)) for r, a in tols)
        if not tols:
            raise ValueError("tolerance ladder must be nonempty")
        rts = [r for r, _ in tols]
        if any(b >= a for a, b in zip(rts, rts[1:])):
            raise ValueError("tolerance ladder must have decreasing rtol")
        if any(r <= 0 or a <= 0 for r, a in tols):
            raise ValueError("tolerances must be positive")
        if backend not in ("assembled", "incidence", "both"):
            raise ValueError(f"unknown backend {backend!r}")
        if reps < 1:
            raise ValueError("reps must be at least 1")
        self.nodes = nodes
        self.degree = int(degree)
        self.rewire = float(rewire)
        self.tols = tols
        self.reps = int(reps)
        self.seed = int(seed)
        self.backend = backend
        self.out = out
        self.graph_out = graph_out


def _graph_out_path(path, n, multiple):
    if not multiple:
        return path
    if "." in path.rsplit("/", 1)[-1]:
        stem, ext = path.rsplit(".", 1)
        return f"{stem}_n{n}.{ext}"
    return f"{path}_n{n}"


def run_wpd(cfg, verbose=False):
    """Run the work-precision sweep and return one dict per CSV row.

    Per repetition: fresh graph (seed + rep), fresh omega/x0, one
    shared reference trajectory, then every (backend, tolerance) cell.
    A solver failure inside a cell is recorded as error = NaN rather
    than aborting the sweep.
    """
    if cfg.backend == "both":
        backends = ("assembled", "incidence")
    else:
        backends = (cfg.backend,)
    rows = []
    for n in cfg.nodes:
        for rep in range(cfg.reps):
            seed_r = cfg.seed + rep
            g = _graphs.watts_strogatz(n, cfg.degree, cfg.rewire, seed_r)
            if cfg.graph_out is not None and rep == 0:
                _graphs.save_edge_list(
                    g, _graph_out_path(cfg.graph_out, n, len(cfg.nodes) > 1))
            rng = np.random.default_rng((seed_r, 1))
            nf, omega, x0 = build_kuramoto(n, g, rng=rng)
            p = (omega, SIGMA)

            # warm the compiled kernel so JIT time stays out of the clocks
            scratch = np.empty(nf.dim)
            _net.evaluate_rhs(nf, scratch, x0, p, 0.0)

            ref_cfg = _solver.SolverConfig(rtol=REF_RTOL, atol=REF_ATOL,
                                           dense=False)
            ref = _solver.integrate_dp5(nf, x0, TSPAN, p=p,
                                        config=ref_cfg).final
            f_inc = incidence_rhs(_graphs.oriented_incidence(g), omega, SIGMA)

            for backend in backends:
                rhs = nf if backend == "assembled" else f_inc
                pp = p if backend == "assembled" else None
                for rtol, atol in cfg.tols:
                    scfg = _solver.SolverConfig(rtol=rtol, atol=atol,
                                                dense=False)
                    try:
                        c0 = time.process_time()
                        sol = _solver.integrate_dp5(rhs, x0, TSPAN, p=pp,
                                                    config=scfg)
                        c1 = time.process_time()
                        err = float(np.linalg.norm(sol.final - ref)
                                    / np.sqrt(nf.dim))
                        ms = (c1 - c0) * 1e3 / n
                    except _solver.SolverError:
                        err = float("nan")
                        ms = float("nan")
                    rows.append({
                        "n_nodes": n, "backend": backend, "rtol": rtol,
                        "atol": atol, "error": err, "cpu_ms_per_node": ms,
                        "rep": rep, "seed": seed_r,
                    })
            if verbose:
                print(f"  n={n} rep={rep} done")
    return rows


def write_csv(rows, path):
    with open(path, "w") as fh:
        fh.write(CSV_HEADER + "\n")
        for r in rows:
            fh.write(f"{r['n_nodes']},{r['backend']},{r['rtol']:g},"
                     f"{r['atol']:g},{r['error']:.12g},"
                     f"{r['cpu_ms_per_node']:.6g},{r['rep']},{r['seed']}\n")
    return path


def median_summary(rows):
    """Median cpu_ms_per_node per (n_nodes, backend, rtol) cell."""
    cells = {}
    for r in rows:
        cells.setdefault((r["n_nodes"], r["backend"], r["rtol"]), []).append(
            r["cpu_ms_per_node"])
    out = []
    for key in sorted(cells):
        vals = np.asarray(cells[key])
        out.append((*key, float(np.median(vals))))
    return out
