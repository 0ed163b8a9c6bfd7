"""Assembly of component models over a graph into one flat coupled RHS.

The heavy lifting happens in two loops: loop 1 visits every edge and fills
the edge value cache from the endpoint vertex states, loop 2 visits every
vertex and hands it read-only windows onto the values of its incoming
edges. All offsets, windows and scratch buffers are precomputed when the
network function is built, so a steady-state evaluation performs no
allocations of its own.

Undirected edges carry a doubled value cache. The first half holds the
coupling function evaluated in the stored fiducial orientation
``f(v_src, v_dst)`` and is read by the fiducial destination; the second
half holds the reversed call ``f(v_dst, v_src)`` and is read by the
fiducial source. Symmetric and antisymmetric couplings skip the second
call, the first half is copied, respectively negated, into the second.
"""

import numpy as np

from . import components as comp
from .graphs import Graph

# incoming-window buffer tags
_CACHE = 0
_STATE = 1

# edge program opcodes
_OP_STATIC = 0
_OP_COPY = 1
_OP_NEGATE = 2
_OP_DELAY = 3
_OP_ODE = 4


class GraphStruct:
    """Precomputed index structures mapping components into flat buffers.

    Holds, per vertex, the state offset and dimension plus the list of
    incoming edge windows, and per edge the cache/state offsets, stored
    dimensions and endpoint indices. Immutable after construction in the
    sense that nothing mutates it; plain arrays, no properties.
    """

    def __init__(self, g, vertex_models, edge_models, couplings):
        n = g.n_vertices
        m = g.n_edges
        self.n_vertices = n
        self.n_edges = m
        self.directed = g.directed

        self.v_dim = np.array([vm.dim for vm in vertex_models], dtype=np.int64)
        self.v_off = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(self.v_dim, out=self.v_off[1:])
        self.n_vertex_states = int(self.v_off[n])

        self.src = np.array([e[0] for e in g.edges], dtype=np.int64)
        self.dst = np.array([e[1] for e in g.edges], dtype=np.int64)
        self.e_dim = np.array([em.dim for em in edge_models], dtype=np.int64)

        # dynamic edge states live in u behind the vertex block
        state_dims = np.zeros(m, dtype=np.int64)
        cache_dims = np.zeros(m, dtype=np.int64)
        for j, em in enumerate(edge_models):
            c = couplings[j]
            two = c in (comp.FIDUCIAL, comp.UNDIRECTED)
            if em.kind == comp.ODE:
                state_dims[j] = em.dim * (2 if two else 1)
                # fiducial/directed ODE edges alias their state windows as
                # the cache; mirrored couplings need a real cache
                cache_dims[j] = 2 * em.dim if c in (comp.SYMMETRIC, comp.ANTISYMMETRIC) else 0
            else:
                cache_dims[j] = em.dim if c == comp.DIRECTED else 2 * em.dim
        self.e_state_dim = state_dims
        self.e_state_off = np.zeros(m + 1, dtype=np.int64)
        np.cumsum(state_dims, out=self.e_state_off[1:])
        self.e_state_off += self.n_vertex_states
        self.dim = self.n_vertex_states + int(state_dims.sum())

        self.e_cache_dim = cache_dims
        self.e_cache_off = np.zeros(m + 1, dtype=np.int64)
        np.cumsum(cache_dims, out=self.e_cache_off[1:])
        self.cache_size = int(self.e_cache_off[m])

        # incoming windows per vertex: (tag, offset, dim) triples, where a
        # vertex reads the half for which it acts as the destination of
        # the coupling call
        incoming = [[] for _ in range(n)]
        for j, em in enumerate(edge_models):
            c = couplings[j]
            d = em.dim
            s_v, d_v = int(self.src[j]), int(self.dst[j])
            if em.kind == comp.ODE and c in (comp.DIRECTED, comp.FIDUCIAL, comp.UNDIRECTED):
                base = int(self.e_state_off[j])
                tag = _STATE
            else:
                base = int(self.e_cache_off[j])
                tag = _CACHE
            incoming[d_v].append((tag, base, d))
            if c != comp.DIRECTED:
                incoming[s_v].append((tag, base + d, d))
        self.in_ptr = np.zeros(n + 1, dtype=np.int64)
        for i in range(n):
            self.in_ptr[i + 1] = self.in_ptr[i] + len(incoming[i])
        flat = [w for lst in incoming for w in lst]
        self.in_tag = np.array([w[0] for w in flat], dtype=np.int64)
        self.in_off = np.array([w[1] for w in flat], dtype=np.int64)
        self.in_dim = np.array([w[2] for w in flat], dtype=np.int64)


class NetworkFunction:
    """Assembled coupled system over a graph.

    Callable as ``nf(du, u, p, t)``. Carries the mass-matrix diagonal
    (zero rows for static-vertex states), the composite symbol table and
    the precomputed :class:`GraphStruct`. Built by
    :func:`network_dynamics`, not directly.
    """

    def __init__(self, g, vertex_models, edge_models, couplings,
                 engine="auto", parallel=False):
        self.graph = g
        self.vertex_models = vertex_models
        self.edge_models = edge_models
        self.couplings = couplings
        gs = GraphStruct(g, vertex_models, edge_models, couplings)
        self.struct = gs
        self.dim = gs.dim
        self.parallel = bool(parallel)

        self.mass_diagonal = np.ones(gs.dim)
        for i, vm in enumerate(vertex_models):
            if vm.kind == comp.STATIC:
                self.mass_diagonal[gs.v_off[i]:gs.v_off[i + 1]] = 0.0

        self.has_delay_edges = any(em.kind == comp.STATIC_DELAY for em in edge_models)

        syms = []
        for i, vm in enumerate(vertex_models):
            syms.extend(f"{s}_{i}" for s in vm.symbols)
        for j, em in enumerate(edge_models):
            if gs.e_state_dim[j] == 0:
                continue
            syms.extend(f"{s}_{j}" for s in em.symbols)
            if gs.e_state_dim[j] == 2 * em.dim:
                syms.extend(f"{s}_{j}r" for s in em.symbols)
        if len(set(syms)) != len(syms):
            raise ValueError("composite state symbols are not unique; "
                             "choose distinct component symbols")
        self.symbols = tuple(syms)

        self._build_python_engine()

        self._jit = None
        if engine not in ("auto", "jit", "python"):
            raise ValueError(f"unknown engine {engine!r}")
        if engine in ("auto", "jit"):
            from . import _jit
            reason = _jit.eligibility(self)
            if reason is None:
                self._jit = _jit.JitEngine(self, parallel=self.parallel)
            elif engine == "jit":
                raise ValueError(f"jit engine not applicable: {reason}")
        self.engine = "jit" if self._jit is not None else "python"

    # -- python engine ---------------------------------------------------

    def _build_python_engine(self):
        gs = self.struct
        self._u_buf = np.zeros(gs.dim)
        self._du_buf = np.zeros(gs.dim)
        self._e_buf = np.zeros(gs.cache_size)
        self._h_buf = np.zeros(gs.n_vertex_states) if self.has_delay_edges else None

        def vwin(buf, i):
            return buf[gs.v_off[i]:gs.v_off[i + 1]]

        def window(tag, off, dim, state_buf):
            buf = self._e_buf if tag == _CACHE else state_buf
            return buf[off:off + dim]

        prog = []
        for j, em in enumerate(self.edge_models):
            c = self.couplings[j]
            d = em.dim
            vs = vwin(self._u_buf, int(gs.src[j]))
            vd = vwin(self._u_buf, int(gs.dst[j]))
            c0 = int(gs.e_cache_off[j])
            if em.kind == comp.STATIC:
                e1 = self._e_buf[c0:c0 + d]
                if c == comp.DIRECTED:
                    prog.append((_OP_STATIC, em.func, j, (e1, vs, vd)))
                else:
                    e2 = self._e_buf[c0 + d:c0 + 2 * d]
                    prog.append((_OP_STATIC, em.func, j, (e1, vs, vd)))
                    if c == comp.SYMMETRIC:
                        prog.append((_OP_COPY, None, j, (e2, e1)))
                    elif c == comp.ANTISYMMETRIC:
                        prog.append((_OP_NEGATE, None, j, (e2, e1)))
                    else:
                        prog.append((_OP_STATIC, em.func, j, (e2, vd, vs)))
            elif em.kind == comp.STATIC_DELAY:
                hs = vwin(self._h_buf, int(gs.src[j]))
                hd = vwin(self._h_buf, int(gs.dst[j]))
                e1 = self._e_buf[c0:c0 + d]
                if c == comp.DIRECTED:
                    prog.append((_OP_DELAY, em.func, j, (e1, vs, vd, hs, hd)))
                else:
                    e2 = self._e_buf[c0 + d:c0 + 2 * d]
                    prog.append((_OP_DELAY, em.func, j, (e1, vs, vd, hs, hd)))
                    if c == comp.SYMMETRIC:
                        prog.append((_OP_COPY, None, j, (e2, e1)))
                    elif c == comp.ANTISYMMETRIC:
                        prog.append((_OP_NEGATE, None, j, (e2, e1)))
                    else:
                        prog.append((_OP_DELAY, em.func, j, (e2, vd, vs, hd, hs)))
            else:  # ODE edge
                s0 = int(gs.e_state_off[j])
                if c in (comp.DIRECTED, comp.FIDUCIAL, comp.UNDIRECTED):
                    e1 = self._u_buf[s0:s0 + d]
                    de1 = self._du_buf[s0:s0 + d]
                    prog.append((_OP_ODE, em.func, j, (de1, e1, vs, vd)))
                    if c != comp.DIRECTED:
                        e2 = self._u_buf[s0 + d:s0 + 2 * d]
                        de2 = self._du_buf[s0 + d:s0 + 2 * d]
                        prog.append((_OP_ODE, em.func, j, (de2, e2, vd, vs)))
                else:
                    # single state block, mirrored cache halves
                    e_state = self._u_buf[s0:s0 + d]
                    de = self._du_buf[s0:s0 + d]
                    e1 = self._e_buf[c0:c0 + d]
                    e2 = self._e_buf[c0 + d:c0 + 2 * d]
                    prog.append((_OP_COPY, None, j, (e1, e_state)))
                    if c == comp.SYMMETRIC:
                        prog.append((_OP_COPY, None, j, (e2, e_state)))
                    else:
                        prog.append((_OP_NEGATE, None, j, (e2, e_state)))
                    prog.append((_OP_ODE, em.func, j, (de, e_state, vs, vd)))
        self._edge_prog = tuple(prog)

        vprog = []
        for i, vm in enumerate(self.vertex_models):
            a, b = int(gs.in_ptr[i]), int(gs.in_ptr[i + 1])
            wins = tuple(
                window(int(gs.in_tag[q]), int(gs.in_off[q]), int(gs.in_dim[q]), self._u_buf)
                for q in range(a, b))
            if not wins:
                # An isolated vertex still receives an iterable of edge
                # value rows. The empty tuple cannot be typed by numba
                # dispatchers, a zero-row array can.
                wins = np.zeros((0, 1))
            v = vwin(self._u_buf, i)
            dv = vwin(self._du_buf, i)
            if vm.kind == comp.ODE:
                vprog.append((0, vm.func, i, (dv, v, wins)))
            else:
                target = np.zeros(vm.dim)
                vprog.append((1, vm.func, i, (target, wins, v, dv)))
        self._vertex_prog = tuple(vprog)

    def _py_loops(self, p, t):
        vp, ep, split = _bundle_parts(p)
        for code, f, j, a in self._edge_prog:
            if code == _OP_STATIC:
                f(a[0], a[1], a[2], _pick(ep, j) if split else ep, t)
            elif code == _OP_COPY:
                np.copyto(a[0], a[1])
            elif code == _OP_NEGATE:
                np.negative(a[1], out=a[0])
            elif code == _OP_DELAY:
                f(a[0], a[1], a[2], a[3], a[4], _pick(ep, j) if split else ep, t)
            else:
                f(a[0], a[1], a[2], a[3], _pick(ep, j) if split else ep, t)
        for code, f, i, a in self._vertex_prog:
            pv = _pick(vp, i) if split else vp
            if code == 0:
                f(a[0], a[1], a[2], pv, t)
            else:
                # static vertex: residual target - state, paired with the
                # zero mass row
                f(a[0], a[1], pv, t)
                np.subtract(a[0], a[2], out=a[3])

    def _py_eval(self, du, u, p, t):
        np.copyto(self._u_buf, u)
        self._py_loops(p, t)
        np.copyto(du, self._du_buf)

    def _eval_delayed(self, du, u, u_delayed, p, t):
        if not self.has_delay_edges:
            self._py_eval(du, u, p, t)
            return
        np.copyto(self._u_buf, u)
        np.copyto(self._h_buf, u_delayed[:self.struct.n_vertex_states])
        self._py_loops(p, t)
        np.copyto(du, self._du_buf)

    # -- public entry points ---------------------------------------------

    def __call__(self, du, u, p, t):
        evaluate_rhs(self, du, u, p, t)


def network_dynamics(vertex_models, edge_models, g, engine="auto", parallel=False):
    """Assemble vertex and edge models over a graph into a flat RHS.

    Single models are broadcast to all components; sequences must match
    the vertex/edge counts of the graph. The coupling class of each edge
    is resolved against the graph's directedness: unset couplings default
    to fiducial on undirected graphs and directed on directed graphs,
    symmetric/antisymmetric/fiducial require an undirected graph.

    Parameters
    ----------
    vertex_models : VertexModel or sequence of VertexModel
    edge_models : EdgeModel or sequence of EdgeModel
    g : Graph
    engine : {"auto", "python", "jit"}
        "python" runs the general interpreted loops. "jit" compiles the
        two loops with numba, which requires a homogeneous system (one
        ODE vertex model, one static edge model, both numba dispatchers)
        and numeric parameters. "auto" promotes to the compiled engine
        when those conditions hold.
    parallel : bool
        Evaluate both loops with threads (compiled engine only; the
        general engine ignores it). Results are identical to the serial
        path, every iteration writes disjoint slots.

    Returns
    -------
    NetworkFunction
    """
    if not isinstance(g, Graph):
        raise TypeError("g must be a Graph")
    vms = _broadcast(vertex_models, comp.VertexModel, g.n_vertices, "vertex")
    ems = _broadcast(edge_models, comp.EdgeModel, g.n_edges, "edge")
    couplings = []
    for em in ems:
        c = em.coupling
        if c is None:
            c = comp.DIRECTED if g.directed else comp.FIDUCIAL
        if g.directed and c != comp.DIRECTED:
            raise ValueError(
                f"coupling {c!r} requires an undirected graph")
        if not g.directed and c == comp.DIRECTED:
            raise ValueError("directed coupling requires a directed graph")
        couplings.append(c)
    return NetworkFunction(g, vms, ems, tuple(couplings),
                           engine=engine, parallel=parallel)


def _broadcast(models, cls, count, what):
    if isinstance(models, cls):
        return (models,) * count
    models = tuple(models)
    for mdl in models:
        if not isinstance(mdl, cls):
            raise TypeError(f"expected {cls.__name__} instances for the {what} side")
    if len(models) != count:
        raise ValueError(
            f"got {len(models)} {what} models for {count} {what} components")
    return models


def evaluate_rhs(nf, du, u, p, t):
    """Evaluate the assembled right-hand side in place.

    Runs the two core loops: every edge reads its endpoint windows of
    ``u`` and writes the edge cache (ODE edges write their derivative
    windows of ``du`` instead), then every vertex consumes its incoming
    windows. ODE vertices write their ``du`` windows; static vertices
    write a target g and the engine stores ``g - u`` as the algebraic
    residual.
    """
    if nf.has_delay_edges:
        raise ValueError("network contains delay edges; integrate with "
                         "integrate_dde / evaluate_rhs_delayed")
    if nf._jit is not None:
        if nf._jit.try_eval(du, u, p, t):
            return
    nf._py_eval(du, u, p, t)


def evaluate_rhs_delayed(nf, du, u, u_delayed, p, t):
    """Delayed-coupling variant of :func:`evaluate_rhs`.

    ``u_delayed`` is the full state vector at ``t - tau``; delay edges
    receive views onto its vertex windows as ``h_v_src`` / ``h_v_dst``.
    """
    nf._eval_delayed(du, u, u_delayed, p, t)


# -- parameter dispatch ---------------------------------------------------

def _bundle_parts(p):
    if isinstance(p, tuple) and len(p) == 2:
        return p[0], p[1], True
    return p, p, False


def _pick(part, index):
    if np.ndim(part) == 0:
        return part
    return part[index]


def resolve_param(p, side, index):
    """Resolve the parameter value a component sees.

    A 2-tuple is split into (vertex part, edge part); within a part, a
    scalar is passed uniformly to every component and an array-like hands
    its index-th element to the index-th component. Anything that is not
    a 2-tuple is global and passed whole to every component.
    """
    if side not in ("vertex", "edge"):
        raise ValueError(f"side must be 'vertex' or 'edge', got {side!r}")
    vp, ep, split = _bundle_parts(p)
    if not split:
        return p
    return _pick(vp if side == "vertex" else ep, index)


# -- symbol helpers -------------------------------------------------------

def syms_containing(nf, fragment):
    """All composite state symbols whose name contains ``fragment``."""
    fragment = str(fragment)
    return tuple(s for s in nf.symbols if fragment in s)


def idx_containing(nf, fragment):
    """State indices whose composite symbol contains ``fragment``."""
    fragment = str(fragment)
    return np.array([i for i, s in enumerate(nf.symbols) if fragment in s],
                    dtype=np.int64)


def coupling_sum(dv, edges):
    """In-place add each incoming edge window onto the front of ``dv``."""
    for w in edges:
        dv[:len(w)] += w
