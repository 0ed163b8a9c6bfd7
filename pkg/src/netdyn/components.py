"""Typed wrappers for user component callables.

A component model declares what kind of equation a callable represents
(differential or algebraic), how many internal states it carries, the
symbols naming those states, and, for edges, the coupling class. The
constructors validate their input but never invoke the callable; the
calling conventions are only contracts, checked by use.

Calling conventions (all callables mutate their first argument in place
and return nothing):

=============  ==========================================================
kind           signature
=============  ==========================================================
ODE vertex     ``f(dv, v, edges, p, t)``
static vertex  ``f(v_target, edges, p, t)``
static edge    ``f(e, v_src, v_dst, p, t)``
delay edge     ``f(e, v_src, v_dst, h_v_src, h_v_dst, p, t)``
ODE edge       ``f(de, e, v_src, v_dst, p, t)``
=============  ==========================================================

``edges`` is the sequence of incoming edge value windows of a vertex;
``h_v_*`` are the delayed source/destination vertex states.
"""

from dataclasses import dataclass

ODE = "ode"
STATIC = "static"
STATIC_DELAY = "static_delay"

DIRECTED = "directed"
UNDIRECTED = "undirected"
SYMMETRIC = "symmetric"
ANTISYMMETRIC = "antisymmetric"
FIDUCIAL = "fiducial"

_VERTEX_KINDS = (ODE, STATIC)
_EDGE_KINDS = (STATIC, ODE, STATIC_DELAY)
_COUPLINGS = (DIRECTED, UNDIRECTED, SYMMETRIC, ANTISYMMETRIC, FIDUCIAL)


@dataclass(frozen=True)
class VertexModel:
    kind: str
    dim: int
    symbols: tuple
    func: object

    def __post_init__(self):
        if self.kind not in _VERTEX_KINDS:
            raise ValueError(f"unknown vertex kind {self.kind!r}")
        _check_dim_symbols(self)


@dataclass(frozen=True)
class EdgeModel:
    kind: str
    dim: int
    coupling: object  # one of the coupling constants, or None = resolve from graph
    symbols: tuple
    func: object

    def __post_init__(self):
        if self.kind not in _EDGE_KINDS:
            raise ValueError(f"unknown edge kind {self.kind!r}")
        if self.coupling is not None and self.coupling not in _COUPLINGS:
            raise ValueError(f"unknown coupling class {self.coupling!r}")
        _check_dim_symbols(self)


def _check_dim_symbols(model):
    if int(model.dim) < 1:
        raise ValueError(f"component dimension must be at least 1, got {model.dim}")
    object.__setattr__(model, "dim", int(model.dim))
    if not callable(model.func):
        raise ValueError("component function must be callable")
    object.__setattr__(model, "symbols", tuple(str(s) for s in model.symbols))
    if len(model.symbols) != model.dim:
        raise ValueError(
            f"got {len(model.symbols)} symbols for dimension {model.dim}")


def _default_symbols(prefix, dim):
    return tuple(f"{prefix}_{i + 1}" for i in range(dim))


def make_ode_vertex(func, dim, symbols=None):
    """Vertex whose states evolve by ``dv = f(v, edges, p, t)``.

    Default symbols are ``v_1 .. v_dim``.
    """
    if symbols is None:
        symbols = _default_symbols("v", dim)
    return VertexModel(kind=ODE, dim=dim, symbols=symbols, func=func)


def make_static_vertex(func, dim, symbols=None):
    """Vertex pinned to an algebraic target.

    The callable writes the value the vertex state must equal; the
    assembled system turns it into a residual paired with a zero
    mass-matrix row.
    """
    if symbols is None:
        symbols = _default_symbols("v", dim)
    return VertexModel(kind=STATIC, dim=dim, symbols=symbols, func=func)


def make_static_edge(func, dim, coupling=None, symbols=None):
    """Edge whose values are an algebraic function of its endpoint states.

    ``coupling`` defaults to fiducial (call twice, no symmetry assumed) on
    undirected graphs and to directed on directed graphs; symmetric and
    antisymmetric are explicit opt-ins valid only on undirected graphs.
    """
    if symbols is None:
        symbols = _default_symbols("e", dim)
    return EdgeModel(kind=STATIC, dim=dim, coupling=coupling, symbols=symbols, func=func)


def make_static_delay_edge(func, dim, coupling=None, symbols=None):
    """Like :func:`make_static_edge` but the callable also receives the
    delayed endpoint states ``h_v_src`` and ``h_v_dst``."""
    if symbols is None:
        symbols = _default_symbols("e", dim)
    return EdgeModel(kind=STATIC_DELAY, dim=dim, coupling=coupling,
                     symbols=symbols, func=func)


def make_ode_edge(func, dim, coupling=None, symbols=None):
    """Edge with its own dynamic states, ``de = f(e, v_src, v_dst, p, t)``."""
    if symbols is None:
        symbols = _default_symbols("e", dim)
    return EdgeModel(kind=ODE, dim=dim, coupling=coupling, symbols=symbols, func=func)
