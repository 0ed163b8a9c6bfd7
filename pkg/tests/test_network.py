import math

import numpy as np
import pytest

import netdyn
from netdyn import components as comp
from netdyn import graphs, network
from _reference import kuramoto_rhs_adjacency, random_undirected_graph_edges


def kuramoto_edge(e, v_s, v_d, p, t):
    e[0] = p * math.sin(v_s[0] - v_d[0])


def kuramoto_vertex(dv, v, edges, p, t):
    acc = 0.0
    for e in edges:
        acc += e[0]
    dv[0] = p + acc


def build(g, coupling=None, engine="auto"):
    vm = comp.make_ode_vertex(kuramoto_vertex, 1, symbols=("theta",))
    em = comp.make_static_edge(kuramoto_edge, 1, coupling=coupling)
    return network.network_dynamics(vm, em, g, engine=engine)


def test_assembled_matches_adjacency_oracle():
    """Seeded sweep of random graphs against the dense-adjacency loop."""
    rng = np.random.default_rng(12)
    for _ in range(30):
        n = int(rng.integers(2, 40))
        edges = random_undirected_graph_edges(n, rng)
        g = graphs.Graph(False, n, tuple(edges))
        nf = build(g, engine="python")
        omega = rng.uniform(-2, 2, n)
        theta = rng.uniform(-np.pi, np.pi, n)
        sigma = float(rng.uniform(0.1, 4.0))
        du = np.empty(n)
        network.evaluate_rhs(nf, du, theta, (omega, sigma), 0.0)
        ref = kuramoto_rhs_adjacency(graphs.adjacency(g), omega, sigma, theta)
        assert np.max(np.abs(du - ref)) <= 1e-12


def test_both_engines_agree():
    g = graphs.watts_strogatz(40, 4, 0.2, 3)
    from netdyn import bench
    nf_jit, omega, x0 = bench.build_kuramoto(40, g,
                                             rng=np.random.default_rng(1))
    nf_py = build(g, coupling=comp.ANTISYMMETRIC, engine="python")
    assert nf_jit.engine == "jit"
    assert nf_py.engine == "python"
    du1 = np.empty(40)
    du2 = np.empty(40)
    network.evaluate_rhs(nf_jit, du1, x0, (omega, 5.0), 0.0)
    network.evaluate_rhs(nf_py, du2, x0, (omega, 5.0), 0.0)
    assert np.max(np.abs(du1 - du2)) <= 1e-12


def test_uncoupled_reduces_to_frequencies():
    g = graphs.Graph(False, 5, ())
    nf = build(g)
    omega = np.arange(5.0)
    du = np.empty(5)
    network.evaluate_rhs(nf, du, np.ones(5), (omega, 3.0), 0.0)
    np.testing.assert_array_equal(du, omega)


def test_single_edge_hand_value():
    g = graphs.Graph(False, 2, ((0, 1),))
    nf = build(g)
    theta = np.array([0.0, np.pi / 2])
    du = np.empty(2)
    network.evaluate_rhs(nf, du, theta, (np.zeros(2), 1.0), 0.0)
    # edge stores sin(th0 - th1) for the fiducial direction; node 1 reads
    # that half, node 0 reads the reversed call sin(th1 - th0)
    assert du[1] == pytest.approx(math.sin(-np.pi / 2))
    assert du[0] == pytest.approx(math.sin(np.pi / 2))


def test_coupling_defaults_and_rejections():
    gu = graphs.Graph(False, 3, ((0, 1),))
    gd = graphs.Graph(True, 3, ((0, 1),))
    assert build(gu).couplings[0] == comp.FIDUCIAL
    assert build(gd).couplings[0] == comp.DIRECTED
    with pytest.raises(ValueError):
        build(gd, coupling=comp.ANTISYMMETRIC)
    with pytest.raises(ValueError):
        build(gu, coupling=comp.DIRECTED)


def test_directed_graph_only_destination_reads():
    g = graphs.Graph(True, 2, ((0, 1),))
    nf = build(g)
    theta = np.array([0.3, -0.2])
    du = np.empty(2)
    network.evaluate_rhs(nf, du, theta, (np.zeros(2), 1.0), 0.0)
    assert du[0] == 0.0
    assert du[1] == pytest.approx(math.sin(0.3 + 0.2))


def test_symmetric_coupling():
    def gauss_edge(e, v_s, v_d, p, t):
        e[0] = math.exp(-(v_s[0] - v_d[0]) ** 2)

    g = graphs.Graph(False, 3, ((0, 1), (1, 2)))
    vm = comp.make_ode_vertex(kuramoto_vertex, 1)
    em_s = comp.make_static_edge(gauss_edge, 1, coupling=comp.SYMMETRIC)
    em_f = comp.make_static_edge(gauss_edge, 1, coupling=comp.FIDUCIAL)
    theta = np.array([0.1, 0.9, -0.4])
    du_s = np.empty(3)
    du_f = np.empty(3)
    nf_s = network.network_dynamics(vm, em_s, g)
    nf_f = network.network_dynamics(vm, em_f, g)
    network.evaluate_rhs(nf_s, du_s, theta, (np.zeros(3), 0.0), 0.0)
    network.evaluate_rhs(nf_f, du_f, theta, (np.zeros(3), 0.0), 0.0)
    np.testing.assert_array_equal(du_s, du_f)


def test_antisymmetric_call_count_and_identity():
    calls = [0]

    def counting_edge(e, v_s, v_d, p, t):
        calls[0] += 1
        e[0] = p * math.sin(v_s[0] - v_d[0])

    g = graphs.watts_strogatz(14, 4, 0.4, 8)
    vm = comp.make_ode_vertex(kuramoto_vertex, 1)
    theta = np.random.default_rng(2).uniform(-3, 3, 14)
    du_f = np.empty(14)
    du_a = np.empty(14)

    em = comp.make_static_edge(counting_edge, 1, coupling=comp.FIDUCIAL)
    nf = network.network_dynamics(vm, em, g)
    calls[0] = 0
    network.evaluate_rhs(nf, du_f, theta, (np.zeros(14), 1.0), 0.0)
    assert calls[0] == 2 * g.n_edges

    em = comp.make_static_edge(counting_edge, 1, coupling=comp.ANTISYMMETRIC)
    nf = network.network_dynamics(vm, em, g)
    calls[0] = 0
    network.evaluate_rhs(nf, du_a, theta, (np.zeros(14), 1.0), 0.0)
    assert calls[0] == g.n_edges

    assert np.array_equal(du_f, du_a)


def test_heterogeneous_vertices_dimension_layout():
    """One second-order vertex shifts all later state offsets by one."""
    def inertia(dv, v, edges, p, t):
        acc = 0.0
        for e in edges:
            acc += e[0]
        dv[0] = v[1]
        dv[1] = p - v[1] + acc

    g = graphs.Graph(False, 3, ((0, 1), (1, 2)))
    vm1 = comp.make_ode_vertex(kuramoto_vertex, 1, symbols=("theta",))
    vm2 = comp.make_ode_vertex(inertia, 2, symbols=("theta", "w"))
    nf = network.network_dynamics([vm1, vm2, vm1],
                                  comp.make_static_edge(kuramoto_edge, 1), g)
    assert nf.dim == 4
    assert nf.symbols == ("theta_0", "theta_1", "w_1", "theta_2")
    u = np.array([0.2, -0.1, 0.7, 0.4])
    du = np.empty(4)
    network.evaluate_rhs(nf, du, u, (np.zeros(3), 1.0), 0.0)
    assert du[1] == 0.7  # dtheta_1 = w_1
    # node 0 couples only to node 1's phase
    assert du[0] == pytest.approx(math.sin(-0.1 - 0.2))


def test_static_vertex_residual_row():
    def pinned(target, edges, p, t):
        target[0] = p

    g = graphs.Graph(False, 2, ((0, 1),))
    vm = comp.make_ode_vertex(kuramoto_vertex, 1)
    sm = comp.make_static_vertex(pinned, 1)
    nf = network.network_dynamics([vm, sm],
                                  comp.make_static_edge(kuramoto_edge, 1), g)
    np.testing.assert_array_equal(nf.mass_diagonal, [1.0, 0.0])
    u = np.array([0.0, 0.3])
    du = np.empty(2)
    network.evaluate_rhs(nf, du, u, (np.array([0.0, 0.8]), 0.0), 0.0)
    # residual form g(u) - u on the algebraic row
    assert du[1] == pytest.approx(0.8 - 0.3)


def test_ode_edge_states_live_in_u():
    def relax_edge(de, e, v_s, v_d, p, t):
        de[0] = v_s[0] - v_d[0] - e[0]

    def reader_vertex(dv, v, edges, p, t):
        acc = 0.0
        for e in edges:
            acc += e[0]
        dv[0] = acc

    g = graphs.Graph(False, 2, ((0, 1),))
    vm = comp.make_ode_vertex(reader_vertex, 1)
    em = comp.make_ode_edge(relax_edge, 1, coupling=comp.FIDUCIAL)
    nf = network.network_dynamics(vm, em, g)
    # 2 vertex states + doubled edge state
    assert nf.dim == 4
    u = np.array([1.0, 0.25, 0.5, -0.125])
    du = np.empty(4)
    network.evaluate_rhs(nf, du, u, None, 0.0)
    assert du[2] == pytest.approx(1.0 - 0.25 - 0.5)     # fiducial half
    assert du[3] == pytest.approx(0.25 - 1.0 + 0.125)   # reversed half
    assert du[1] == 0.5      # dst reads fiducial half state
    assert du[0] == -0.125   # src reads reversed half state


def test_parameter_conventions():
    g = graphs.Graph(False, 2, ((0, 1),))
    nf = build(g)
    du = np.empty(2)
    theta = np.array([0.4, -0.2])

    # tuple of two: split vertex/edge, arrays broadcast per component
    network.evaluate_rhs(nf, du, theta, (np.array([1.0, 2.0]), 0.0), 0.0)
    np.testing.assert_array_equal(du, [1.0, 2.0])
    # scalar within a side is shared
    network.evaluate_rhs(nf, du, theta, (7.0, 0.0), 0.0)
    np.testing.assert_array_equal(du, [7.0, 7.0])

    # non-tuple bundle goes to every component whole
    def global_vertex(dv, v, edges, p, t):
        dv[0] = p["w"]

    def silent_edge(e, v_s, v_d, p, t):
        e[0] = 0.0

    nf2 = network.network_dynamics(
        comp.make_ode_vertex(global_vertex, 1),
        comp.make_static_edge(silent_edge, 1), g)
    network.evaluate_rhs(nf2, du, theta, {"w": 3.5}, 0.0)
    np.testing.assert_array_equal(du, [3.5, 3.5])


def test_resolve_param():
    p = (np.array([1.0, 2.0, 3.0]), 9.0)
    assert network.resolve_param(p, "vertex", 1) == 2.0
    assert network.resolve_param(p, "edge", 5) == 9.0
    assert network.resolve_param({"a": 1}, "vertex", 0) == {"a": 1}
    with pytest.raises(ValueError):
        network.resolve_param(p, "elsewhere", 0)


def test_symbol_queries():
    g = graphs.Graph(False, 3, ((0, 1), (1, 2)))
    nf = build(g)
    assert nf.symbols == ("theta_0", "theta_1", "theta_2")
    assert network.syms_containing(nf, "theta") == nf.symbols
    np.testing.assert_array_equal(network.idx_containing(nf, "_1"), [1])
    assert network.syms_containing(nf, "nope") == ()


def test_coupling_sum_helper():
    dv = np.zeros(2)
    wins = (np.array([1.0, 10.0]), np.array([2.0, 20.0]))
    network.coupling_sum(dv, wins)
    np.testing.assert_array_equal(dv, [3.0, 30.0])


def test_dimension_mismatch_raises():
    g = graphs.Graph(False, 3, ((0, 1),))
    vm = comp.make_ode_vertex(kuramoto_vertex, 1)
    em = comp.make_static_edge(kuramoto_edge, 1)
    with pytest.raises(ValueError):
        network.network_dynamics([vm, vm], em, g)  # 2 models, 3 vertices


def test_delay_edge_requires_delayed_entry():
    def dedge(e, v_s, v_d, h_v_s, h_v_d, p, t):
        e[0] = h_v_d[0]

    g = graphs.Graph(False, 2, ((0, 1),))
    nf = network.network_dynamics(
        comp.make_ode_vertex(kuramoto_vertex, 1),
        comp.make_static_delay_edge(dedge, 1), g)
    assert nf.has_delay_edges
    du = np.empty(2)
    with pytest.raises(ValueError):
        network.evaluate_rhs(nf, du, np.zeros(2), None, 0.0)
    # the delayed entry point works; each endpoint reads the half where
    # it is the destination argument, so node 1 sees h_v_d = h_1
    network.evaluate_rhs_delayed(nf, du, np.zeros(2),
                                 np.array([0.5, -0.5]), (np.zeros(2), 0.0),
                                 0.0)
    assert du[1] == -0.5
    assert du[0] == 0.5


def test_evaluate_rhs_zero_net_allocations():
    import os
    import tracemalloc

    srcdir = os.path.dirname(netdyn.__file__)
    g = graphs.watts_strogatz(20, 4, 0.2, 6)
    nf = build(g, engine="python")
    du = np.empty(20)
    theta = np.random.default_rng(0).uniform(-3, 3, 20)
    p = (np.zeros(20), 1.0)

    def cycle():
        tracemalloc.start()
        s0 = tracemalloc.take_snapshot()
        for k in range(100):
            network.evaluate_rhs(nf, du, theta, p, 0.01 * k)
        s1 = tracemalloc.take_snapshot()
        tracemalloc.stop()
        blocks = size = 0
        for st in s1.compare_to(s0, "lineno"):
            if st.traceback[0].filename.startswith(srcdir):
                blocks += st.count_diff
                size += st.size_diff
        return blocks, size

    network.evaluate_rhs(nf, du, theta, p, 0.0)
    cycle()  # first pass may populate interpreter-level caches
    blocks, size = cycle()
    assert blocks == 0
    assert size == 0
