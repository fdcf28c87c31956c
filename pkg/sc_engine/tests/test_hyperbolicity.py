import json

import networkx as nx
import numpy as np
import pytest

from sc_engine.errors import InfiniteFactorInBall
from sc_engine.groups import ball
from sc_engine.hyperbolicity import ball_graph, delta_estimate, dump_ball, four_point_delta
from sc_engine.parsing import parse_group_spec


def test_tree_is_zero_hyperbolic():
    estimates = delta_estimate(parse_group_spec("free: [x]"), 3, 10_000, seed=0)
    assert estimates.delta_hat == 0
    assert estimates.exhaustive


def test_infinite_dihedral_group_is_a_line():
    spec = parse_group_spec("factors: [cyclic 2, cyclic 2]")
    estimates = delta_estimate(spec, 4, 10_000, seed=0)
    assert estimates.delta_hat == 0
    assert estimates.four_point_delta == 0
    assert estimates.triangles_checked == 84


def test_z3_free_product_is_thin(z3z3):
    estimates = delta_estimate(z3z3, 3, 10_000, seed=0)
    assert estimates.exhaustive
    assert 0 <= estimates.delta_hat <= 1
    if estimates.delta_hat:
        assert len(estimates.witness) == 3


def test_delta_is_monotone_in_radius(z3z3):
    previous = 0
    for radius in range(1, 4):
        current = delta_estimate(z3z3, radius, 10_000, seed=0).delta_hat
        assert current >= previous
        previous = current


def test_sampled_estimate_is_reproducible(z5z7x):
    first = delta_estimate(z5z7x, 2, 300, seed=5)
    second = delta_estimate(z5z7x, 2, 300, seed=5)
    assert not first.exhaustive
    assert first == second


def test_ball_graph_is_a_block_graph(z3z3):
    graph = ball_graph(ball(z3z3, 2), z3z3)
    assert graph.number_of_nodes() == 13
    assert nx.is_connected(graph)
    # every block of Γ(Z/3 * Z/3) is a triangle
    assert all(len(block) in (2, 3) for block in nx.biconnected_components(graph))


def test_four_point_delta_of_tree_is_zero():
    spec = parse_group_spec("free: [x, y]")
    elements = ball(spec, 2).elements()
    assert four_point_delta(elements, spec, 100_000, np.random.default_rng(0)) == 0


def test_dump_ball(z3z3, tmp_path):
    path = dump_ball(ball(z3z3, 1), z3z3, tmp_path / "ball.json")
    data = json.loads(path.read_text())
    assert sorted(node["id"] for node in data["nodes"]) == sorted(["1", "a", "a^2", "b", "b^2"])


def test_infinite_factor_rejected():
    with pytest.raises(InfiniteFactorInBall):
        delta_estimate(parse_group_spec("factors: [zcyclic, cyclic 2]"), 2, 100)
