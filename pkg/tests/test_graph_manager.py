import math

import numpy as np
import pytest

from managers.errors import EnumerationCapError, GraphError
from managers.graph_manager import Circuit, GraphManager, LengthFunction
from managers.settings_manager import GraphSettings
from managers.spectral_manager import SpectralManager


def test_edge_ids_pair_up(theta4):
    g, _ = theta4
    assert g.num_edges == 8
    for e in range(g.num_edges):
        assert g.reverse(g.reverse(e)) == e
        assert g.origin(g.reverse(e)) == g.terminus(e)
        assert g.pair_of(e) == e // 2


def test_successors_exclude_backtracking(graph_manager):
    g, _ = graph_manager.make_rose(2, [1.0, 1.0])
    for e in range(g.num_edges):
        assert g.reverse(e) not in g.successors[e]
        assert len(g.successors[e]) == 3


def test_unknown_vertex_is_rejected(graph_manager):
    with pytest.raises(GraphError):
        graph_manager.build_graph([("v", "w")], vertices=["v"])


@pytest.mark.parametrize("values", [(1.0, 0.0), (1.0, -2.0), (math.inf,), ()])
def test_invalid_lengths(values):
    with pytest.raises(GraphError):
        LengthFunction(values)


def test_length_count_must_match(graph_manager, rose3):
    g, _ = rose3
    with pytest.raises(GraphError):
        graph_manager.check_lengths(g, LengthFunction((1.0, 1.0)))


def test_rank_and_components(graph_manager, unit_barbell, theta4):
    barbell, _ = unit_barbell
    assert graph_manager.rank(barbell) == 2
    assert graph_manager.rank(theta4[0]) == 3

    path = graph_manager.build_graph([("u", "v"), ("v", "w")])
    assert graph_manager.rank(path) == 0

    two = graph_manager.build_graph([("a", "a"), ("b", "b"), ("b", "b")])
    assert not graph_manager.is_connected(two)
    assert graph_manager.rank(two) == 3
    assert [len(v) for v, _ in graph_manager.components(two)] == [1, 1]


def test_selection_must_be_proper(graph_manager, rose3):
    g, _ = rose3
    with pytest.raises(GraphError):
        graph_manager.selection(g, [])
    with pytest.raises(GraphError):
        graph_manager.selection(g, [0, 1, 2])
    with pytest.raises(GraphError):
        graph_manager.selection(g, [7])


def test_proper_subgraphs_ordered_by_bitmask(graph_manager, theta4):
    g, _ = theta4
    selections = graph_manager.proper_subgraphs(g)
    assert len(selections) == 2 ** 4 - 2
    assert [s.bitmask for s in selections] == list(range(1, 15))


def test_delete_edges_keeps_lengths(graph_manager):
    g, lengths = graph_manager.make_barbell(1.0, 2.0, 3.0)
    sub, sub_lengths = graph_manager.delete_edges(g, lengths, graph_manager.selection(g, [0, 2]))
    assert sub.pair_labels == ("0", "2")
    assert sub_lengths.values == (1.0, 3.0)
    assert sub.num_vertices == 2


def test_collapse_theta_gives_rose(graph_manager, theta4):
    g, lengths = theta4
    collapsed, collapsed_lengths = graph_manager.collapse_edge(g, lengths, 0)
    assert collapsed.num_vertices == 1
    assert collapsed.pair_labels == ("1", "2", "3")
    assert all(collapsed.is_loop(k) for k in range(3))
    assert len(collapsed_lengths) == 3


def test_collapse_refuses_loops(graph_manager, rose3):
    g, lengths = rose3
    with pytest.raises(GraphError):
        graph_manager.collapse_edge(g, lengths, 0)


def test_subdivide_edge_splits_length(graph_manager, unit_barbell):
    g, lengths = unit_barbell
    sub, sub_lengths = graph_manager.subdivide_edge(g, lengths, 2, 3)
    assert sub.num_vertices == 4
    assert sub.pair_labels == ("0", "1", "2.0", "2.1", "2.2")
    assert sum(sub_lengths.values[2:]) == pytest.approx(lengths[2])
    assert graph_manager.rank(sub) == graph_manager.rank(g)


def test_circuit_counts_match_matrix_traces(graph_manager, file_manager, fixtures_dir, theta4):
    spectral = SpectralManager(graph_manager=graph_manager)
    graphs = [file_manager.load(path)[0] for path in sorted(fixtures_dir.glob("*.graph"))]
    graphs.append(graph_manager.attach_loop(*theta4, 0, 1.0)[0])
    for g in graphs:
        assert g.num_pairs <= 6
        a = spectral.adjacency_matrix(g).entries
        counts = graph_manager.enumerate_circuits(g, 8)
        power = np.eye(a.shape[0])
        for m in range(1, 9):
            power = power @ a
            assert counts.count(m) == round(np.trace(power))


def test_collected_circuits_are_circuits(graph_manager, unit_barbell):
    g, _ = unit_barbell
    counts = graph_manager.enumerate_circuits(g, 4, collect=True)
    assert len(counts.circuits) == sum(counts.counts)
    assert all(graph_manager.is_circuit(g, c) for c in counts.circuits)
    assert not graph_manager.is_circuit(g, Circuit((4, 5)))


def test_enumeration_cap():
    manager = GraphManager(GraphSettings(enumeration_cap=50))
    g, _ = manager.make_rose(3, [1.0] * 3)
    with pytest.raises(EnumerationCapError):
        manager.enumerate_circuits(g, 6)


def test_metric_count_agrees_with_combinatorial(graph_manager):
    g, lengths = graph_manager.make_rose(2, [1.0, 1.0])
    counts = graph_manager.enumerate_circuits(g, 5)
    assert graph_manager.count_circuits_up_to_length(g, lengths, 5.0) == sum(counts.counts)


def test_counting_slope_near_entropy(graph_manager):
    g, lengths = graph_manager.make_rose(2, [1.0, 1.0])
    for t in (12.0, 14.0):
        slope = math.log(graph_manager.count_circuits_up_to_length(g, lengths, t)) / t
        assert abs(slope - math.log(3)) < 0.1 * math.log(3)


def test_systole(graph_manager, rose3, theta4):
    assert graph_manager.systole(*rose3) == pytest.approx(math.log(5))
    assert graph_manager.systole(*theta4) == pytest.approx(2 * math.log(3))
    path = graph_manager.build_graph([("u", "v")])
    with pytest.raises(GraphError):
        graph_manager.systole(path, LengthFunction((1.0,)))


def test_attach_loop_appends_pair(graph_manager, unit_barbell):
    g, lengths = unit_barbell
    bigger, bigger_lengths = graph_manager.attach_loop(g, lengths, 1, 2.5)
    assert bigger.num_pairs == 4
    assert bigger.pair_ends[3] == (1, 1)
    assert bigger_lengths[3] == 2.5
    assert graph_manager.rank(bigger) == 3


def _weighted_lengths(graph_manager, g, lengths, n, bound):
    """Metric length -> sum of 1/|c| over based circuits c of that length."""
    out = {}
    for circuit in graph_manager.enumerate_circuits(g, n, collect=True).circuits:
        length = circuit.length(lengths)
        if length <= bound + 1e-9:
            key = round(length, 9)
            out[key] = out.get(key, 0.0) + 1.0 / len(circuit)
    return out


def test_subdivision_preserves_weighted_circuit_lengths(graph_manager):
    g, lengths = graph_manager.make_barbell(1.0, 1.0, 1.0)
    sub, sub_lengths = graph_manager.subdivide_edge(g, lengths, 2, 2)
    before = _weighted_lengths(graph_manager, g, lengths, 4, 4.0)
    after = _weighted_lengths(graph_manager, sub, sub_lengths, 8, 4.0)
    assert before.keys() == after.keys()
    for key, value in before.items():
        assert after[key] == pytest.approx(value)


def test_deleting_a_pair_changes_topology(graph_manager, theta4, unit_barbell):
    for g, lengths in (theta4, unit_barbell):
        rank = graph_manager.rank(g)
        for k in range(g.num_pairs):
            sub, _ = graph_manager.delete_edges(g, lengths, graph_manager.complement_of(g, [k]))
            assert graph_manager.rank(sub) < rank or len(graph_manager.components(sub)) > 1


def _collapsed_image(circuit, pair):
    """Drop the collapsed pair from a circuit and renumber the later pairs."""
    kept = [e for e in circuit.edges if e >> 1 != pair]
    return Circuit(tuple(e - 2 if e >> 1 > pair else e for e in kept))


def test_collapse_maps_circuits_onto_circuits(graph_manager, theta4):
    g, _ = theta4
    lengths = LengthFunction((0.7, 1.1, 1.3, 1.9))
    collapsed, collapsed_lengths = graph_manager.collapse_edge(g, lengths, 0)

    images = set()
    for circuit in graph_manager.enumerate_circuits(g, 8, collect=True).circuits:
        image = _collapsed_image(circuit, 0)
        assert graph_manager.is_circuit(collapsed, image)
        short = image.length(collapsed_lengths)
        long = circuit.length(lengths)
        assert short <= long <= short + circuit.multiplicity(0) * lengths[0] + 1e-12
        assert long == pytest.approx(short + circuit.multiplicity(0) * lengths[0])
        images.add(image)

    # every circuit of the collapsed graph lifts to one at most twice as long
    targets = graph_manager.enumerate_circuits(collapsed, 4, collect=True).circuits
    assert set(targets) <= images


def test_counting_slope_on_barbell(graph_manager, unit_barbell):
    g, lengths = unit_barbell
    t1, t2 = 12 * math.log(2), 18 * math.log(2)
    n1 = graph_manager.count_circuits_up_to_length(g, lengths, t1)
    n2 = graph_manager.count_circuits_up_to_length(g, lengths, t2)
    assert (math.log(n2) - math.log(n1)) / (t2 - t1) == pytest.approx(1.0, abs=0.05)
