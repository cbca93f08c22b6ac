import math

import pytest

from managers.errors import GraphParseError


def test_load_fixture(file_manager, fixtures_dir):
    g, lengths = file_manager.load(fixtures_dir / "rose3_log5.graph")
    assert g.name == "rose3"
    assert g.num_pairs == 3
    assert lengths.values == (math.log(5),) * 3


def test_missing_file(file_manager, tmp_path):
    with pytest.raises(FileNotFoundError):
        file_manager.load(tmp_path / "nope.graph")


def test_comments_and_default_name(file_manager):
    g, _ = file_manager.parse("vertex v  # hub\n\nedge a v v 2\n", default_name="petal")
    assert g.name == "petal"
    assert g.pair_labels == ("a",)


@pytest.mark.parametrize(
    "text, line",
    [
        ("vertex v\nedge a v w 1\n", 2),
        ("vertex v\nedge a v v -1\n", 2),
        ("vertex v\nedge a v v abc\n", 2),
        ("vertex v\nvertex v\n", 2),
        ("vertex v\nedge a v v 1\nedge a v v 1\n", 3),
        ("graph\n", 1),
        ("vertex v\nloop a v 1\n", 2),
        ("vertex v\n", 1),
    ],
)
def test_parse_errors_carry_line_numbers(file_manager, text, line):
    with pytest.raises(GraphParseError) as info:
        file_manager.parse(text)
    assert info.value.line_number == line


def test_emit_preserves_lengths_exactly(file_manager, fixtures_dir, tmp_path):
    g, lengths = file_manager.load(fixtures_dir / "barbell.graph")
    target = tmp_path / "copy.graph"
    file_manager.save(target, g, lengths)
    again, again_lengths = file_manager.load(target)
    assert again == g
    assert again_lengths == lengths


def test_barbell_with_loop_fixture(file_manager, graph_manager, fixtures_dir):
    g, lengths = file_manager.load(fixtures_dir / "barbell_loop.graph")
    assert graph_manager.rank(g) == 3
    assert g.is_loop(g.pair_index("d"))
    assert not g.is_loop(g.pair_index("c"))
