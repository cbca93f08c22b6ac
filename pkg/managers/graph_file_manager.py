from pathlib import Path
from typing import List, Tuple

from logger import logger
from managers.errors import GraphError, GraphParseError
from managers.graph_manager import Graph, GraphManager, LengthFunction


class GraphFileManager:
    """
    Reads and writes the plain-text graph format:

        graph <name>
        vertex <id>
        edge <id> <origin-vertex> <terminus-vertex> <length>

    One item per line, '#' starts a comment. Every edge line declares one
    pair; its reverse orientation is implicit.
    """

    def __init__(self, graph_manager: GraphManager):
        self.graph_manager = graph_manager

    def load(self, path) -> Tuple[Graph, LengthFunction]:
        path = Path(path)
        if not path.exists():
            raise FileNotFoundError(f"Graph file {path} not found")
        logger.debug(f"Loading graph file {path}")
        return self.parse(path.read_text(), default_name=path.stem)

    def save(self, path, g: Graph, lengths: LengthFunction) -> None:
        Path(path).write_text(self.emit(g, lengths))

    def parse(self, text: str, default_name: str = "graph") -> Tuple[Graph, LengthFunction]:
        name = default_name
        vertices: List[str] = []
        specs: List[Tuple[str, str]] = []
        labels: List[str] = []
        values: List[float] = []
        last_line = 0

        for line_number, raw in enumerate(text.splitlines(), start=1):
            last_line = line_number
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            fields = line.split()
            keyword = fields[0]

            if keyword == "graph":
                if len(fields) != 2:
                    raise GraphParseError("expected 'graph <name>'", line_number)
                name = fields[1]
            elif keyword == "vertex":
                if len(fields) != 2:
                    raise GraphParseError("expected 'vertex <id>'", line_number)
                if fields[1] in vertices:
                    raise GraphParseError(f"duplicate vertex {fields[1]}", line_number)
                vertices.append(fields[1])
            elif keyword == "edge":
                if len(fields) != 5:
                    raise GraphParseError(
                        "expected 'edge <id> <origin> <terminus> <length>'", line_number
                    )
                label, origin, terminus, literal = fields[1:]
                if label in labels:
                    raise GraphParseError(f"duplicate edge {label}", line_number)
                for v in (origin, terminus):
                    if v not in vertices:
                        raise GraphParseError(f"undeclared vertex {v}", line_number)
                try:
                    length = float(literal)
                except ValueError:
                    raise GraphParseError(f"invalid length {literal!r}", line_number) from None
                if not length > 0 or length == float("inf"):
                    raise GraphParseError(
                        f"length must be positive and finite, got {literal}", line_number
                    )
                labels.append(label)
                specs.append((origin, terminus))
                values.append(length)
            else:
                raise GraphParseError(f"unknown directive {keyword!r}", line_number)

        if not specs:
            raise GraphParseError("graph declares no edges", last_line)
        try:
            g = self.graph_manager.build_graph(specs, vertices, name=name, edge_labels=labels)
        except GraphError as e:
            raise GraphParseError(str(e), last_line) from e
        return g, LengthFunction(tuple(values))

    def emit(self, g: Graph, lengths: LengthFunction) -> str:
        """Inverse of parse; lengths carry 17 significant digits so floats survive exactly."""
        self.graph_manager.check_lengths(g, lengths)
        lines = [f"graph {g.name}"]
        lines.extend(f"vertex {label}" for label in g.vertex_labels)
        for k, (origin, terminus) in enumerate(g.pair_ends):
            lines.append(
                f"edge {g.pair_labels[k]} {g.vertex_labels[origin]} "
                f"{g.vertex_labels[terminus]} {lengths[k]:.17g}"
            )
        return "\n".join(lines) + "\n"
