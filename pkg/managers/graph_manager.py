import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Dict, FrozenSet, Hashable, List, Optional, Sequence, Tuple

import networkx as nx
import numpy as np

from logger import logger
from managers.errors import EnumerationCapError, GraphError
from managers.settings_manager import GraphSettings


@dataclass(frozen=True)
class Graph:
    """
    Finite graph with both orientations of every edge pair materialised.

    Pair k is stored once, as (origin, terminus) of its positive orientation.
    Its directed edges are 2k (positive) and 2k + 1, so reverse(e) = e ^ 1.
    """

    vertex_labels: Tuple[str, ...]
    pair_ends: Tuple[Tuple[int, int], ...]
    pair_labels: Tuple[str, ...]
    name: str = "graph"

    def __post_init__(self):
        if not self.pair_ends:
            raise GraphError("graph needs at least one edge")
        if len(self.pair_labels) != len(self.pair_ends):
            raise GraphError("one label per edge pair is required")
        if len(set(self.vertex_labels)) != len(self.vertex_labels):
            raise GraphError("duplicate vertex label")
        if len(set(self.pair_labels)) != len(self.pair_labels):
            raise GraphError("duplicate edge label")
        n_vertices = len(self.vertex_labels)
        for k, (origin, terminus) in enumerate(self.pair_ends):
            if not (0 <= origin < n_vertices and 0 <= terminus < n_vertices):
                raise GraphError(f"edge {self.pair_labels[k]} references an unknown vertex")

    @property
    def num_vertices(self) -> int:
        return len(self.vertex_labels)

    @property
    def num_pairs(self) -> int:
        return len(self.pair_ends)

    @property
    def num_edges(self) -> int:
        return 2 * len(self.pair_ends)

    @cached_property
    def origins(self) -> np.ndarray:
        ends = np.asarray(self.pair_ends, dtype=int)
        out = np.empty(self.num_edges, dtype=int)
        out[0::2], out[1::2] = ends[:, 0], ends[:, 1]
        out.setflags(write=False)
        return out

    @cached_property
    def termini(self) -> np.ndarray:
        ends = np.asarray(self.pair_ends, dtype=int)
        out = np.empty(self.num_edges, dtype=int)
        out[0::2], out[1::2] = ends[:, 1], ends[:, 0]
        out.setflags(write=False)
        return out

    @cached_property
    def successors(self) -> Tuple[Tuple[int, ...], ...]:
        """Directed edges allowed after each edge by the non-backtracking rule."""
        leaving: Dict[int, List[int]] = {v: [] for v in range(self.num_vertices)}
        for e in range(self.num_edges):
            leaving[self.origin(e)].append(e)
        return tuple(
            tuple(f for f in leaving[self.terminus(e)] if f != e ^ 1)
            for e in range(self.num_edges)
        )

    def origin(self, e: int) -> int:
        origin, terminus = self.pair_ends[e >> 1]
        return terminus if e & 1 else origin

    def terminus(self, e: int) -> int:
        origin, terminus = self.pair_ends[e >> 1]
        return origin if e & 1 else terminus

    @staticmethod
    def reverse(e: int) -> int:
        return e ^ 1

    @staticmethod
    def pair_of(e: int) -> int:
        return e >> 1

    def is_loop(self, pair: int) -> bool:
        origin, terminus = self.pair_ends[pair]
        return origin == terminus

    def check_pair(self, pair: int) -> int:
        if not 0 <= pair < self.num_pairs:
            raise GraphError(f"edge pair {pair} does not exist in {self.name}")
        return pair

    def pair_index(self, label: str) -> int:
        try:
            return self.pair_labels.index(str(label))
        except ValueError:
            raise GraphError(f"unknown edge id: {label}") from None


@dataclass(frozen=True)
class LengthFunction:
    """Positive length per edge pair; both orientations share it."""

    values: Tuple[float, ...]

    def __post_init__(self):
        values = tuple(float(x) for x in self.values)
        if not values:
            raise GraphError("length function is empty")
        for x in values:
            if not math.isfinite(x) or x <= 0:
                raise GraphError(f"lengths must be positive and finite, got {x}")
        object.__setattr__(self, "values", values)

    def __len__(self) -> int:
        return len(self.values)

    def __getitem__(self, pair: int) -> float:
        return self.values[pair]

    def of_edge(self, e: int) -> float:
        return self.values[e >> 1]

    def as_array(self) -> np.ndarray:
        return np.asarray(self.values, dtype=float)

    def directed(self) -> np.ndarray:
        return np.repeat(self.as_array(), 2)

    def scaled(self, alpha: float) -> "LengthFunction":
        return LengthFunction(tuple(alpha * x for x in self.values))

    @classmethod
    def from_array(cls, values) -> "LengthFunction":
        return cls(tuple(float(x) for x in np.asarray(values, dtype=float).ravel()))


@dataclass(frozen=True)
class Circuit:
    edges: Tuple[int, ...]

    def __len__(self) -> int:
        return len(self.edges)

    def length(self, lengths: LengthFunction) -> float:
        return math.fsum(lengths.of_edge(e) for e in self.edges)

    def multiplicity(self, pair: int) -> int:
        return sum(1 for e in self.edges if e >> 1 == pair)


@dataclass(frozen=True)
class SubgraphSelection:
    kept_pairs: FrozenSet[int]
    kept_vertices: FrozenSet[int]

    @property
    def bitmask(self) -> int:
        return sum(1 << k for k in self.kept_pairs)

    def label(self, g: Graph) -> str:
        return "{" + ",".join(g.pair_labels[k] for k in sorted(self.kept_pairs)) + "}"


@dataclass(frozen=True)
class CircuitCount:
    counts: Tuple[int, ...]
    circuits: Tuple[Circuit, ...] = field(default=())
    visited: int = 0

    def count(self, m: int) -> int:
        return self.counts[m - 1]


class GraphManager:
    """Builds graphs and length functions, derives subgraphs, counts circuits."""

    def __init__(self, settings: Optional[GraphSettings] = None):
        self.settings = settings or GraphSettings()

    # ------------------------------------------------------------------
    # construction
    # ------------------------------------------------------------------

    def build_graph(
        self,
        edge_specs: Sequence[Tuple[Hashable, Hashable]],
        vertices: Optional[Sequence[Hashable]] = None,
        name: str = "graph",
        edge_labels: Optional[Sequence[Hashable]] = None,
    ) -> Graph:
        """Materialise both orientations; the listed orientation becomes E+."""
        if not edge_specs:
            raise GraphError("graph needs at least one edge")

        if vertices is None:
            vertices = []
            for origin, terminus in edge_specs:
                for v in (origin, terminus):
                    if v not in vertices:
                        vertices.append(v)
        labels = tuple(str(v) for v in vertices)
        index = {label: i for i, label in enumerate(labels)}
        if len(index) != len(labels):
            raise GraphError("duplicate vertex label")

        ends = []
        for i, (origin, terminus) in enumerate(edge_specs):
            missing = [v for v in (origin, terminus) if str(v) not in index]
            if missing:
                raise GraphError(f"edge {i} references undeclared vertex {missing[0]}")
            ends.append((index[str(origin)], index[str(terminus)]))

        if edge_labels is None:
            edge_labels = range(len(ends))
        return Graph(labels, tuple(ends), tuple(str(x) for x in edge_labels), name)

    def make_rose(self, r: int, lengths: Sequence[float]) -> Tuple[Graph, LengthFunction]:
        """r loops at a single vertex."""
        if r < 1:
            raise GraphError("a rose needs at least one petal")
        if len(lengths) != r:
            raise GraphError(f"expected {r} petal lengths, got {len(lengths)}")
        g = self.build_graph([("v", "v")] * r, name=f"rose{r}")
        return g, LengthFunction(tuple(lengths))

    def make_barbell(self, a: float, b: float, c: float) -> Tuple[Graph, LengthFunction]:
        """Loop e1 at v, loop e2 at w, bridge e3 from v to w."""
        g = self.build_graph([("v", "v"), ("w", "w"), ("v", "w")], name="barbell")
        return g, LengthFunction((a, b, c))

    def make_theta(self, k: int, lengths: Sequence[float]) -> Tuple[Graph, LengthFunction]:
        """k parallel edges between two vertices."""
        if k < 1:
            raise GraphError("a theta graph needs at least one edge")
        if len(lengths) != k:
            raise GraphError(f"expected {k} edge lengths, got {len(lengths)}")
        g = self.build_graph([("v", "w")] * k, name=f"theta{k}")
        return g, LengthFunction(tuple(lengths))

    def attach_loop(
        self, g: Graph, lengths: LengthFunction, vertex: int, length: float
    ) -> Tuple[Graph, LengthFunction]:
        """Append a loop at `vertex`; existing pair indices are unchanged."""
        if not 0 <= vertex < g.num_vertices:
            raise GraphError(f"vertex {vertex} does not exist in {g.name}")
        label = str(g.num_pairs)
        while label in g.pair_labels:
            label += "'"
        graph = Graph(
            g.vertex_labels,
            g.pair_ends + ((vertex, vertex),),
            g.pair_labels + (label,),
            g.name,
        )
        return graph, LengthFunction(lengths.values + (length,))

    def check_lengths(self, g: Graph, lengths: LengthFunction) -> None:
        """One length per edge pair."""
        if len(lengths) != g.num_pairs:
            raise GraphError(
                f"{g.name} has {g.num_pairs} edge pairs but {len(lengths)} lengths were given"
            )

    # ------------------------------------------------------------------
    # topology
    # ------------------------------------------------------------------

    def to_networkx(self, g: Graph, lengths: Optional[LengthFunction] = None) -> nx.MultiGraph:
        """Undirected multigraph keyed by pair index, with optional length attributes."""
        multigraph = nx.MultiGraph()
        multigraph.add_nodes_from(range(g.num_vertices))
        for k, (origin, terminus) in enumerate(g.pair_ends):
            attributes = {"length": lengths[k]} if lengths is not None else {}
            multigraph.add_edge(origin, terminus, key=k, **attributes)
        return multigraph

    def components(self, g: Graph) -> List[Tuple[FrozenSet[int], FrozenSet[int]]]:
        """(vertices, pairs) of every connected component, ordered by lowest vertex."""
        parts = sorted(
            (frozenset(c) for c in nx.connected_components(self.to_networkx(g))),
            key=min,
        )
        return [
            (part, frozenset(k for k, (o, _) in enumerate(g.pair_ends) if o in part))
            for part in parts
        ]

    def is_connected(self, g: Graph) -> bool:
        return nx.is_connected(self.to_networkx(g))

    def rank(self, g: Graph) -> int:
        """First Betti number: |E+| - |V| + number of components."""
        components = nx.number_connected_components(self.to_networkx(g))
        return g.num_pairs - g.num_vertices + components

    # ------------------------------------------------------------------
    # subgraphs
    # ------------------------------------------------------------------

    def selection(self, g: Graph, kept_pairs) -> SubgraphSelection:
        """Validated proper selection with its induced vertex set."""
        kept = frozenset(g.check_pair(int(k)) for k in kept_pairs)
        if not kept:
            raise GraphError("selection removes all edges")
        if len(kept) == g.num_pairs:
            raise GraphError("selection is not proper: no edge pair removed")
        vertices = frozenset(v for k in kept for v in g.pair_ends[k])
        return SubgraphSelection(kept, vertices)

    def proper_subgraphs(self, g: Graph) -> List[SubgraphSelection]:
        """All nonempty strict subsets of E+, by increasing bitmask."""
        n = g.num_pairs
        return [
            self.selection(g, [k for k in range(n) if mask >> k & 1])
            for mask in range(1, (1 << n) - 1)
        ]

    def complement_of(self, g: Graph, removed_pairs) -> SubgraphSelection:
        """Selection keeping every pair except `removed_pairs`."""
        removed = {g.check_pair(int(k)) for k in removed_pairs}
        return self.selection(g, [k for k in range(g.num_pairs) if k not in removed])

    def delete_edges(
        self, g: Graph, lengths: LengthFunction, sel: SubgraphSelection
    ) -> Tuple[Graph, LengthFunction]:
        """Subgraph on the kept pairs with the restricted (not rescaled) lengths."""
        self.check_lengths(g, lengths)
        if not sel.kept_pairs:
            raise GraphError("selection removes all edges")
        return self.induced_subgraph(g, lengths, sel.kept_pairs)

    def induced_subgraph(
        self, g: Graph, lengths: LengthFunction, pairs
    ) -> Tuple[Graph, LengthFunction]:
        kept = sorted({g.check_pair(int(k)) for k in pairs})
        if not kept:
            raise GraphError("selection removes all edges")
        vertices = sorted({v for k in kept for v in g.pair_ends[k]})
        remap = {v: i for i, v in enumerate(vertices)}
        graph = Graph(
            tuple(g.vertex_labels[v] for v in vertices),
            tuple((remap[g.pair_ends[k][0]], remap[g.pair_ends[k][1]]) for k in kept),
            tuple(g.pair_labels[k] for k in kept),
            g.name,
        )
        return graph, LengthFunction(tuple(lengths[k] for k in kept))

    def collapse_edge(
        self, g: Graph, lengths: LengthFunction, pair: int
    ) -> Tuple[Graph, LengthFunction]:
        """
        Identify the endpoints of a non-loop pair and drop the pair.

        The merged vertex keeps the origin's label. Pairs after `pair` shift
        down by one index; every other length is unchanged.
        """
        self.check_lengths(g, lengths)
        g.check_pair(pair)
        if g.is_loop(pair):
            raise GraphError(f"edge {g.pair_labels[pair]} is a loop and cannot be collapsed")

        origin, terminus = g.pair_ends[pair]
        survivors = [v for v in range(g.num_vertices) if v != terminus]
        remap = {v: i for i, v in enumerate(survivors)}
        remap[terminus] = remap[origin]

        kept = [k for k in range(g.num_pairs) if k != pair]
        graph = Graph(
            tuple(g.vertex_labels[v] for v in survivors),
            tuple((remap[g.pair_ends[k][0]], remap[g.pair_ends[k][1]]) for k in kept),
            tuple(g.pair_labels[k] for k in kept),
            g.name,
        )
        return graph, LengthFunction(tuple(lengths[k] for k in kept))

    def subdivide_edge(
        self, g: Graph, lengths: LengthFunction, pair: int, k: int
    ) -> Tuple[Graph, LengthFunction]:
        """Replace a pair by a path of k equal pieces through k - 1 new vertices."""
        self.check_lengths(g, lengths)
        g.check_pair(pair)
        if k < 2:
            raise GraphError("subdivision needs k >= 2")

        label = g.pair_labels[pair]
        new_vertices = tuple(f"{label}~{i}" for i in range(1, k))
        if set(new_vertices) & set(g.vertex_labels):
            raise GraphError(f"vertex labels for subdividing {label} already in use")
        vertex_labels = g.vertex_labels + new_vertices

        origin, terminus = g.pair_ends[pair]
        path = [origin] + list(range(g.num_vertices, g.num_vertices + k - 1)) + [terminus]
        segments = tuple((path[i], path[i + 1]) for i in range(k))
        segment_labels = tuple(f"{label}.{i}" for i in range(k))

        graph = Graph(
            vertex_labels,
            g.pair_ends[:pair] + segments + g.pair_ends[pair + 1:],
            g.pair_labels[:pair] + segment_labels + g.pair_labels[pair + 1:],
            g.name,
        )
        piece = lengths[pair] / k
        values = lengths.values[:pair] + (piece,) * k + lengths.values[pair + 1:]
        return graph, LengthFunction(values)

    # ------------------------------------------------------------------
    # circuits
    # ------------------------------------------------------------------

    @staticmethod
    def _closes(g: Graph, last: int, first: int) -> bool:
        return g.terminus(last) == g.origin(first) and first != last ^ 1

    def is_circuit(self, g: Graph, circuit: Circuit) -> bool:
        """Non-backtracking and closed, including the wrap from last edge to first."""
        edges = circuit.edges
        if not edges or any(not 0 <= e < g.num_edges for e in edges):
            return False
        for current, following in zip(edges, edges[1:]):
            if following not in g.successors[current]:
                return False
        return self._closes(g, edges[-1], edges[0])

    def enumerate_circuits(self, g: Graph, n: int, collect: bool = False) -> CircuitCount:
        """Exact count of based circuits with m edges for m = 1..n, by exhaustive search."""
        if n < 1:
            raise GraphError("circuit length bound must be positive")
        cap = self.settings.enumeration_cap
        counts = [0] * n
        circuits: List[Circuit] = []
        visited = 0

        for start in range(g.num_edges):
            stack = [(start,)]
            while stack:
                path = stack.pop()
                visited += 1
                if visited > cap:
                    raise EnumerationCapError(
                        f"circuit enumeration on {g.name} exceeded {cap} partial paths"
                    )
                last = path[-1]
                if self._closes(g, last, start):
                    counts[len(path) - 1] += 1
                    if collect:
                        circuits.append(Circuit(path))
                if len(path) < n:
                    stack.extend(path + (f,) for f in g.successors[last])

        logger.debug(f"Enumerated circuits on {g.name} up to {n} edges ({visited} paths)")
        return CircuitCount(tuple(counts), tuple(sorted(circuits, key=lambda c: c.edges)), visited)

    def count_circuits_up_to_length(self, g: Graph, lengths: LengthFunction, t: float) -> int:
        """
        Number of based circuits of metric length at most t.

        Depth-first search that prunes once the budget is spent, memoised on
        (current edge, remaining budget) separately for every starting edge.
        """
        self.check_lengths(g, lengths)
        if not math.isfinite(t) or t <= 0:
            raise GraphError("length bound must be positive and finite")

        directed = lengths.directed()
        if t / directed.min() > 900:
            raise EnumerationCapError("length bound too large for depth-first counting")
        eps = 1e-9 * max(1.0, t)
        cap = self.settings.enumeration_cap
        states = 0
        total = 0

        for start in range(g.num_edges):
            if directed[start] > t + eps:
                continue
            memo: Dict[Tuple[int, float], int] = {}

            def walk(edge: int, remaining: float) -> int:
                nonlocal states
                key = (edge, remaining)
                if key in memo:
                    return memo[key]
                states += 1
                if states > cap:
                    raise EnumerationCapError(
                        f"circuit counting on {g.name} exceeded {cap} search states"
                    )
                found = 1 if self._closes(g, edge, start) else 0
                for f in g.successors[edge]:
                    if directed[f] <= remaining + eps:
                        found += walk(f, remaining - directed[f])
                memo[key] = found
                return found

            total += walk(start, t - directed[start])
        return total

    def systole(self, g: Graph, lengths: LengthFunction) -> float:
        """Weighted girth: shortest loop, or shortest pair closed up by a path."""
        self.check_lengths(g, lengths)
        if self.rank(g) < 1:
            raise GraphError(f"{g.name} is a forest and has no circuit")

        multigraph = self.to_networkx(g, lengths)
        best = math.inf
        for k, (origin, terminus) in enumerate(g.pair_ends):
            if origin == terminus:
                best = min(best, lengths[k])
                continue
            reduced = multigraph.copy()
            reduced.remove_edge(origin, terminus, key=k)
            try:
                detour = nx.dijkstra_path_length(reduced, origin, terminus, weight="length")
            except nx.NetworkXNoPath:
                continue
            best = min(best, lengths[k] + detour)
        return best
