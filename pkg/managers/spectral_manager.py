import math
from dataclasses import dataclass
from typing import Callable, List, Optional, Tuple, Union

import numpy as np
import pandas as pd
import scipy.linalg
from scipy.sparse.csgraph import connected_components

from logger import logger
from managers.errors import ConvergenceError, GraphError, NormalizationError
from managers.graph_manager import Graph, GraphManager, LengthFunction
from managers.settings_manager import SpectralSettings


def safe_newton(
    func: Callable[[float], Tuple[float, float]],
    lo: float,
    hi: float,
    tol: float,
    max_steps: int = 200,
) -> float:
    """
    Root of a decreasing function bracketed by [lo, hi].

    Newton-Raphson safeguarded by bisection: a Newton step that leaves the
    current bracket, or does not halve it fast enough, is replaced by a
    bisection step. `func` returns the value and the derivative.
    """
    f_lo, df = func(lo)
    if f_lo == 0.0:
        return lo
    f_hi, _ = func(hi)
    if f_hi == 0.0:
        return hi
    if f_lo < 0.0 or f_hi > 0.0:
        raise ConvergenceError(f"root is not bracketed by [{lo!r}, {hi!r}]")

    x, f = lo, f_lo
    dx_old = dx = hi - lo
    for _ in range(max_steps):
        newton_ok = (
            df < 0.0
            and ((x - hi) * df - f) * ((x - lo) * df - f) < 0.0
            and abs(2.0 * f) <= abs(dx_old * df)
        )
        dx_old = dx
        if newton_ok:
            dx = f / df
            x_new = x - dx
        else:
            dx = 0.5 * (hi - lo)
            x_new = lo + dx
        if x_new == x or abs(dx) <= tol * max(1.0, abs(x_new)):
            return x_new
        x = x_new
        f, df = func(x)
        if f == 0.0:
            return x
        if f > 0.0:
            lo = x
        else:
            hi = x
    raise ConvergenceError(f"root finding did not converge in {max_steps} steps")


@dataclass(frozen=True, eq=False)
class EdgeMatrix:
    """Square non-negative matrix indexed by directed edge ids."""

    entries: np.ndarray
    weighted: bool = False

    @property
    def order(self) -> int:
        return self.entries.shape[0]

    def to_frame(self, g: Optional[Graph] = None) -> pd.DataFrame:
        if g is None:
            labels = [str(e) for e in range(self.order)]
        else:
            labels = [f"{g.pair_labels[e >> 1]}{'-' if e & 1 else '+'}" for e in range(self.order)]
        return pd.DataFrame(self.entries, index=labels, columns=labels)

    def to_csv(self, path=None, g: Optional[Graph] = None) -> Optional[str]:
        return self.to_frame(g).to_csv(path, index_label="edge", lineterminator="\n")


@dataclass(frozen=True, eq=False)
class PerronPair:
    """Left/right Perron vectors with u.v = 1 and sum(v) = 1."""

    u: np.ndarray
    v: np.ndarray
    eigenvalue: float


@dataclass(frozen=True, eq=False)
class EquilibriumMeasure:
    mu: np.ndarray

    def __getitem__(self, e: int) -> float:
        return float(self.mu[e])

    @property
    def total(self) -> float:
        return float(self.mu.sum())

    def pair_masses(self) -> np.ndarray:
        """mu(e) + mu(reverse e) for every pair."""
        return self.mu[0::2] + self.mu[1::2]


@dataclass(frozen=True)
class ComponentEntropy:
    vertices: Tuple[str, ...]
    pairs: Tuple[str, ...]
    rank: int
    entropy: float


MatrixLike = Union[EdgeMatrix, np.ndarray]


class SpectralManager:
    def __init__(
        self,
        settings: Optional[SpectralSettings] = None,
        graph_manager: Optional[GraphManager] = None,
    ):
        self.settings = settings or SpectralSettings()
        self.graph_manager = graph_manager or GraphManager()

    # ------------------------------------------------------------------
    # matrices
    # ------------------------------------------------------------------

    def adjacency_matrix(self, g: Graph) -> EdgeMatrix:
        """A[e, f] = 1 when f starts where e ends and f is not the reverse of e."""
        ids = np.arange(g.num_edges)
        follows = g.termini[:, None] == g.origins[None, :]
        not_reverse = (ids ^ 1)[:, None] != ids[None, :]
        return EdgeMatrix((follows & not_reverse).astype(float))

    def weighted_matrix(self, g: Graph, lengths: LengthFunction) -> EdgeMatrix:
        """Row e of the adjacency matrix scaled by exp(-l(e))."""
        self.graph_manager.check_lengths(g, lengths)
        scale = np.exp(-lengths.directed())
        return EdgeMatrix(scale[:, None] * self.adjacency_matrix(g).entries, weighted=True)

    # ------------------------------------------------------------------
    # spectral radius
    # ------------------------------------------------------------------

    @staticmethod
    def _entries(m: MatrixLike) -> np.ndarray:
        a = m.entries if isinstance(m, EdgeMatrix) else np.asarray(m, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValueError("matrix must be square")
        if (a < 0).any():
            raise ValueError("matrix must be non-negative")
        return a

    @staticmethod
    def _strong_labels(a: np.ndarray) -> Tuple[int, np.ndarray]:
        support = (a > 0).astype(float)
        return connected_components(support, directed=True, connection="strong")

    @classmethod
    def strong_blocks(cls, a: np.ndarray) -> List[np.ndarray]:
        """Index sets of the strongly connected components of the support of `a`."""
        n_blocks, labels = cls._strong_labels(a)
        return [np.flatnonzero(labels == b) for b in range(n_blocks)]

    @classmethod
    def is_irreducible(cls, a: np.ndarray) -> bool:
        if a.shape[0] == 1:
            return bool(a[0, 0] > 0)
        n_blocks, _ = cls._strong_labels(a)
        return n_blocks == 1

    @staticmethod
    def _dense_radius(a: np.ndarray) -> float:
        if a.shape[0] == 1:
            return float(abs(a[0, 0]))
        return float(np.max(np.abs(scipy.linalg.eigvals(a))))

    def _collatz_wielandt(self, a: np.ndarray) -> float:
        # Shifting by I makes an irreducible matrix primitive, so periodic
        # graphs converge too; the min/max quotients bracket rho + 1.
        n = a.shape[0]
        shifted = a + np.eye(n)
        x = np.ones(n)
        for _ in range(self.settings.power_max_iter):
            y = shifted @ x
            ratios = y / x
            lower, upper = ratios.min(), ratios.max()
            if upper - lower <= self.settings.power_tol * upper:
                return 0.5 * (lower + upper) - 1.0
            x = y / y.sum()
        raise ConvergenceError(
            f"power iteration did not converge in {self.settings.power_max_iter} steps"
        )

    def spectral_radius(self, m: MatrixLike) -> float:
        a = self._entries(m)
        if a.shape[0] == 0 or not a.any():
            return 0.0
        if self.is_irreducible(a):
            try:
                return self._collatz_wielandt(a)
            except ConvergenceError as e:
                logger.debug(f"{e}; falling back to a dense eigensolve")
                return self._dense_radius(a)
        return max(self._dense_radius(a[np.ix_(b, b)]) for b in self.strong_blocks(a))

    # ------------------------------------------------------------------
    # Perron data
    # ------------------------------------------------------------------

    @staticmethod
    def perron_of_matrix(a: np.ndarray) -> PerronPair:
        """Perron pair of an irreducible non-negative matrix, normalised u.v = 1, |v|_1 = 1."""
        if a.shape[0] == 1:
            one = np.ones(1)
            return PerronPair(one, one, float(a[0, 0]))
        w, vl, vr = scipy.linalg.eig(a, left=True, right=True)
        i = int(np.argmax(w.real))
        u = np.abs(vl[:, i].real)
        v = np.abs(vr[:, i].real)
        v = v / v.sum()
        u = u / (u @ v)
        return PerronPair(u, v, float(w[i].real))

    def _block_entropy(self, block: np.ndarray, lengths: np.ndarray) -> float:
        log_growth = math.log(self._dense_radius(block))
        lo, hi = log_growth / lengths.max(), log_growth / lengths.min()
        if hi - lo <= self.settings.entropy_tol * hi:
            return lo

        def log_radius(s: float) -> Tuple[float, float]:
            with np.errstate(divide="ignore", invalid="ignore"):
                pair = self.perron_of_matrix(np.exp(-s * lengths)[:, None] * block)
            if not (pair.eigenvalue > 0.0 and math.isfinite(pair.eigenvalue)):
                # Long-edge weights underflowed: far above the root, bisect down.
                return -math.inf, 0.0
            slope = -float(lengths @ (pair.u * pair.v))
            return math.log(pair.eigenvalue), slope if math.isfinite(slope) else 0.0

        s = safe_newton(log_radius, lo, hi, self.settings.entropy_tol, self.settings.max_root_steps)
        logger.debug(f"Block entropy {s:.15g} in bracket [{lo:.6g}, {hi:.6g}]")
        return s

    def entropy(self, g: Graph, lengths: LengthFunction) -> float:
        """
        Exponential growth rate of circuits: the s > 0 with rho(A_{G, s l}) = 1.

        Computed independently on every strongly connected block of the
        transition matrix; blocks that are single cycles (components of rank
        at most one, hanging trees) carry no growth. The entropy of a
        disconnected graph is the largest block entropy.
        """
        self.graph_manager.check_lengths(g, lengths)
        a = self.adjacency_matrix(g).entries
        directed = lengths.directed()
        best = 0.0
        for block in self.strong_blocks(a):
            sub = a[np.ix_(block, block)]
            if sub.sum(axis=1).max() <= 1.0:
                continue
            best = max(best, self._block_entropy(sub, directed[block]))
        return best

    def component_entropies(self, g: Graph, lengths: LengthFunction) -> List[ComponentEntropy]:
        result = []
        for vertices, pairs in self.graph_manager.components(g):
            if not pairs:
                result.append(ComponentEntropy((g.vertex_labels[min(vertices)],), (), 0, 0.0))
                continue
            sub, sub_lengths = self.graph_manager.induced_subgraph(g, lengths, pairs)
            result.append(
                ComponentEntropy(
                    sub.vertex_labels,
                    sub.pair_labels,
                    self.graph_manager.rank(sub),
                    self.entropy(sub, sub_lengths),
                )
            )
        return result

    def normalize_unit(self, g: Graph, lengths: LengthFunction) -> LengthFunction:
        h = self.entropy(g, lengths)
        if h <= 0.0:
            raise NormalizationError(f"{g.name} has zero entropy and cannot be normalised")
        return lengths.scaled(h)

    def require_unit(self, g: Graph, lengths: LengthFunction) -> float:
        h = self.entropy(g, lengths)
        if abs(h - 1.0) > self.settings.unit_tol:
            raise NormalizationError(f"{g.name} has entropy {h:.12g}, expected 1")
        return h

    def perron_pair(self, g: Graph, lengths: LengthFunction) -> PerronPair:
        a = self.weighted_matrix(g, lengths).entries
        if not self.is_irreducible(a):
            raise GraphError(
                f"{g.name} must be connected, of rank >= 2 and free of valence-one vertices"
            )
        self.require_unit(g, lengths)
        return self.perron_of_matrix(a)

    def equilibrium_measure(self, g: Graph, lengths: LengthFunction) -> EquilibriumMeasure:
        pair = self.perron_pair(g, lengths)
        return EquilibriumMeasure(pair.u * pair.v)

    # ------------------------------------------------------------------
    # determinant function
    # ------------------------------------------------------------------

    def F_value(self, g: Graph, lengths: LengthFunction) -> float:
        """det(I - A_{G,l}) via LU factorisation with partial pivoting."""
        a = self.weighted_matrix(g, lengths).entries
        return float(scipy.linalg.det(np.eye(a.shape[0]) - a))

    def grad_F_fd(self, g: Graph, lengths: LengthFunction, h: Optional[float] = None) -> np.ndarray:
        self.require_unit(g, lengths)
        h = h or self.settings.fd_step
        base = lengths.as_array()
        grad = np.empty(g.num_pairs)
        for k in range(g.num_pairs):
            step = np.zeros_like(base)
            step[k] = h
            upper = self.F_value(g, LengthFunction.from_array(base + step))
            lower = self.F_value(g, LengthFunction.from_array(base - step))
            grad[k] = (upper - lower) / (2.0 * h)
        return grad

    @staticmethod
    def rose_characteristic(lengths) -> float:
        """1 - sum 2x/(1+x) with x = exp(-l); zero exactly on unit-entropy roses."""
        x = np.exp(-np.asarray(lengths, dtype=float))
        return float(1.0 - np.sum(2.0 * x / (1.0 + x)))

    @staticmethod
    def barbell_characteristic(a: float, b: float, c: float) -> float:
        """(1-x)(1-y) - 4xyz^2; zero exactly on unit-entropy barbells."""
        x, y, z = math.exp(-a), math.exp(-b), math.exp(-c)
        return (1.0 - x) * (1.0 - y) - 4.0 * x * y * z * z
