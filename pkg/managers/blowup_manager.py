import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, List, Optional, Tuple

import numpy as np
import pandas as pd
from numpy.polynomial.legendre import leggauss
from scipy.integrate import solve_ivp

from logger import logger
from managers.errors import ConvergenceError, GraphError, PreconditionError
from managers.graph_manager import Graph, GraphManager, LengthFunction
from managers.settings_manager import BlowupSettings
from managers.spectral_manager import SpectralManager, safe_newton

TRACE_COLUMNS = ["t", "j", "j_prime", "mu_e", "denom"]


@dataclass(frozen=True)
class BlowupSample:
    t: float
    j: float
    j_prime: float
    mu_e: float
    denom: float


@dataclass(frozen=True)
class BlowupTrace:
    edge: int
    samples: Tuple[BlowupSample, ...]
    horizon: float
    tail_bound: float

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            [[s.t, s.j, s.j_prime, s.mu_e, s.denom] for s in self.samples],
            columns=TRACE_COLUMNS,
        )

    def to_csv(self, path=None) -> Optional[str]:
        return self.to_frame().to_csv(path, index=False, lineterminator="\n")


@dataclass(frozen=True)
class IntegralResult:
    value: float
    horizon: float
    tail_bound: float
    j_end: float
    panels: int


@dataclass(frozen=True, eq=False)
class BlowupSetup:
    """Everything a blow-up along one pair needs, computed once per call."""

    graph: Graph
    lengths: LengthFunction
    pair: int
    adjacency: np.ndarray
    directed: np.ndarray
    blown: np.ndarray
    j_floor: float


class BlowupManager:
    """
    Linear time blow-up of a unit length function along one edge pair.

    The pair grows as l(e) + t while every other pair is rescaled by j(t)
    so that the entropy stays 1; j(t) decreases to the entropy of the
    graph with the pair removed.
    """

    def __init__(
        self,
        settings: Optional[BlowupSettings] = None,
        spectral_manager: Optional[SpectralManager] = None,
        graph_manager: Optional[GraphManager] = None,
    ):
        self.settings = settings or BlowupSettings()
        self.graph_manager = graph_manager or GraphManager()
        self.spectral_manager = spectral_manager or SpectralManager(graph_manager=self.graph_manager)
        self._nodes, self._weights = leggauss(self.settings.gauss_nodes)

    def prepare(self, g: Graph, lengths: LengthFunction, pair: int) -> BlowupSetup:
        self.graph_manager.check_lengths(g, lengths)
        g.check_pair(pair)
        if not self.graph_manager.is_connected(g):
            raise PreconditionError(f"{g.name} must be connected for a blow-up")
        if self.graph_manager.rank(g) < 3:
            raise PreconditionError(f"{g.name} must have rank at least 3 for a blow-up")
        adjacency = self.spectral_manager.adjacency_matrix(g).entries
        if not self.spectral_manager.is_irreducible(adjacency):
            raise PreconditionError(f"{g.name} has valence-one vertices")

        self.spectral_manager.require_unit(g, lengths)
        unit = self.spectral_manager.normalize_unit(g, lengths)
        blown = np.zeros(g.num_edges, dtype=bool)
        blown[[2 * pair, 2 * pair + 1]] = True
        return BlowupSetup(
            graph=g,
            lengths=unit,
            pair=pair,
            adjacency=adjacency,
            directed=unit.directed(),
            blown=blown,
            j_floor=self.subgraph_entropy_direct(g, unit, pair),
        )

    # ------------------------------------------------------------------
    # scaling function
    # ------------------------------------------------------------------

    def _blown_lengths(self, setup: BlowupSetup, t: float, j: float) -> np.ndarray:
        return np.where(setup.blown, setup.directed + t, j * setup.directed)

    def _measure(self, setup: BlowupSetup, t: float, j: float) -> Tuple[float, np.ndarray]:
        weights = np.exp(-self._blown_lengths(setup, t, j))
        pair = self.spectral_manager.perron_of_matrix(weights[:, None] * setup.adjacency)
        return pair.eigenvalue, pair.u * pair.v

    def scaling(self, setup: BlowupSetup, t: float) -> float:
        """j(t): where the log spectral radius of the blown-up matrix vanishes, in [j_floor, 1]."""
        if t < 0:
            raise ValueError("blow-up time must be non-negative")
        if t == 0:
            return 1.0
        others = ~setup.blown

        def log_radius(j: float) -> Tuple[float, float]:
            eigenvalue, mu = self._measure(setup, t, j)
            return math.log(eigenvalue), -float(setup.directed[others] @ mu[others])

        # j(t) approaches j_floor like exp(-t); widen the floor so the bracket
        # survives rounding at large t.
        floor = setup.j_floor * (1.0 - 1e-9)
        return safe_newton(log_radius, floor, 1.0, self.settings.root_tol)

    def _sample(self, setup: BlowupSetup, t: float) -> BlowupSample:
        j = self.scaling(setup, t)
        _, mu = self._measure(setup, t, j)
        positive = mu[0::2]
        mu_e = float(positive[setup.pair])
        original = setup.lengths.as_array()
        denom = float(original @ positive - original[setup.pair] * mu_e)
        return BlowupSample(t=t, j=j, j_prime=-mu_e / denom, mu_e=mu_e, denom=denom)

    def psi_t(self, g: Graph, lengths: LengthFunction, pair: int, t: float) -> LengthFunction:
        setup = self.prepare(g, lengths, pair)
        j = self.scaling(setup, t)
        values = [
            x + t if k == pair else j * x for k, x in enumerate(setup.lengths.values)
        ]
        return LengthFunction(tuple(values))

    def j_value(self, g: Graph, lengths: LengthFunction, pair: int, t: float) -> float:
        return self.scaling(self.prepare(g, lengths, pair), t)

    def j_prime(self, g: Graph, lengths: LengthFunction, pair: int, t: float) -> float:
        """
        -mu_t(e) / sum over the other pairs of l(e') mu_t(e').

        mu_t is the equilibrium measure at psi_t, l the original lengths.
        Taking both the numerator and the denominator per pair, rather than
        per directed edge, leaves the ratio unchanged.
        """
        return self._sample(self.prepare(g, lengths, pair), t).j_prime

    def j_ode(self, g: Graph, lengths: LengthFunction, pair: int, horizon: float) -> float:
        """j(horizon) by integrating the derivative formula; a cross-check only."""
        setup = self.prepare(g, lengths, pair)
        original = setup.lengths.as_array()

        def rhs(t: float, y: np.ndarray) -> List[float]:
            _, mu = self._measure(setup, t, float(y[0]))
            positive = mu[0::2]
            denom = original @ positive - original[setup.pair] * positive[setup.pair]
            return [-positive[setup.pair] / denom]

        solution = solve_ivp(rhs, (0.0, horizon), [1.0], method="DOP853", rtol=1e-10, atol=1e-12)
        if not solution.success:
            raise ConvergenceError(f"ODE integration failed: {solution.message}")
        return float(solution.y[0, -1])

    # ------------------------------------------------------------------
    # subgraph entropy
    # ------------------------------------------------------------------

    def subgraph_entropy_direct(self, g: Graph, lengths: LengthFunction, pair: int) -> float:
        g.check_pair(pair)
        if g.num_pairs == 1:
            return 0.0
        selection = self.graph_manager.complement_of(g, [pair])
        sub, sub_lengths = self.graph_manager.delete_edges(g, lengths, selection)
        return self.spectral_manager.entropy(sub, sub_lengths)

    def _evaluate(self, f: Callable[[float], float], ts: np.ndarray) -> np.ndarray:
        if self.settings.workers > 1:
            with ThreadPoolExecutor(max_workers=self.settings.workers) as executor:
                return np.fromiter(executor.map(f, ts), dtype=float, count=len(ts))
        return np.array([f(t) for t in ts])

    def _gauss(self, f: Callable[[float], float], a: float, b: float) -> float:
        half, mid = 0.5 * (b - a), 0.5 * (a + b)
        return half * float(self._weights @ self._evaluate(f, mid + half * self._nodes))

    def _adaptive(self, f, a: float, b: float, whole: float, tol: float, depth: int) -> float:
        mid = 0.5 * (a + b)
        left, right = self._gauss(f, a, mid), self._gauss(f, mid, b)
        if depth >= self.settings.max_depth or abs(left + right - whole) <= tol:
            return left + right
        return self._adaptive(f, a, mid, left, tol / 2, depth + 1) + self._adaptive(
            f, mid, b, right, tol / 2, depth + 1
        )

    def integrate(self, g: Graph, lengths: LengthFunction, pair: int) -> IntegralResult:
        """
        1 - integral of |j'| over [0, T], panel by panel.

        Panels double in length; integration stops after the first panel
        whose contribution is below the tail tolerance, and that
        contribution is reported as the tail bound.
        """
        setup = self.prepare(g, lengths, pair)

        def integrand(t: float) -> float:
            return -self._sample(setup, t).j_prime

        total, panels = 0.0, 0
        a, b = 0.0, self.settings.initial_horizon
        while True:
            piece = self._adaptive(integrand, a, b, self._gauss(integrand, a, b), self.settings.quad_tol, 0)
            total += piece
            panels += 1
            logger.debug(f"Blow-up panel [{a:g}, {b:g}] contributes {piece:.3e}")
            if piece < self.settings.tail_tol:
                break
            if b >= self.settings.max_horizon:
                raise ConvergenceError(
                    f"subgraph entropy integral did not settle by T = {self.settings.max_horizon:g}"
                )
            a, b = b, min(2.0 * b, self.settings.max_horizon)

        return IntegralResult(
            value=1.0 - total,
            horizon=b,
            tail_bound=piece,
            j_end=self.scaling(setup, b),
            panels=panels,
        )

    def subgraph_entropy_integral(self, g: Graph, lengths: LengthFunction, pair: int) -> float:
        return self.integrate(g, lengths, pair).value

    def blowup_trace(
        self,
        g: Graph,
        lengths: LengthFunction,
        pair: int,
        horizon: float,
        n_samples: int,
        spacing: str = "uniform",
    ) -> BlowupTrace:
        if horizon <= 0:
            raise GraphError("horizon must be positive")
        if n_samples < 2:
            raise GraphError("a trace needs at least two samples")
        if spacing == "uniform":
            ts = np.linspace(0.0, horizon, n_samples)
        elif spacing == "log":
            ts = np.concatenate([[0.0], np.geomspace(horizon * 1e-3, horizon, n_samples - 1)])
        else:
            raise ValueError(f"Unknown spacing: {spacing}")

        setup = self.prepare(g, lengths, pair)
        samples = tuple(self._sample(setup, float(t)) for t in ts)
        tail_bound = max(samples[-1].j - setup.j_floor, 0.0) + self.settings.root_tol
        return BlowupTrace(edge=pair, samples=samples, horizon=horizon, tail_bound=tail_bound)
