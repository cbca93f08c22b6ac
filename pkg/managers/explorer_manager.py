from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from scipy.optimize import minimize
from scipy.spatial.distance import pdist

from logger import logger
from managers.errors import ConvergenceError, GraphError, NormalizationError
from managers.graph_manager import Graph, GraphManager, LengthFunction, SubgraphSelection
from managers.settings_manager import ExplorerSettings
from managers.spectral_manager import SpectralManager

STRATEGIES = ("auto", "exhaustive", "maximal")
TRACE_COLUMNS = ["restart", "iteration", "objective", "simplex_diameter", "best_so_far"]


@dataclass(frozen=True, eq=False)
class SupResult:
    value: float
    best_subgraph: SubgraphSelection
    per_subgraph: Dict[SubgraphSelection, float]
    strategy: str


@dataclass(frozen=True)
class TraceRow:
    restart: int
    iteration: int
    objective: float
    simplex_diameter: float


@dataclass(frozen=True, eq=False)
class InfEstimate:
    value: float
    argmin_lengths: LengthFunction
    optimizer_trace: Tuple[TraceRow, ...]
    converged: bool
    graph_name: str = "graph"
    best_restart: int = 0

    def trace_frame(self) -> pd.DataFrame:
        """One row per optimizer iteration; best_so_far runs across restarts in trace order."""
        frame = pd.DataFrame(
            [[r.restart, r.iteration, r.objective, r.simplex_diameter] for r in self.optimizer_trace],
            columns=TRACE_COLUMNS[:-1],
        )
        frame["best_so_far"] = frame["objective"].cummin()
        return frame

    def to_csv(self, path=None) -> Optional[str]:
        return self.trace_frame().to_csv(path, index=False, lineterminator="\n")


@dataclass(frozen=True, eq=False)
class CatalogEstimate:
    estimates: Dict[str, InfEstimate]
    overall_min: float
    argmin_graph: str


@dataclass(frozen=True, eq=False)
class _RestartOutcome:
    point: np.ndarray
    value: float
    rows: Tuple[TraceRow, ...]
    converged: bool


class ExplorerManager:
    def __init__(
        self,
        settings: Optional[ExplorerSettings] = None,
        spectral_manager: Optional[SpectralManager] = None,
        graph_manager: Optional[GraphManager] = None,
    ):
        self.settings = settings or ExplorerSettings()
        self.graph_manager = graph_manager or GraphManager()
        self.spectral_manager = spectral_manager or SpectralManager(graph_manager=self.graph_manager)

    # ------------------------------------------------------------------
    # entropy-sup
    # ------------------------------------------------------------------

    def _selections(self, g: Graph, strategy: str) -> Tuple[str, List[SubgraphSelection]]:
        if strategy not in STRATEGIES:
            raise ValueError(f"Unknown strategy: {strategy}")
        n = g.num_pairs
        if n < 2:
            raise GraphError(f"{g.name} has no proper subgraph")
        if strategy == "auto":
            strategy = "exhaustive" if n <= self.settings.auto_exhaustive_pairs else "maximal"
        if strategy == "exhaustive":
            if n > self.settings.max_exhaustive_pairs:
                raise GraphError(
                    f"exhaustive search over {n} edge pairs exceeds the guard of "
                    f"{self.settings.max_exhaustive_pairs}"
                )
            return strategy, self.graph_manager.proper_subgraphs(g)
        # Entropy only grows with the edge set, so the maximum is attained on some G - e.
        selections = [self.graph_manager.complement_of(g, [k]) for k in range(n)]
        return strategy, sorted(selections, key=lambda s: s.bitmask)

    def _sup(self, g: Graph, lengths: LengthFunction, strategy: str) -> SupResult:
        strategy, selections = self._selections(g, strategy)

        def evaluate(selection: SubgraphSelection) -> float:
            sub, sub_lengths = self.graph_manager.delete_edges(g, lengths, selection)
            return self.spectral_manager.entropy(sub, sub_lengths)

        if len(selections) > 32 and self.settings.workers > 1:
            with ThreadPoolExecutor(max_workers=self.settings.workers) as executor:
                values = list(executor.map(evaluate, selections))
        else:
            values = [evaluate(s) for s in selections]

        top = max(values)
        best = next(
            s for s, v in zip(selections, values) if v >= top - self.settings.tie_tol
        )
        return SupResult(
            value=top,
            best_subgraph=best,
            per_subgraph=dict(zip(selections, values)),
            strategy=strategy,
        )

    def entropy_sup(self, g: Graph, lengths: LengthFunction, strategy: str = "auto") -> SupResult:
        """
        Largest entropy of a proper subgraph under the restricted lengths.

        "exhaustive" visits every proper subgraph, "maximal" only the graphs
        G - e, which is enough because entropy is monotone under inclusion.
        Ties within tie_tol go to the smallest selection bitmask.
        """
        self.spectral_manager.require_unit(g, lengths)
        return self._sup(g, lengths, strategy)

    # ------------------------------------------------------------------
    # entropy-inf
    # ------------------------------------------------------------------

    @staticmethod
    def _lengths(y: np.ndarray) -> LengthFunction:
        return LengthFunction.from_array(np.exp(np.append(y, 0.0)))

    def _objective(self, g: Graph, y: np.ndarray) -> float:
        """entropy-sup at the unit rescaling of exp(y); +inf where that cannot be evaluated."""
        try:
            unit = self.spectral_manager.normalize_unit(g, self._lengths(y))
            return self._sup(g, unit, "maximal").value
        except (NormalizationError, ConvergenceError) as e:
            logger.debug(f"Objective on {g.name} rejected {np.round(y, 3)}: {e}")
            return np.inf

    def _starts(self, n: int, restarts: int, seed: int) -> List[np.ndarray]:
        """Uniform point first, then Dirichlet-perturbed points."""
        rng = np.random.default_rng(seed)
        starts = [np.zeros(n - 1)]
        for _ in range(restarts - 1):
            x = np.log(rng.dirichlet(np.full(n, self.settings.dirichlet_alpha)))
            starts.append(x[:-1] - x[-1])
        return starts

    def _run_restart(self, g: Graph, index: int, y0: np.ndarray) -> _RestartOutcome:
        dim = y0.size
        cache: Dict[Tuple[float, ...], float] = {}
        recent: List[np.ndarray] = []
        rows: List[TraceRow] = []

        def objective(y: np.ndarray) -> float:
            key = tuple(y)
            if key not in cache:
                cache[key] = self._objective(g, y)
            return cache[key]

        def callback(xk: np.ndarray) -> None:
            # scipy does not expose the simplex per iteration; the spread of
            # the last dim + 1 best vertices stands in for its diameter.
            recent.append(np.array(xk))
            del recent[: -(dim + 1)]
            spread = float(pdist(np.array(recent)).max()) if len(recent) > 1 else np.nan
            rows.append(TraceRow(index, len(rows) + 1, objective(xk), spread))

        initial_simplex = np.vstack([y0, y0 + 0.25 * np.eye(dim)])
        result = minimize(
            objective,
            y0,
            method="Nelder-Mead",
            callback=callback,
            options={
                "initial_simplex": initial_simplex,
                "xatol": self.settings.xatol / (2.0 * np.sqrt(dim)),
                "fatol": self.settings.fatol,
                "maxiter": self.settings.max_iter,
                "maxfev": 4 * self.settings.max_iter,
            },
        )
        diameter = float(pdist(result.final_simplex[0]).max())
        rows.append(TraceRow(index, int(result.nit), float(result.fun), diameter))
        logger.debug(
            f"Restart {index} on {g.name}: {result.fun:.12g} after {result.nit} iterations"
        )
        return _RestartOutcome(
            point=np.asarray(result.x, dtype=float),
            value=float(result.fun),
            rows=tuple(rows),
            converged=diameter < self.settings.xatol,
        )

    def minimize_entropy_sup(
        self, g: Graph, restarts: Optional[int] = None, seed: Optional[int] = None
    ) -> InfEstimate:
        """
        Heuristic minimum of entropy-sup over unit-entropy length functions.

        Works in log-length coordinates with the last coordinate pinned at 0;
        normalisation inside the objective removes the scale direction.
        """
        if self.graph_manager.rank(g) < 3:
            raise GraphError(f"{g.name} must have rank at least 3")
        restarts = restarts or self.settings.restarts
        seed = self.settings.seed if seed is None else seed
        starts = self._starts(g.num_pairs, restarts, seed)
        logger.info(f"Minimising entropy-sup on {g.name} with {restarts} restarts (seed {seed})")

        with ThreadPoolExecutor(max_workers=self.settings.workers) as executor:
            outcomes = list(
                executor.map(lambda item: self._run_restart(g, *item), enumerate(starts))
            )

        best_index = 0
        for i, outcome in enumerate(outcomes):
            if outcome.value < outcomes[best_index].value - self.settings.tie_tol:
                best_index = i
        best = outcomes[best_index]

        argmin = self.spectral_manager.normalize_unit(g, self._lengths(best.point))
        return InfEstimate(
            value=self._sup(g, argmin, "maximal").value,
            argmin_lengths=argmin,
            optimizer_trace=tuple(row for outcome in outcomes for row in outcome.rows),
            converged=best.converged,
            graph_name=g.name,
            best_restart=best_index,
        )

    def entropy_rank_estimate(
        self,
        catalog: Sequence[Graph],
        restarts: Optional[int] = None,
        seed: Optional[int] = None,
    ) -> CatalogEstimate:
        """Empirical minimum of entropy-inf over a user-supplied catalog of one rank."""
        if not catalog:
            raise GraphError("catalog is empty")
        ranks = {self.graph_manager.rank(g) for g in catalog}
        if len(ranks) > 1:
            raise GraphError(f"catalog mixes ranks {sorted(ranks)}")

        estimates: Dict[str, InfEstimate] = {}
        for g in catalog:
            name = g.name
            while name in estimates:
                name += "'"
            estimates[name] = self.minimize_entropy_sup(g, restarts=restarts, seed=seed)

        argmin_graph = min(estimates, key=lambda name: estimates[name].value)
        return CatalogEstimate(
            estimates=estimates,
            overall_min=estimates[argmin_graph].value,
            argmin_graph=argmin_graph,
        )
