from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np
import pandas as pd

from logger import logger
from managers.bounds_manager import BoundReport, BoundsManager
from managers.graph_manager import Graph, GraphManager, LengthFunction
from managers.settings_manager import BoundsSettings
from managers.spectral_manager import SpectralManager

SUITES = ("rose", "nonloop", "barbell", "collapse", "assembly")
CSV_COLUMNS = ["check_name", "seed", "lhs", "rhs", "margin", "satisfied"]

SampleOutcome = Tuple[List[Tuple[int, BoundReport]], int]


@dataclass(frozen=True)
class SweepResult:
    suite: str
    seed: int
    reports: Tuple[Tuple[int, BoundReport], ...]
    skipped: int = 0

    @property
    def violations(self) -> int:
        return sum(1 for _, r in self.reports if not r.satisfied)

    @property
    def all_satisfied(self) -> bool:
        return self.violations == 0

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            [[r.name, seed, r.lhs, r.rhs, r.margin, r.satisfied] for seed, r in self.reports],
            columns=CSV_COLUMNS,
        )

    def to_csv(self, path=None) -> Optional[str]:
        return self.to_frame().to_csv(path, index=False, lineterminator="\n")

    def summary(self) -> str:
        margins = [r.margin for _, r in self.reports]
        worst = f"{min(margins):.6g}" if margins else "n/a"
        return (
            f"suite={self.suite} seed={self.seed} checks={len(self.reports)} "
            f"violations={self.violations} skipped={self.skipped} min_margin={worst}"
        )


class VerifyNodes:
    """Randomised sweeps that run the inequality checkers on seeded samples."""

    def __init__(
        self,
        graph_manager: GraphManager,
        spectral_manager: SpectralManager,
        bounds_manager: BoundsManager,
        settings: Optional[BoundsSettings] = None,
    ):
        self.graph_manager = graph_manager
        self.spectral_manager = spectral_manager
        self.bounds_manager = bounds_manager
        self.settings = settings or bounds_manager.settings
        self.suites: Dict[str, Callable[[int, int, int], SampleOutcome]] = {
            "rose": self.rose_sample,
            "nonloop": self.nonloop_sample,
            "barbell": self.barbell_sample,
            "collapse": self.collapse_sample,
            "assembly": self.assembly_sample,
        }

    # ------------------------------------------------------------------
    # fixtures
    # ------------------------------------------------------------------

    def _uniform(self, rng: np.random.Generator, size=None):
        bound = self.settings.log_length_range
        return np.exp(rng.uniform(-bound, bound, size))

    def random_fixture(self, rng: np.random.Generator) -> Tuple[Graph, LengthFunction]:
        """Unit-entropy rose, barbell-with-loops or theta graph of rank 3 to 5."""
        kind = int(rng.integers(3))
        rank = int(rng.integers(3, 6))
        if kind == 0:
            g, _ = self.graph_manager.make_rose(rank, [1.0] * rank)
        elif kind == 1:
            g, lengths = self.graph_manager.make_barbell(1.0, 1.0, 1.0)
            for i in range(rank - 2):
                g, lengths = self.graph_manager.attach_loop(g, lengths, i % 2, 1.0)
        else:
            g, _ = self.graph_manager.make_theta(rank + 1, [1.0] * (rank + 1))
        return g, self.bounds_manager.sample_unit_lengths(g, rng)

    # ------------------------------------------------------------------
    # suites; each sample draws from its own generator seeded base ^ index
    # ------------------------------------------------------------------

    def rose_sample(self, index: int, seed: int, n: int) -> SampleOutcome:
        rng = np.random.default_rng(seed)
        r = 30 if index % 10 == 9 else int(rng.integers(3, 9))
        g, _ = self.graph_manager.make_rose(r, [1.0] * r)
        lengths = self.bounds_manager.sample_unit_lengths(g, rng)
        worst = min(self.bounds_manager.check_rose_estimates(lengths), key=lambda rep: rep.margin)
        floor = self.bounds_manager.check_rose_floor(lengths, strategy="maximal")
        return [(seed, worst), (seed, floor)], 0

    def nonloop_sample(self, index: int, seed: int, n: int) -> SampleOutcome:
        rng = np.random.default_rng(seed)
        g, _ = self.graph_manager.make_barbell(1.0, 1.0, 1.0)
        if index % 2:
            g, _ = self.bounds_manager.barbell_with_loop(1.0, 1.0, 1.0, 1.0)
        lengths = self.bounds_manager.sample_unit_lengths(g, rng)
        return [(seed, self.bounds_manager.check_nonloop_estimate(g, lengths, 2, 0, 1))], 0

    def barbell_sample(self, index: int, seed: int, n: int) -> SampleOutcome:
        rng = np.random.default_rng(seed)
        a, b, c = self._uniform(rng, 3)
        reports = [(seed, self.bounds_manager.check_rose_barbell(a, b, c))]
        grid = np.logspace(-3, 2, min(n, self.settings.barbell_grid_points))
        if index < grid.size:
            reports.append((seed, self.bounds_manager.check_barbell_floor(float(grid[index]))))
        return reports, 0

    def collapse_sample(self, index: int, seed: int, n: int) -> SampleOutcome:
        rng = np.random.default_rng(seed)
        if index % 3 == 0:
            g, _ = self.graph_manager.make_theta(4, [1.0] * 4)
        elif index % 3 == 1:
            g, _ = self.bounds_manager.barbell_with_loop(1.0, 1.0, 1.0, 1.0)
        else:
            g, lengths = self.graph_manager.make_theta(3, [1.0] * 3)
            g, _ = self.graph_manager.attach_loop(g, lengths, 0, 1.0)
        lengths = self.bounds_manager.sample_unit_lengths(g, rng)

        candidates = [k for k in range(g.num_pairs) if not g.is_loop(k)]
        pair = min(candidates, key=lambda k: (lengths[k], k))
        collapsed, _ = self.graph_manager.collapse_edge(g, lengths, pair)
        reports = [
            self.bounds_manager.check_collapse_inequality(g, lengths, pair, selection)
            for selection in self.graph_manager.proper_subgraphs(collapsed)
        ]
        checked = [r for r in reports if not r.skipped]
        skipped = len(reports) - len(checked)
        if not checked:
            return [], skipped
        return [(seed, min(checked, key=lambda rep: rep.margin))], skipped

    def assembly_sample(self, index: int, seed: int, n: int) -> SampleOutcome:
        if index == 0:
            g, lengths = self.bounds_manager.assembly_trigger_fixture()
        else:
            rng = np.random.default_rng(seed)
            loop1, loop2, extra = self._uniform(rng, 3)
            bridge = 4.0 * max(loop1, loop2) * np.exp(rng.uniform(0.0, 2.0))
            g, raw = self.bounds_manager.barbell_with_loop(loop1, loop2, bridge, extra)
            lengths = self.spectral_manager.normalize_unit(g, raw)
        return [(seed, self.bounds_manager.check_final_assembly(g, lengths, 2, 0, 1))], 0

    # ------------------------------------------------------------------
    # driver
    # ------------------------------------------------------------------

    def run(self, suite: str, n: int, seed: Optional[int] = None) -> SweepResult:
        base = self.settings.seed if seed is None else seed
        if suite == "all":
            parts = [self.run(name, n, base) for name in SUITES]
            return SweepResult(
                suite="all",
                seed=base,
                reports=tuple(item for part in parts for item in part.reports),
                skipped=sum(part.skipped for part in parts),
            )
        if suite not in self.suites:
            raise ValueError(f"Unknown suite: {suite}")
        if n < 0:
            raise ValueError("sample count must be non-negative")

        sample = self.suites[suite]
        logger.info(f"Running {suite} sweep: {n} samples, seed {base}")
        with ThreadPoolExecutor(max_workers=self.settings.workers) as executor:
            outcomes = list(executor.map(lambda i: sample(i, base ^ i, n), range(n)))

        result = SweepResult(
            suite=suite,
            seed=base,
            reports=tuple(item for reports, _ in outcomes for item in reports),
            skipped=sum(skipped for _, skipped in outcomes),
        )
        logger.info(result.summary())
        if result.skipped:
            logger.warning(f"{result.skipped} {suite} checks skipped: hypotheses not met")
        return result
