import math
from typing import Dict, List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, Field
from scipy.optimize import brentq

from logger import logger
from managers.errors import PreconditionError
from managers.explorer_manager import ExplorerManager
from managers.graph_manager import Graph, GraphManager, LengthFunction, SubgraphSelection
from managers.settings_manager import BoundsSettings
from managers.spectral_manager import SpectralManager

BARBELL_FLOOR = 0.2


class BoundReport(BaseModel):
    """
    Outcome of one inequality check.

    margin is signed so that positive means the inequality holds with room
    to spare: rhs - lhs for upper bounds, lhs - rhs for lower bounds.
    """

    name: str
    lhs: float
    rhs: float
    satisfied: bool
    margin: float
    context: str = ""
    skipped: bool = False
    details: Dict[str, float] = Field(default_factory=dict)


def _fmt(values) -> str:
    return ",".join(f"{x:.6g}" for x in values)


class BoundsManager:
    def __init__(
        self,
        settings: Optional[BoundsSettings] = None,
        spectral_manager: Optional[SpectralManager] = None,
        explorer_manager: Optional[ExplorerManager] = None,
        graph_manager: Optional[GraphManager] = None,
    ):
        self.settings = settings or BoundsSettings()
        self.graph_manager = graph_manager or GraphManager()
        self.spectral_manager = spectral_manager or SpectralManager(graph_manager=self.graph_manager)
        self.explorer_manager = explorer_manager or ExplorerManager(
            spectral_manager=self.spectral_manager, graph_manager=self.graph_manager
        )

    # ------------------------------------------------------------------
    # sampling
    # ------------------------------------------------------------------

    def sample_unit_lengths(self, g: Graph, rng: np.random.Generator) -> LengthFunction:
        """Log-lengths uniform in [-R, R], then scaled to unit entropy."""
        bound = self.settings.log_length_range
        raw = LengthFunction.from_array(np.exp(rng.uniform(-bound, bound, g.num_pairs)))
        return self.spectral_manager.normalize_unit(g, raw)

    # ------------------------------------------------------------------
    # two-petal roses and barbells
    # ------------------------------------------------------------------

    @staticmethod
    def r2_curve(x: float) -> float:
        """Second petal length that puts the 2-rose (x, .) at unit entropy."""
        if x <= 0:
            raise ValueError("petal length must be positive")
        q = math.exp(-x)
        return -math.log((1.0 - q) / (1.0 + 3.0 * q))

    def check_rose_barbell(self, a: float, b: float, c: float) -> BoundReport:
        """Barbell (a, b, c) against the 2-rose (a, b + 2c): the barbell is never below."""
        barbell, barbell_lengths = self.graph_manager.make_barbell(a, b, c)
        rose, rose_lengths = self.graph_manager.make_rose(2, (a, b + 2.0 * c))
        lhs = self.spectral_manager.entropy(barbell, barbell_lengths)
        rhs = self.spectral_manager.entropy(rose, rose_lengths)
        return BoundReport(
            name="rose_barbell",
            lhs=lhs,
            rhs=rhs,
            satisfied=lhs >= rhs - self.settings.slack,
            margin=lhs - rhs,
            context=f"a,b,c={_fmt((a, b, c))}",
        )

    def check_barbell_floor(self, c: float) -> BoundReport:
        """Barbell with loops 3 exp(-c/2) and c/4 keeps entropy at least 0.2."""
        if c <= 0:
            raise ValueError("bridge length must be positive")
        g, lengths = self.graph_manager.make_barbell(3.0 * math.exp(-c / 2.0), c / 4.0, c)
        lhs = self.spectral_manager.entropy(g, lengths)
        return BoundReport(
            name="barbell_floor",
            lhs=lhs,
            rhs=BARBELL_FLOOR,
            satisfied=lhs >= BARBELL_FLOOR - self.settings.slack,
            margin=lhs - BARBELL_FLOOR,
            context=f"c={c:.6g}",
        )

    # ------------------------------------------------------------------
    # roses
    # ------------------------------------------------------------------

    def _rose_estimate(self, lengths: LengthFunction, mu: np.ndarray, i: int, k: int) -> BoundReport:
        lhs = math.exp(lengths[i]) * mu[2 * i]
        rhs = 4.0 * math.exp(lengths[k]) * mu[2 * k]
        return BoundReport(
            name="rose_estimate",
            lhs=lhs,
            rhs=rhs,
            satisfied=lhs < rhs,
            margin=rhs - lhs,
            context=f"i={i},k={k},lengths={_fmt(lengths.values)}",
        )

    def _rose_measure(self, lengths: LengthFunction) -> np.ndarray:
        g, lengths = self.graph_manager.make_rose(len(lengths), lengths.values)
        return self.spectral_manager.equilibrium_measure(g, lengths).mu

    def check_rose_estimate(self, lengths: LengthFunction, i: int, k: int) -> BoundReport:
        """exp(l(e_i)) mu(e_i) < 4 exp(l(e_k)) mu(e_k) on a unit rose."""
        r = len(lengths)
        if i == k or not (0 <= i < r and 0 <= k < r):
            raise PreconditionError(f"need two distinct petals of a {r}-rose, got {i} and {k}")
        return self._rose_estimate(lengths, self._rose_measure(lengths), i, k)

    def check_rose_estimates(self, lengths: LengthFunction) -> List[BoundReport]:
        """All ordered petal pairs, sharing one equilibrium measure."""
        mu = self._rose_measure(lengths)
        r = len(lengths)
        return [
            self._rose_estimate(lengths, mu, i, k)
            for i in range(r)
            for k in range(r)
            if i != k
        ]

    @staticmethod
    def rose_floor(r: int) -> float:
        """Lower bound for entropy-sup on unit r-roses."""
        if r < 3:
            raise PreconditionError("the rose floor is stated for r >= 3")
        if r < 29:
            return BARBELL_FLOOR
        return 1.0 - 4.0 / math.log(2 * r - 3)

    def check_rose_floor(self, lengths: LengthFunction, strategy: str = "auto") -> BoundReport:
        """Compare entropy-sup of the unit rose with rose_floor(r)."""
        r = len(lengths)
        g, lengths = self.graph_manager.make_rose(r, lengths.values)
        sup = self.explorer_manager.entropy_sup(g, lengths, strategy)
        floor = self.rose_floor(r)
        return BoundReport(
            name="rose_floor",
            lhs=sup.value,
            rhs=floor,
            satisfied=sup.value >= floor - 1e-9,
            margin=sup.value - floor,
            context=f"r={r},lengths={_fmt(lengths.values)}",
        )

    # ------------------------------------------------------------------
    # non-loop edges
    # ------------------------------------------------------------------

    def _check_incidence(self, g: Graph, pair: int, loop1: int, loop2: int) -> None:
        for k in (pair, loop1, loop2):
            g.check_pair(k)
        if g.is_loop(pair):
            raise PreconditionError(f"edge {g.pair_labels[pair]} must not be a loop")
        origin, terminus = g.pair_ends[pair]
        if g.pair_ends[loop1] != (origin, origin):
            raise PreconditionError(f"edge {g.pair_labels[loop1]} is not a loop at the origin")
        if g.pair_ends[loop2] != (terminus, terminus):
            raise PreconditionError(f"edge {g.pair_labels[loop2]} is not a loop at the terminus")

    def check_nonloop_estimate(
        self, g: Graph, lengths: LengthFunction, pair: int, loop1: int, loop2: int
    ) -> BoundReport:
        """
        exp(l(e)) mu(e) <= 2 exp(l(g1) + l(g2)) (mu(g1) + mu(g2)).

        details carries the Perron entries along e: X_u, Y_u are u on e and
        its reverse, X_v, Y_v the matching entries of exp(l(e)) v.
        """
        self._check_incidence(g, pair, loop1, loop2)
        perron = self.spectral_manager.perron_pair(g, lengths)
        mu = perron.u * perron.v
        forward, backward = 2 * pair, 2 * pair + 1
        scale = math.exp(lengths[pair])

        lhs = scale * mu[forward]
        rhs = 2.0 * math.exp(lengths[loop1] + lengths[loop2]) * (mu[2 * loop1] + mu[2 * loop2])
        return BoundReport(
            name="nonloop_estimate",
            lhs=lhs,
            rhs=rhs,
            satisfied=lhs <= rhs + self.settings.nonloop_slack * max(1.0, rhs),
            margin=rhs - lhs,
            context=f"{g.name}:e={g.pair_labels[pair]},lengths={_fmt(lengths.values)}",
            details={
                "X_u": float(perron.u[forward]),
                "Y_u": float(perron.u[backward]),
                "X_v": float(scale * perron.v[forward]),
                "Y_v": float(scale * perron.v[backward]),
            },
        )

    # ------------------------------------------------------------------
    # edge collapse
    # ------------------------------------------------------------------

    def _skipped(self, name: str, context: str) -> BoundReport:
        logger.debug(f"Skipping {name} check: {context}")
        return BoundReport(
            name=name, lhs=math.nan, rhs=math.nan, satisfied=True,
            margin=math.nan, context=context, skipped=True,
        )

    def check_collapse_inequality(
        self, g: Graph, lengths: LengthFunction, pair: int, selection: SubgraphSelection
    ) -> BoundReport:
        """
        h_H <= h_H' <= 2 h_H for H' in the collapsed graph and H its pre-image plus e.

        Requires l(e) to be no longer than any edge of H; otherwise the
        report comes back skipped.
        """
        g.check_pair(pair)
        if g.is_loop(pair):
            return self._skipped("collapse", f"{g.name}: edge {g.pair_labels[pair]} is a loop")
        collapsed, collapsed_lengths = self.graph_manager.collapse_edge(g, lengths, pair)
        sub_prime, sub_prime_lengths = self.graph_manager.delete_edges(
            collapsed, collapsed_lengths, selection
        )

        preimage = {k if k < pair else k + 1 for k in selection.kept_pairs}
        context = f"{g.name}:e={g.pair_labels[pair]},H'={selection.label(collapsed)}"
        if any(lengths[k] < lengths[pair] for k in preimage):
            return self._skipped("collapse", context + ",edge shorter than e in H")

        sub, sub_lengths = self.graph_manager.induced_subgraph(g, lengths, preimage | {pair})
        lower = self.spectral_manager.entropy(sub, sub_lengths)
        middle = self.spectral_manager.entropy(sub_prime, sub_prime_lengths)
        slack = self.settings.slack
        return BoundReport(
            name="collapse",
            lhs=middle,
            rhs=2.0 * lower,
            satisfied=lower <= middle + slack and middle <= 2.0 * lower + slack,
            margin=min(middle - lower, 2.0 * lower - middle),
            context=context,
            details={"h_H": lower, "h_H_prime": middle},
        )

    # ------------------------------------------------------------------
    # assembly
    # ------------------------------------------------------------------

    def check_final_assembly(
        self, g: Graph, lengths: LengthFunction, pair: int, loop1: int, loop2: int
    ) -> BoundReport:
        """
        h(G - e) >= 1 - 2 exp(-l(e)/2) / m with m the shorter of the two loops.

        When m <= 3 exp(-l(e)/2) the sub-barbell on (g1, g2, e) must also
        reach the barbell floor.
        """
        self._check_incidence(g, pair, loop1, loop2)
        bridge = lengths[pair]
        if max(lengths[loop1], lengths[loop2]) > bridge / 4.0:
            raise PreconditionError("both loops must be at most a quarter of the bridge length")
        self.spectral_manager.require_unit(g, lengths)

        m = min(lengths[loop1], lengths[loop2])
        decay = math.exp(-bridge / 2.0)
        rest, rest_lengths = self.graph_manager.delete_edges(
            g, lengths, self.graph_manager.complement_of(g, [pair])
        )
        lhs = self.spectral_manager.entropy(rest, rest_lengths)
        rhs = 1.0 - 2.0 * decay / m
        slack = self.settings.slack
        satisfied = lhs >= rhs - slack
        margin = lhs - rhs
        details = {"m": m, "trigger": 0.0}

        if m <= 3.0 * decay:
            barbell, barbell_lengths = self.graph_manager.induced_subgraph(
                g, lengths, {pair, loop1, loop2}
            )
            barbell_entropy = self.spectral_manager.entropy(barbell, barbell_lengths)
            details.update(trigger=1.0, barbell_entropy=barbell_entropy)
            satisfied = satisfied and barbell_entropy >= BARBELL_FLOOR - slack
            margin = min(margin, barbell_entropy - BARBELL_FLOOR)

        return BoundReport(
            name="assembly",
            lhs=lhs,
            rhs=rhs,
            satisfied=satisfied,
            margin=margin,
            context=f"{g.name}:e={g.pair_labels[pair]},lengths={_fmt(lengths.values)}",
            details=details,
        )

    def barbell_with_loop(
        self, loop1: float, loop2: float, bridge: float, extra: float
    ) -> Tuple[Graph, LengthFunction]:
        """Barbell (loop1 at v, loop2 at w, bridge v-w) plus a third loop at v."""
        g, lengths = self.graph_manager.make_barbell(loop1, loop2, bridge)
        return self.graph_manager.attach_loop(g, lengths, 0, extra)

    def assembly_trigger_fixture(self, bridge: float = 4.0) -> Tuple[Graph, LengthFunction]:
        """
        Unit-entropy barbell-with-loop sitting exactly on the trigger threshold:
        loop1 = 3 exp(-bridge/2), loop2 = bridge/4, extra loop solved for.
        """
        loop1, loop2 = 3.0 * math.exp(-bridge / 2.0), bridge / 4.0

        def excess(log_extra: float) -> float:
            g, lengths = self.barbell_with_loop(loop1, loop2, bridge, math.exp(log_extra))
            return self.spectral_manager.entropy(g, lengths) - 1.0

        log_extra = brentq(excess, math.log(1e-3), math.log(1e3), xtol=1e-14)
        return self.barbell_with_loop(loop1, loop2, bridge, math.exp(log_extra))
