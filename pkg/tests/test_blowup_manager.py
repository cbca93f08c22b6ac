import math

import numpy as np
import pytest

from managers.errors import GraphError, NormalizationError, PreconditionError
from managers.graph_manager import LengthFunction
from tests.conftest import LOG2_OVER_LOG3


def test_direct_subgraph_entropy(blowup_manager, theta4, rose3):
    for pair in range(4):
        assert blowup_manager.subgraph_entropy_direct(*theta4, pair) == pytest.approx(
            LOG2_OVER_LOG3, abs=1e-9
        )
    # the 2-rose at log 5 solves 4x/(1+x) = 1 at x = 1/3
    assert blowup_manager.subgraph_entropy_direct(*rose3, 0) == pytest.approx(
        math.log(3) / math.log(5), abs=1e-9
    )


def test_direct_on_disconnecting_edge(blowup_manager, unit_barbell):
    # removing the bridge leaves two single loops
    assert blowup_manager.subgraph_entropy_direct(*unit_barbell, 2) == 0.0


def test_integral_matches_direct_on_theta(blowup_manager, theta4):
    result = blowup_manager.integrate(*theta4, 0)
    assert result.value == pytest.approx(LOG2_OVER_LOG3, abs=1e-6)
    assert result.tail_bound < blowup_manager.settings.tail_tol
    assert result.j_end == pytest.approx(LOG2_OVER_LOG3, abs=1e-6)


def test_integral_matches_direct_on_random_fixture(blowup_manager, spectral_manager, bounds_manager):
    rng = np.random.default_rng(2024)
    g, _ = bounds_manager.barbell_with_loop(1.0, 1.0, 1.0, 1.0)
    lengths = spectral_manager.normalize_unit(
        g, LengthFunction.from_array(np.exp(rng.uniform(-1, 1, 4)))
    )
    for pair in (0, 2):
        direct = blowup_manager.subgraph_entropy_direct(g, lengths, pair)
        integral = blowup_manager.subgraph_entropy_integral(g, lengths, pair)
        assert abs(direct - integral) < 1e-4


def test_scaling_starts_at_one_and_decreases(blowup_manager, theta4):
    setup = blowup_manager.prepare(*theta4, 1)
    values = [blowup_manager.scaling(setup, t) for t in np.linspace(0.0, 15.0, 16)]
    assert values[0] == 1.0
    assert all(b <= a + 1e-12 for a, b in zip(values, values[1:]))
    assert all(v >= setup.j_floor - 1e-9 for v in values)


def test_psi_t_stays_at_unit_entropy(blowup_manager, spectral_manager, rose3):
    g, _ = rose3
    for t in (0.5, 3.0, 10.0):
        psi = blowup_manager.psi_t(*rose3, 2, t)
        assert psi[2] == pytest.approx(math.log(5) + t)
        assert spectral_manager.entropy(g, psi) == pytest.approx(1.0, abs=1e-9)


@pytest.mark.parametrize("t", [0.5, 2.0, 5.0])
def test_j_prime_matches_finite_differences(blowup_manager, theta4, t):
    h = 1e-4
    fd = (blowup_manager.j_value(*theta4, 0, t + h) - blowup_manager.j_value(*theta4, 0, t - h)) / (2 * h)
    assert blowup_manager.j_prime(*theta4, 0, t) == pytest.approx(fd, rel=1e-5)


def test_j_prime_decays(blowup_manager, rose3):
    assert abs(blowup_manager.j_prime(*rose3, 0, 30.0)) < 10 * math.exp(-30.0)


def test_ode_cross_check(blowup_manager, theta4):
    assert blowup_manager.j_ode(*theta4, 0, 2.0) == pytest.approx(
        blowup_manager.j_value(*theta4, 0, 2.0), abs=1e-7
    )


def test_blowup_trace(blowup_manager, theta4):
    trace = blowup_manager.blowup_trace(*theta4, 0, horizon=10.0, n_samples=11)
    frame = trace.to_frame()
    assert list(frame.columns) == ["t", "j", "j_prime", "mu_e", "denom"]
    assert len(frame) == 11
    assert frame["t"].iloc[-1] == pytest.approx(10.0)
    assert frame["j"].iloc[0] == 1.0
    assert (frame["j_prime"] < 0).all()
    assert trace.tail_bound < 1e-3
    assert trace.to_csv().splitlines()[0] == "t,j,j_prime,mu_e,denom"


def test_blowup_trace_log_spacing(blowup_manager, theta4):
    trace = blowup_manager.blowup_trace(*theta4, 0, horizon=8.0, n_samples=5, spacing="log")
    ts = [s.t for s in trace.samples]
    assert ts[0] == 0.0 and ts[-1] == pytest.approx(8.0)
    assert ts == sorted(ts)


def test_blowup_trace_arguments(blowup_manager, theta4):
    with pytest.raises(GraphError):
        blowup_manager.blowup_trace(*theta4, 0, horizon=0.0, n_samples=5)
    with pytest.raises(ValueError):
        blowup_manager.blowup_trace(*theta4, 0, horizon=1.0, n_samples=5, spacing="cubic")


def test_preconditions(blowup_manager, graph_manager, unit_barbell):
    with pytest.raises(PreconditionError):
        blowup_manager.prepare(*unit_barbell, 0)

    hanging = graph_manager.build_graph([("v", "v")] * 3 + [("v", "u")])
    with pytest.raises(PreconditionError):
        blowup_manager.prepare(hanging, LengthFunction((1.0,) * 4), 0)

    split = graph_manager.build_graph([("a", "a")] * 3 + [("b", "b")])
    with pytest.raises(PreconditionError):
        blowup_manager.prepare(split, LengthFunction((1.0,) * 4), 0)

    rose, lengths = graph_manager.make_rose(3, [1.0] * 3)
    with pytest.raises(NormalizationError):
        blowup_manager.prepare(rose, lengths, 0)
    with pytest.raises(GraphError):
        blowup_manager.prepare(rose, lengths, 5)


@pytest.mark.parametrize("seed", [1, 2, 3, 4])
def test_integral_matches_direct_on_sampled_fixtures(blowup_manager, verify_nodes, seed):
    rng = np.random.default_rng(seed)
    g, lengths = verify_nodes.random_fixture(rng)
    pair = int(rng.integers(g.num_pairs))
    direct = blowup_manager.subgraph_entropy_direct(g, lengths, pair)
    integral = blowup_manager.subgraph_entropy_integral(g, lengths, pair)
    assert abs(direct - integral) < 1e-4


@pytest.mark.parametrize("seed", [5, 6, 7])
def test_j_prime_matches_finite_differences_on_sampled_fixtures(blowup_manager, verify_nodes, seed):
    rng = np.random.default_rng(seed)
    g, lengths = verify_nodes.random_fixture(rng)
    pair = int(rng.integers(g.num_pairs))
    h = 1e-4
    for t in (0.5, 2.0):
        fd = (
            blowup_manager.j_value(g, lengths, pair, t + h)
            - blowup_manager.j_value(g, lengths, pair, t - h)
        ) / (2 * h)
        assert blowup_manager.j_prime(g, lengths, pair, t) == pytest.approx(fd, rel=1e-4, abs=1e-7)
