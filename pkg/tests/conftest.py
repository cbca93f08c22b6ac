import math
import sys
from pathlib import Path

import pytest

project_root = Path(__file__).parent.parent
sys.path.insert(0, str(project_root))

from managers.blowup_manager import BlowupManager
from managers.bounds_manager import BoundsManager
from managers.explorer_manager import ExplorerManager
from managers.graph_file_manager import GraphFileManager
from managers.graph_manager import GraphManager
from managers.settings_manager import BoundsSettings, ExplorerSettings
from managers.spectral_manager import SpectralManager
from nodes.verify_nodes import VerifyNodes

FIXTURES = project_root / "config" / "fixtures"
LOG2_OVER_LOG3 = math.log(2) / math.log(3)


@pytest.fixture
def fixtures_dir():
    return FIXTURES


@pytest.fixture
def graph_manager():
    return GraphManager()


@pytest.fixture
def file_manager(graph_manager):
    return GraphFileManager(graph_manager)


@pytest.fixture
def spectral_manager(graph_manager):
    return SpectralManager(graph_manager=graph_manager)


@pytest.fixture
def blowup_manager(spectral_manager, graph_manager):
    return BlowupManager(spectral_manager=spectral_manager, graph_manager=graph_manager)


@pytest.fixture
def explorer_manager(spectral_manager, graph_manager):
    settings = ExplorerSettings(restarts=2, max_iter=300, workers=2)
    return ExplorerManager(settings, spectral_manager, graph_manager)


@pytest.fixture
def bounds_manager(spectral_manager, explorer_manager, graph_manager):
    return BoundsManager(BoundsSettings(workers=2), spectral_manager, explorer_manager, graph_manager)


@pytest.fixture
def verify_nodes(graph_manager, spectral_manager, bounds_manager):
    return VerifyNodes(graph_manager, spectral_manager, bounds_manager)


@pytest.fixture
def theta4(graph_manager):
    """Four parallel edges at log 3: unit entropy, every G - e at log2/log3."""
    return graph_manager.make_theta(4, [math.log(3)] * 4)


@pytest.fixture
def rose3(graph_manager):
    return graph_manager.make_rose(3, [math.log(5)] * 3)


@pytest.fixture
def unit_barbell(graph_manager):
    return graph_manager.make_barbell(math.log(2), math.log(2), math.log(2))
