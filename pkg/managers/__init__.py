from .graph_manager import GraphManager
from .graph_file_manager import GraphFileManager
from .settings_manager import SettingsManager
from .spectral_manager import SpectralManager
from .blowup_manager import BlowupManager
from .explorer_manager import ExplorerManager
from .bounds_manager import BoundsManager

__all__ = [
    'GraphManager',
    'GraphFileManager',
    'SettingsManager',
    'SpectralManager',
    'BlowupManager',
    'ExplorerManager',
    'BoundsManager',
]
