"""
Utility modules for the HJ toolkit
"""

from . import config
from . import export
from . import run_context
