"""
scss-sim: squeezed coherent-state superposition simulator.

Truncated-Fock-space model of a heralded squeezed-cat generation protocol:
heralded Fock resource states, lossy storage, tunable beam-splitter
interaction, quadrature heralding, closest-SCSS optimization, Wigner
analysis and maximum-likelihood homodyne tomography.
"""

from pathlib import Path

__version__ = "0.1.0"
__license__ = "MIT"

# Load .env before any submodule reads SCSS_SIM_* variables
try:
    from dotenv import load_dotenv

    load_dotenv(Path.cwd() / ".env")
except ImportError:
    pass  # python-dotenv not installed

# Submodules are available for import but not automatically loaded
# Example usage:
#   from scss_sim.core.fock import cat_state, ScssParams
#   from scss_sim.phases.protocol import simulate_scss
#   from scss_sim.utils.logger import logger

__all__ = [
    "__version__",
    "__license__",
]
