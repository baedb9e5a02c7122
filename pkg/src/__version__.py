"""Version information for the FLP Emergence Simulator."""

__version__ = "1.0.0"
__author__ = "Community Contributors"
__email__ = "your.email@example.com"
__description__ = (
    "Deterministic asynchronous consensus simulator with a paraconsistent logic engine"
)
__url__ = "https://github.com/yourusername/flp-emergence"
__license__ = "MIT"
