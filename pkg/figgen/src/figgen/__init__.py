"""Figure scripts for simulation run directories.

Each figure builder reads one or more of the documented run CSVs
(channels.csv, work_*.csv, sweep_*.csv, survival_*.csv, design_*.csv)
and returns a matplotlib Figure. No simulation code is imported; run
directories are the only interface.
"""

__version__ = "0.1.0"

from .figures import FIGURES, build_figure

__all__ = ["FIGURES", "build_figure", "__version__"]
