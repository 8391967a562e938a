"""Thermal-plant operations under variable renewables.

Ingest hourly plant and region data, compute operating metrics and bounding
emissions scenarios, fit fixed-effects log-log panel regressions and turn
paired coefficients into emissions-displacement fractions.
"""

__version__ = "0.1.0"
