"""Road traffic monitoring from roadside channel estimates.

The package synthesizes multipath channels for configurable traffic
scenes, estimates them the way a receiver would, preprocesses the
magnitude series, and trains count/intensity models with cross-validated
grid search. A FastAPI service exposes the pipeline; the bundled CLI is a
thin client of that service.
"""

__version__ = "0.1.0"
