"""Six-state quantum key distribution: optimal single-qubit eavesdropping,
information curves, Monte Carlo sessions and Bell-test analysis."""

__version__ = "0.1.0"
