"""Monte Carlo simulation of discrete-time quantum walks with random jumps."""

__version__ = "0.1.0"
