"""Exception types shared across the package.

Argument errors raise plain ValueError.  The two classes below mark
failures of the numerical machinery itself, so callers (and the CLI)
can tell them apart from bad input.
"""


class SimulationError(RuntimeError):
    """An event-driven or ray-tracing simulation failed to terminate cleanly."""


class NumericError(RuntimeError):
    """A numerical routine produced an unusable result (overflow, no convergence)."""
