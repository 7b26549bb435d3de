"""Coverage planning for cellular networks with wind-turbine-mounted base stations."""

__version__ = "0.1.0"
