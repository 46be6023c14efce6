"""Feed rate scheduling for NURBS tool paths under chord error and jerk limits."""

__version__ = "0.1.0"
