"""grapple: exact computations in graph complexes, wheeled props and
polydifferential operads."""

__version__ = "0.1.0"
