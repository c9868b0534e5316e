"""Volume-preserving centro-affine normal flow of centrally symmetric convex
bodies in R^{n+1} (n = 1, 2), represented by support functions on the unit
sphere."""

__version__ = "0.1.0"
