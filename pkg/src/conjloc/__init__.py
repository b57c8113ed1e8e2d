"""Evolutes of plane ovals and conjugate loci on convex surfaces."""

__version__ = "0.1.0"
