"""Spectra of the Robin Laplacian with large parameter on curvilinear polygons."""

__version__ = "0.1.0"
