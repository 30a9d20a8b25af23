"""Natural-language body shape toolkit: parametric meshes, measurements,
quantile labels, dataset generation, inverse solving, and evaluation."""

__version__ = "0.1.0"
