"""harmonic-mpa: harmonic influence by Dirichlet solves and message passing."""

__version__ = "0.1.0"
