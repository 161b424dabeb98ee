"""Free fall in a spherical gravity field to second order in 1/R: classical
trajectories, atom-interferometer phases and the leading Wigner correction."""

__version__ = "0.1.0"
