"""trajkit: evaluation, curation, and training-data tooling for multi-turn
tool-calling trajectories."""

__version__ = "0.1.0"
