"""Runtime monitors for the environment assumptions of assume-guarantee contracts."""

__version__ = "0.1.0"
