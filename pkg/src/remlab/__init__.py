"""remlab: recurrence machinery for diffusions in random environments."""

__version__ = "0.1.0"
