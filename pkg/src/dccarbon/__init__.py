"""Online low-carbon coordination of distributed data centers via drift-plus-penalty control."""

__version__ = "0.1.0"
