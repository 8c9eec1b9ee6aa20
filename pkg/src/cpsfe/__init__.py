"""Private two-party evaluation built on oblivious transfer and indirect indexing."""

__version__ = "0.1.0"
