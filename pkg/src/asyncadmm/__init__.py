"""Asynchronous decentralised ADMM over subgraph covers."""

__version__ = "0.1.0"
