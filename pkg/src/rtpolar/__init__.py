"""Retweet-network polarization analysis: windowed graphs, communities, flows and bot scores."""

__version__ = "0.1.0"
