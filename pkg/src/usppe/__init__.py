"""Payoff bounds and self-generation checks for repeated games with private monitoring and cheap talk."""

__version__ = "0.1.0"
