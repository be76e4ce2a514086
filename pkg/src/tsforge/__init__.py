"""Dual-engine (LSTM and SARIMA) forecasting of daily index closes."""

__version__ = "0.1.0"
