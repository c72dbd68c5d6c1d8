"""Risk-aware value-oriented net demand forecasting for a virtual power plant."""

__version__ = "0.1.0"
