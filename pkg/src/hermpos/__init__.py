"""Constructive Hermitian positivstellensatz certificates and the integral
operator asymptotics behind them, on complex projective space."""

__version__ = "0.1.0"
