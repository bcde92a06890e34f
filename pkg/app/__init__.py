"""ForkPulse - entropy-guided fork exploration for sequence policies"""

__version__ = "0.1.0"
