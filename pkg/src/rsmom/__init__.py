"""Central values and ring-class-character moments of self-dual
Rankin-Selberg L-functions over Q, plus shifted convolution experiments."""

__version__ = "0.1.0"
