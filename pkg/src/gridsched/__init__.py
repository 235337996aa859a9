"""Cost-optimal uni-/bi-directional EV fleet charging across capacity-capped zones."""

__version__ = "0.1.0"
