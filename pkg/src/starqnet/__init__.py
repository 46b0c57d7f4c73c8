"""starqnet: discrete-event simulator of star-topology photonic quantum networks."""

__version__ = "0.1.0"

from .engine import RngStream, Scheduler, SimTime, draw_bernoulli  # noqa: F401
