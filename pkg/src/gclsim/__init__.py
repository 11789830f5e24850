"""gclsim: driven dissipative nonlinear quantum oscillator simulator.

Implements a family of time-local master equations for a driven Kerr
oscillator coupled to a bath through mixed position/momentum channels:
the interpolating Caldeira-Leggett form CL(theta), its generalization gCL
with dissipators dressed by the nonlinearity and the drive, and the Lindblad
point theta = pi/4. A matching semiclassical layer covers ringdown, linear
response, and rotating-wave continuation; the ``expcli`` subpackage turns
named experiments into reproducible CSV/JSON outputs.
"""

__version__ = "0.1.0"

from .model import DriveTone, ModelParams  # noqa: F401
