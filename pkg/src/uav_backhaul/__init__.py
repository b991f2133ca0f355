"""Association, power and placement optimization for UAVs backhauled by tethered balloons."""

__version__ = "0.1.0"
