"""Floquet-Liouville simulator for optical spin read-out of a quantum-dot electron.

The electron spin is read out through an AC-Stark-induced cycling transition:
a far-detuned circularly polarized laser dresses the Voigt-configured
4-level system into a pseudo-Faraday one, and a weak near-resonant laser
drives the selected cycling transition.
"""

from importlib.metadata import PackageNotFoundError, version

try:
    __version__ = version("floquet-readout")
except PackageNotFoundError:
    __version__ = "0.0.0"
