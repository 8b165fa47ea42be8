"""Green-function toolkit for the electromagnetic vacuum of point-dipole media.

Submodules
----------
spectral          free propagators, self-energy constants, radial quadrature
media             susceptibility models and Maxwell-Garnett media
propagators       Dyson and polarization propagators, self-energy integrals
renormalization   radiative renormalization of the polarizability
emission          LDOS and emitted-power decompositions
vacuum_energy     Schwinger and local-field vacuum energies
cdm               coupled-dipole Monte-Carlo oracle
cli               ``dipole-vacuum`` command line
"""

from importlib.metadata import PackageNotFoundError, version as _version

try:
    __version__ = _version("artifact")
except PackageNotFoundError:  # pragma: no cover
    __version__ = "0.0.0+local"

