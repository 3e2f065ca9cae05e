"""Desk-scale physics of an optomechanical self-excited oscillator.

Subpackages cover the optical intensity profile and envelope coefficients
(:mod:`.cavity`), the stochastic amplitude equation and sensing formulas
(:mod:`.envelope`), the unreduced thermo-mechanical dynamics (:mod:`.fulldyn`),
the reduced phase equation (:mod:`.adler`), spectrum-analyzer emulation
(:mod:`.spectral`), general circle maps (:mod:`.circlemap`), and the CLI
configuration/runner pair (:mod:`.config`, :mod:`.runner`).
"""

__version__ = "0.1.0"

from .adler import AdlerParams
from .cavity import CavityParams, ThermoMechParams
from .envelope import EnvelopeCoefficients
from .errors import SeoSyncError
from .fulldyn import DriveProgram, FullState
from .timeseries import TimeSeries

__all__ = [
    "__version__",
    "AdlerParams",
    "CavityParams",
    "DriveProgram",
    "EnvelopeCoefficients",
    "FullState",
    "SeoSyncError",
    "ThermoMechParams",
    "TimeSeries",
]
