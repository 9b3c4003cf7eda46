"""Numerical laboratory for null controllability of the 2D Stokes system
through a single velocity component.

The compiled extension carries the whole surface: mesh and observation-mask
construction, the stream-function eigenbasis, spectral window constants and
their growth law, closed-form modal evolution, Gramian steering, the dyadic
multi-stage controller, the penalized comparator, cost curves with blow-up
exponent fits, the two-weight observation certificate, and an in-process
entry point for the command-line driver.
"""

try:  # installed wheel layout: extension lives inside the package
    from ._stokeslab import *  # noqa: F401,F403
    from . import _stokeslab as _impl
except ImportError:  # build-tree layout: extension sits directly on sys.path
    from _stokeslab import *  # noqa: F401,F403
    import _stokeslab as _impl

__all__ = [name for name in dir(_impl) if not name.startswith("_")]
__version__ = "0.1.0"
