"""Kernel backend selection: compiled core when importable, numpy otherwise.

Set COPOLYMER_PURE=1 to force the numpy fallback.
"""

import os

from . import _fallback

BACKEND = "numpy"
_core = None
if not os.environ.get("COPOLYMER_PURE"):
    try:
        from . import _core  # noqa: F811
        BACKEND = "cython"
    except ImportError:
        _core = None

_impl = _core if _core is not None else _fallback

chain = _impl.chain
excursion_logz0 = _impl.excursion_logz0
StretchScanner = _impl.StretchScanner


def backend(name):
    """Kernel namespace by name ('cython' or 'numpy')."""
    if name == "numpy":
        return _fallback
    if name == "cython":
        if _core is None:
            raise ImportError("compiled core not built")
        return _core
    raise ValueError(name)


def use(name):
    """Switch the module-level kernels for the rest of the process."""
    global BACKEND, chain, excursion_logz0, StretchScanner
    impl = backend(name)
    BACKEND = name
    chain = impl.chain
    excursion_logz0 = impl.excursion_logz0
    StretchScanner = impl.StretchScanner
