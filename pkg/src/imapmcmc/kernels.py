"""Kernel backend selection.

The compiled extension is used when it was built; otherwise the numpy
implementation is loaded. Set ``IMAPMCMC_KERNELS=python`` to force the
fallback.
"""

import importlib
import os


def load(name=None):
    """Return the kernel module for ``name`` ("cython" or "python")."""
    if name is None:
        name = os.environ.get("IMAPMCMC_KERNELS", "auto").lower()
    if name == "python":
        return importlib.import_module("imapmcmc._pykernels")
    try:
        return importlib.import_module("imapmcmc._ckernels")
    except ImportError:
        if name == "cython":
            raise
        return importlib.import_module("imapmcmc._pykernels")


_impl = load()

BACKEND = _impl.BACKEND
partial_corr = _impl.partial_corr
logdet_sub = _impl.logdet_sub
