"""Select the training-epoch kernel: compiled extension if importable, else numpy.

Set ``BICVM_PURE_PYTHON=1`` to force the numpy fallback.
"""
import os

from . import _pykernels

try:
    from . import _ckernels
except ImportError:  # extension not built
    _ckernels = None

_BACKENDS = {"python": _pykernels.train_epoch}
if _ckernels is not None:
    _BACKENDS["cython"] = _ckernels.train_epoch

if _ckernels is not None and not os.environ.get("BICVM_PURE_PYTHON"):
    DEFAULT_BACKEND = "cython"
else:
    DEFAULT_BACKEND = "python"


def available_backends():
    return sorted(_BACKENDS)


def get_train_epoch(backend=None):
    name = backend or DEFAULT_BACKEND
    try:
        return _BACKENDS[name]
    except KeyError:
        raise ValueError(f"kernel backend {name!r} unavailable; have {available_backends()}") from None
