"""Backend selection for the recurrent kernels.

The compiled ``_kernels`` extension is used when it imports; otherwise the
numpy implementation in ``_pykernels``. Set ``WAVESEQ_KERNELS=python`` to
force the fallback.
"""
import importlib
import os

from ._pykernels import ACT_RELU, ACT_TANH

ACTIVATIONS = {"tanh": ACT_TANH, "relu": ACT_RELU}


def load_backend(name=None):
    """Return the kernel module for ``name`` ('cython', 'python' or None for auto)."""
    if name is None:
        name = os.environ.get("WAVESEQ_KERNELS", "auto").lower()
    if name == "python":
        return importlib.import_module("waveseq.net._pykernels")
    try:
        return importlib.import_module("waveseq.net._kernels")
    except ImportError:
        if name == "cython":
            raise
        return importlib.import_module("waveseq.net._pykernels")


_impl = load_backend()
BACKEND = "cython" if _impl.__name__.endswith("._kernels") else "python"

lstm_forward = _impl.lstm_forward
lstm_backward = _impl.lstm_backward
rnn_forward = _impl.rnn_forward
rnn_backward = _impl.rnn_backward
