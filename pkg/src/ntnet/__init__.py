"""Noise translation for denoising at desk scale.

A small numpy autodiff engine, Wasserstein/spectral statistics, a Gaussian
injection translator and a frozen U-Net denoiser, with training and analysis
tooling. Hot kernels are numba-compiled unless ``NTNET_DISABLE_NUMBA=1``.
"""
from ._accel import HAVE_NUMBA, backend_name
from .config import TrainConfig
from .tensor import NonFiniteError, ShapeError, Tensor, backward

__version__ = "0.1.0"

__all__ = ["HAVE_NUMBA", "backend_name", "TrainConfig", "Tensor", "backward", "ShapeError",
           "NonFiniteError", "__version__"]
