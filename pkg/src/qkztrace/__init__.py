"""Trace-of-intertwiner solutions of the level-one A_{N-1} qKZ system.

Subpackages by theme: `core` (parameters, weight combinatorics, tensor
maps), `qspecial` (q-series and theta kernels, scalar normalizers),
`rmatrix` (the trigonometric R-matrix), `qkz` (shift operators and
residual meters), `matelem` (closed-form matrix elements and determinant
machinery), `residues` (integral formula, successive-residue and contour
evaluation), `tracefn` (elliptic trace functions), `cli` (command line).
"""

from .core import ModelParams, SpectralVars, TensorMap
from .qspecial import TruncationControl

__all__ = ["ModelParams", "SpectralVars", "TensorMap", "TruncationControl"]
__version__ = "0.1.0"
