"""Circular 2-D convolution operators acting on unfolded image stacks.

An operator D is defined by a small real kernel and target plane size
(h, w). Applying D to a matrix x of shape (h*w, b) folds each column to
an h x w plane (column-major), slides the kernel over it with periodic
boundary, and unfolds again. Offsets are taken relative to the kernel's
anchor tap, with out[i, j] = sum_{a,b} taps[a, b] * plane[(i + a - ar) % h,
(j + b - ac) % w]; this matches the usual image-filtering convention.

Because the boundary is periodic, D restricted to one column is a
block-circulant matrix, so the 2-D DFT diagonalizes it. The eigenvalue
grid (``spectrum``) is computed eagerly at construction and both apply
and adjoint run as pointwise multiplications between FFT passes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DegenerateKernelError, DimensionError
from .tensors import read_matrix_csv

# Built-in taps, unnormalized, with each kernel's natural anchor. diff_row
# differences adjacent rows within a column, diff_col adjacent columns within
# a row. central_diff averages the two one-sided differences along each axis.
# sobel is the compact 2x2 sum of first differences along both axes
# (out = x[i+1,j] + x[i,j+1] - 2 x[i,j]); like every derivative stencil here
# its taps sum to zero, so constants are annihilated. laplacian1 is the
# 4-neighbor Laplacian stencil, laplacian2 the 8-neighbor one. The centered
# 3x3 stencils anchor at their middle tap, which keeps the symmetric ones
# self-adjoint; anchoring elsewhere only multiplies the spectrum by a phase,
# so norms and solver outputs would not change.
_BUILTINS = {
    "identity": ([[1.0]], (0, 0)),
    "diff_row": ([[-1.0], [1.0]], (0, 0)),
    "diff_col": ([[-1.0, 1.0]], (0, 0)),
    "central_diff": (
        [[0.0, -0.5, 0.0], [-0.5, 0.0, 0.5], [0.0, 0.5, 0.0]],
        (1, 1),
    ),
    "sobel": ([[-2.0, 1.0], [1.0, 0.0]], (0, 0)),
    "laplacian1": (
        [[0.0, -1.0, 0.0], [-1.0, 4.0, -1.0], [0.0, -1.0, 0.0]],
        (1, 1),
    ),
    "laplacian2": (
        [[-1.0, -1.0, -1.0], [-1.0, 8.0, -1.0], [-1.0, -1.0, -1.0]],
        (1, 1),
    ),
}

NORM_MODES = ("l2", "l1", "none")

BUILTIN_KERNELS = tuple(sorted(_BUILTINS))


@dataclass(frozen=True, eq=False)
class Kernel2D:
    """Immutable 2-D kernel: real taps plus the anchor tap position."""

    taps: np.ndarray
    anchor: tuple = (0, 0)
    name: str = "custom"

    def __post_init__(self):
        taps = np.array(self.taps, dtype=np.float64)
        if taps.ndim != 2 or taps.size == 0:
            raise DimensionError("kernel taps must form a non-empty 2-D array")
        if not np.isfinite(taps).all():
            raise DegenerateKernelError("kernel taps must be finite")
        ar, ac = self.anchor
        kh, kw = taps.shape
        if not (0 <= ar < kh and 0 <= ac < kw):
            raise ConfigError(f"anchor {self.anchor} outside {kh}x{kw} kernel")
        taps.setflags(write=False)
        object.__setattr__(self, "taps", taps)


def builtin_kernel(name):
    """Return one of the built-in kernels (unnormalized taps)."""
    if name not in _BUILTINS:
        raise ConfigError(
            f"unknown kernel {name!r}; choose from {sorted(_BUILTINS)}"
        )
    taps, anchor = _BUILTINS[name]
    return Kernel2D(np.array(taps), anchor=anchor, name=name)


def kernel_from_csv(path):
    """Load custom kernel taps from a headerless CSV file."""
    return Kernel2D(read_matrix_csv(path), name="custom")


def normalize(kernel, mode="l2"):
    """Rescale kernel taps to unit norm.

    Returns (normalized kernel, scale) where scale is the divisor that
    was applied. mode "none" keeps the taps and reports scale 1.0.
    """
    if mode not in NORM_MODES:
        raise ConfigError(f"unknown normalization {mode!r}; choose from {NORM_MODES}")
    if mode == "none":
        return kernel, 1.0
    if mode == "l2":
        scale = float(np.sqrt(np.sum(kernel.taps**2)))
    else:
        scale = float(np.sum(np.abs(kernel.taps)))
    if scale == 0.0:
        raise DegenerateKernelError("all-zero kernel cannot be normalized")
    out = Kernel2D(kernel.taps / scale, anchor=kernel.anchor, name=kernel.name)
    return out, scale


class ConvOperator:
    """Periodic 2-D convolution by a normalized kernel on (h*w, b) matrices."""

    def __init__(self, kernel, h, w, norm="l2", name=None):
        if h < 1 or w < 1:
            raise DimensionError(f"plane dims must be positive, got {h}x{w}")
        self.kernel = kernel
        self.h = int(h)
        self.w = int(w)
        self.norm_mode = norm
        self.normalized, self.scale = normalize(kernel, norm)
        self.name = name if name is not None else kernel.name
        self.spectrum = self._build_spectrum()
        # real-FFT halves of the coefficient grid; data is always real, so
        # apply/adjoint run on rfft2 output (last axis truncated to w//2+1)
        half = self.w // 2 + 1
        self._rspec = self.spectrum[:, :half].copy()
        self._rspec_conj = np.conj(self._rspec)
        self._rspec_sq = np.abs(self._rspec) ** 2

    def _build_spectrum(self):
        """Eigenvalues of the per-column circulant on the (u, v) DFT grid."""
        h, w = self.h, self.w
        ar, ac = self.normalized.anchor
        u = np.arange(h).reshape(h, 1)
        v = np.arange(w).reshape(1, w)
        spec = np.zeros((h, w), dtype=np.complex128)
        taps = self.normalized.taps
        for a in range(taps.shape[0]):
            for b in range(taps.shape[1]):
                t = taps[a, b]
                if t == 0.0:
                    continue
                phase = (u * ((a - ar) % h)) / h + (v * ((b - ac) % w)) / w
                spec += t * np.exp(2j * np.pi * phase)
        return spec

    def _check(self, x):
        x = np.asarray(x, dtype=np.float64)
        if x.ndim != 2:
            raise DimensionError(f"operator expects a matrix, got ndim={x.ndim}")
        if x.shape[0] != self.h * self.w:
            raise DimensionError(
                f"operator built for {self.h}x{self.w} planes "
                f"({self.h * self.w} rows), got {x.shape[0]} rows"
            )
        return x

    def _rfft(self, x):
        """Per-plane real FFT of an (h*w, b) matrix; shape (h, w//2+1, b)."""
        planes = x.reshape(self.h, self.w, x.shape[1], order="F")
        return np.fft.rfft2(planes, axes=(0, 1))

    def _irfft(self, xf):
        """Inverse of :meth:`_rfft`, back to an (h*w, b) matrix."""
        planes = np.fft.irfft2(xf, s=(self.h, self.w), axes=(0, 1))
        return planes.reshape(self.h * self.w, xf.shape[2], order="F")

    def _pointwise(self, x, coeff):
        return self._irfft(self._rfft(x) * coeff[:, :, None])

    def apply(self, x):
        """D(x): circularly convolve each column's plane with the kernel."""
        return self._pointwise(self._check(x), self._rspec)

    def adjoint(self, y):
        """D^T(y): the transpose map (convolution with the flipped kernel)."""
        return self._pointwise(self._check(y), self._rspec_conj)

    def gram(self, x):
        """D^T(D(x)) in one spectral pass."""
        return self._pointwise(self._check(x), self._rspec_sq)

    def solve_gram_plus_identity(self, rhs, beta, alpha):
        """Solve (beta * D^T D + alpha * I) x = rhs exactly per column."""
        if beta < 0 or alpha <= 0:
            raise ConfigError("need beta >= 0 and alpha > 0 for a definite system")
        return self._pointwise(self._check(rhs), 1.0 / (beta * self._rspec_sq + alpha))

    def injectivity_report(self, tol=1e-12):
        """Smallest spectral magnitude and the count below tol (nullspace dim)."""
        mags = np.abs(self.spectrum)
        return {
            "min_abs_coeff": float(mags.min()),
            "nullspace_dim": int(np.count_nonzero(mags < tol)),
        }

    def __repr__(self):
        return (
            f"ConvOperator({self.name}, {self.h}x{self.w}, norm={self.norm_mode})"
        )
