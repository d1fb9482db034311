"""Shared fixtures and slow independent oracles for the test suite.

The reference implementations here are deliberately naive (nested loops,
dense matrices).  They provide a second route to the same answers the
package computes via FFTs and closed forms, so a bug in the fast path
cannot hide inside the check.
"""

import numpy as np
import pytest


def conv_reference(taps, anchor, plane):
    """Direct circular cross-correlation of one (h, w) plane.

    out[i, j] = sum_{a,b} taps[a, b] * plane[(i + a - ar) % h, (j + b - ac) % w]
    """
    taps = np.asarray(taps, dtype=float)
    h, w = plane.shape
    ar, ac = anchor
    out = np.zeros_like(plane)
    for i in range(h):
        for j in range(w):
            acc = 0.0
            for a in range(taps.shape[0]):
                for b in range(taps.shape[1]):
                    acc += taps[a, b] * plane[(i + a - ar) % h, (j + b - ac) % w]
            out[i, j] = acc
    return out


def apply_reference(op, x):
    """Apply a ConvOperator column by column via conv_reference."""
    taps = op.normalized.taps
    anchor = op.normalized.anchor
    h, w = op.h, op.w
    out = np.empty_like(x)
    for k in range(x.shape[1]):
        plane = x[:, k].reshape(h, w, order="F")
        out[:, k] = conv_reference(taps, anchor, plane).reshape(-1, order="F")
    return out


def dense_operator_matrix(op):
    """Explicit (h*w, h*w) matrix of the per-column circular operator.

    Row/column indices follow the column-major pixel layout idx = i + h*j,
    matching how planes are vectorized throughout the package.
    """
    taps = op.normalized.taps
    ar, ac = op.normalized.anchor
    h, w = op.h, op.w
    n = h * w
    mat = np.zeros((n, n))
    for i in range(h):
        for j in range(w):
            row = i + h * j
            for a in range(taps.shape[0]):
                for b in range(taps.shape[1]):
                    col = (i + a - ar) % h + h * ((j + b - ac) % w)
                    mat[row, col] += taps[a, b]
    return mat


def random_kernel(rng, max_size=3):
    """Draw a small random kernel with a random valid anchor."""
    from mnn.operators import Kernel2D

    kh = int(rng.integers(1, max_size + 1))
    kw = int(rng.integers(1, max_size + 1))
    taps = rng.standard_normal((kh, kw))
    anchor = (int(rng.integers(0, kh)), int(rng.integers(0, kw)))
    return Kernel2D(taps=taps, anchor=anchor, name="random")


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
