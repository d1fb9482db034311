"""Seeded synthetic data: smooth low-rank stacks, sparse outliers, masks.

Randomness contract
-------------------
All draws come from numpy's Philox counter-based generator keyed by a
64-bit seed. Gaussians use the inverse normal CDF applied to 53-bit
uniforms offset by half an ulp (u = random53 + 2**-54), so another
implementation that reproduces the Philox stream and uses any correct
inverse-CDF reproduces the same values to double precision.

Seed derivation is fixed so sweeps are reproducible piecewise:

* trial t of a sweep uses  trial_seed(seed, t) = seed XOR (t * GOLDEN)
* within one instance, component k (0 = low-rank factors, 1 = sparse
  corruption, 2 = sampling mask) uses component_seed(s, k) = s XOR
  (k * SALT)

with GOLDEN = 0x9E3779B97F4A7C15, SALT = 0xD1B54A32D192ED03, both
products taken mod 2**64.

Low-rank generator
------------------
Each of the r factor planes is an h x w random partition: c sites are
drawn uniformly without replacement and every cell joins the site
nearest in 4-neighbor grid distance (multi-source BFS, ties to the
earlier site), then each region is filled with one N(0, 1) draw. The
right factor v is i.i.d. N(0, 1). The product x0 = u @ v.T is therefore
exactly rank r (almost surely, for c >= 2) while its columns are
piecewise constant on the overlay of the r partitions, which is what
gives the stack small transformed nuclear norm.

Draw order within gen_lowrank_smooth is: per plane, the site
permutation then its c region values; after all planes, the b*r right
factor values filled row-major into (b, r).
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtri

from .errors import ConfigError
from .tensors import apply_mask

GOLDEN = 0x9E3779B97F4A7C15
SALT = 0xD1B54A32D192ED03
_MASK64 = (1 << 64) - 1

COMPONENT_LOWRANK = 0
COMPONENT_CORRUPTION = 1
COMPONENT_MASK = 2

MASK_SCHEMES = ("bernoulli", "uniform_m")


def trial_seed(seed, trial):
    """Sub-seed for trial index t: seed XOR (t * GOLDEN) mod 2**64."""
    return (seed ^ ((trial * GOLDEN) & _MASK64)) & _MASK64


def component_seed(seed, component):
    """Sub-seed for instance component k: seed XOR (k * SALT) mod 2**64."""
    return (seed ^ ((component * SALT) & _MASK64)) & _MASK64


def _rng(seed):
    return np.random.Generator(np.random.Philox(key=seed & _MASK64))


def _standard_normal(rng, size):
    """Inverse-CDF Gaussians from midpoint-offset 53-bit uniforms."""
    u = rng.random(size) + 2.0**-54
    return ndtri(u)


@dataclass(frozen=True)
class GenConfig:
    """Dimensions and seed for the smooth low-rank generator."""

    h: int
    w: int
    b: int
    r: int
    c: int = 10
    seed: int = 0

    def validate(self):
        if self.h < 1 or self.w < 1 or self.b < 1:
            raise ConfigError(f"dims must be positive, got {self.h}x{self.w}x{self.b}")
        if not 1 <= self.r <= min(self.h * self.w, self.b):
            raise ConfigError(
                f"rank must lie in [1, min(h*w, b)] = [1, "
                f"{min(self.h * self.w, self.b)}], got {self.r}"
            )
        if not 1 <= self.c <= self.h * self.w:
            raise ConfigError(
                f"region count must lie in [1, h*w] = [1, {self.h * self.w}], "
                f"got {self.c}"
            )
        return self


def gen_regions(h, w, c, rng):
    """Random c-region partition of an h x w grid.

    Sites are drawn uniformly without replacement; every cell gets the
    label of the site closest in 4-neighbor walk distance, ties going to
    the site that appears earlier in the draw. Returned as an (h, w) int
    array with labels 0..c-1; every region is connected and non-empty.
    """
    sites = rng.permutation(h * w)[:c]
    labels = np.full((h, w), -1, dtype=np.int64)
    queue = deque()
    for idx, cell in enumerate(sites):
        i, j = int(cell) % h, int(cell) // h  # column-major cell index
        labels[i, j] = idx
        queue.append((i, j))
    while queue:
        i, j = queue.popleft()
        lab = labels[i, j]
        for ni, nj in ((i - 1, j), (i + 1, j), (i, j - 1), (i, j + 1)):
            if 0 <= ni < h and 0 <= nj < w and labels[ni, nj] < 0:
                labels[ni, nj] = lab
                queue.append((ni, nj))
    return labels


def gen_lowrank_smooth(cfg):
    """Sample (x0, u, v) with x0 = u @ v.T of shape (h*w, b), rank r.

    Each column of u is a piecewise-constant random partition plane
    vectorized column-major; v is (b, r) i.i.d. N(0, 1).
    """
    cfg.validate()
    rng = _rng(cfg.seed)
    hw = cfg.h * cfg.w
    u = np.empty((hw, cfg.r))
    for k in range(cfg.r):
        labels = gen_regions(cfg.h, cfg.w, cfg.c, rng)
        values = _standard_normal(rng, cfg.c)
        u[:, k] = values[labels].ravel(order="F")
    v = _standard_normal(rng, cfg.b * cfg.r).reshape(cfg.b, cfg.r)
    return u @ v.T, u, v


def gen_sparse_corruption(shape, rho_s, seed):
    """Sparse +/-1 outliers on exactly round(rho_s * n) uniform cells."""
    if not 0.0 <= rho_s <= 1.0:
        raise ConfigError(f"corruption ratio must lie in [0, 1], got {rho_s}")
    n1, n2 = shape
    n = n1 * n2
    count = int(math.floor(rho_s * n + 0.5))
    rng = _rng(seed)
    support = rng.permutation(n)[:count]
    signs = 2.0 * rng.integers(0, 2, size=count) - 1.0
    flat = np.zeros(n)
    flat[support] = signs
    return flat.reshape(shape, order="F")


def gen_mask(shape, p, seed, scheme="bernoulli"):
    """Boolean sampling mask; True marks an observed entry.

    scheme "bernoulli" keeps each cell independently with probability p;
    "uniform_m" keeps exactly round(p * n) cells uniformly at random.
    """
    if not 0.0 < p <= 1.0:
        raise ConfigError(f"sampling rate must lie in (0, 1], got {p}")
    if scheme not in MASK_SCHEMES:
        raise ConfigError(f"unknown mask scheme {scheme!r}; choose from {MASK_SCHEMES}")
    n1, n2 = shape
    n = n1 * n2
    rng = _rng(seed)
    if scheme == "bernoulli":
        flat = rng.random(n) < p
    else:
        count = int(math.floor(p * n + 0.5))
        flat = np.zeros(n, dtype=bool)
        flat[rng.permutation(n)[:count]] = True
    return flat.reshape(shape, order="F")


def gen_rpca_instance(h, w, b, r, rho_s, seed, c=10):
    """Compose a corrupted observation: returns (x0, s0, m = x0 + s0)."""
    cfg = GenConfig(h, w, b, r, c=c, seed=component_seed(seed, COMPONENT_LOWRANK))
    x0, _, _ = gen_lowrank_smooth(cfg)
    s0 = gen_sparse_corruption(x0.shape, rho_s, component_seed(seed, COMPONENT_CORRUPTION))
    return x0, s0, x0 + s0


def gen_mc_instance(h, w, b, r, p, seed, c=10, scheme="bernoulli"):
    """Compose a sampled observation: returns (x0, mask, m = P_mask(x0))."""
    cfg = GenConfig(h, w, b, r, c=c, seed=component_seed(seed, COMPONENT_LOWRANK))
    x0, _, _ = gen_lowrank_smooth(cfg)
    mask = gen_mask(x0.shape, p, component_seed(seed, COMPONENT_MASK), scheme=scheme)
    return x0, mask, apply_mask(x0, mask)
