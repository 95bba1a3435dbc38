"""Seeded Gaussian sampling on a counter-based generator.

Normal variates are produced by an explicit Box-Muller transform over
Philox uniforms, so a stream depends only on the integer seed and not on
numpy's own normal-variate algorithm. Coupling matrices and random bath
states are all drawn through these helpers.
"""

from __future__ import annotations

import numpy as np


def philox(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(seed))


def standard_normal(gen: np.random.Generator, shape) -> np.ndarray:
    """N(0,1) samples via Box-Muller; uses 1-u to keep the log finite."""
    n = int(np.prod(shape))
    m = (n + 1) // 2
    u1 = 1.0 - gen.random(m)
    u2 = gen.random(m)
    r = np.sqrt(-2.0 * np.log(u1))
    z = np.concatenate([r * np.cos(2.0 * np.pi * u2), r * np.sin(2.0 * np.pi * u2)])
    return z[:n].reshape(shape)


def complex_normal(gen: np.random.Generator, shape) -> np.ndarray:
    """Complex samples with i.i.d. N(0,1) real and imaginary parts.

    The real parts are drawn first, then the imaginary parts, so the
    layout of the stream is part of the reproducibility contract.
    """
    re = standard_normal(gen, shape)
    im = standard_normal(gen, shape)
    return re + 1j * im


def haar_unit_vector(gen: np.random.Generator, dim: int) -> np.ndarray:
    """Haar-uniform unit vector: normalized complex Gaussian."""
    v = complex_normal(gen, (dim,))
    return v / np.linalg.norm(v)
