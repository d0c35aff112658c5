"""Shared numerical kernels.

One branch convention is used everywhere a complex square root appears:
the root with Re ≥ 0, and Im ≥ 0 when the real part vanishes. Propagating
waves therefore travel toward +z and evanescent waves decay toward +z.
"""

from __future__ import annotations

import cmath
from typing import TYPE_CHECKING

import numpy as np

if TYPE_CHECKING:
    from numpy.typing import ArrayLike, NDArray

__all__ = [
    "chain_product",
    "csqrt",
    "csqrt_array",
    "gradient",
    "laplacian",
    "rk4_step_matrices",
]


def csqrt(z: complex) -> complex:
    """Complex square root on the package-wide branch (Re ≥ 0, then Im ≥ 0)."""
    w = cmath.sqrt(complex(z))
    if w.real == 0.0 and w.imag < 0.0:
        w = -w
    return w


def csqrt_array(z: ArrayLike) -> NDArray[np.complex128]:
    """Vectorized `csqrt`."""
    w = np.sqrt(np.asarray(z, dtype=np.complex128))
    return np.where((w.real == 0.0) & (w.imag < 0.0), -w, w)


def gradient(f: NDArray, h: float) -> NDArray:
    """Second-order first derivative, one-sided second-order at both ends."""
    return np.gradient(f, h, edge_order=2)


def laplacian(f: NDArray, h: float) -> NDArray:
    """Second-order 1D Laplacian with one-sided second-order boundary stencils."""
    out = np.empty_like(f)
    out[1:-1] = (f[2:] - 2.0 * f[1:-1] + f[:-2]) / (h * h)
    if f.size >= 4:
        out[0] = (2.0 * f[0] - 5.0 * f[1] + 4.0 * f[2] - f[3]) / (h * h)
        out[-1] = (2.0 * f[-1] - 5.0 * f[-2] + 4.0 * f[-3] - f[-4]) / (h * h)
    else:
        # three points: the single central value is exact for quadratics
        out[0] = out[-1] = out[1]
    return out


def _generator(q: NDArray) -> NDArray:
    """Stack of matrices [[0, 1], [-q, 0]] for y' = A y with y = (ψ, ψ')."""
    a = np.zeros((q.size, 2, 2), dtype=np.complex128)
    a[:, 0, 1] = 1.0
    a[:, 1, 0] = -q
    return a


def rk4_step_matrices(
    q_start: ArrayLike, q_mid: ArrayLike, q_end: ArrayLike, h: ArrayLike
) -> NDArray[np.complex128]:
    """Classical RK4 one-step propagators for ψ'' + q(z) ψ = 0.

    The equation is linear, so each RK4 step is itself a 2x2 matrix built from
    the coefficient at the start, midpoint and end of the step. `h` may be
    negative (backward integration).
    """
    qs = np.atleast_1d(np.asarray(q_start, dtype=np.complex128))
    qm = np.broadcast_to(np.asarray(q_mid, dtype=np.complex128), qs.shape)
    qe = np.broadcast_to(np.asarray(q_end, dtype=np.complex128), qs.shape)
    step = np.broadcast_to(np.asarray(h, dtype=np.float64), qs.shape)[:, None, None]

    eye = np.broadcast_to(np.eye(2, dtype=np.complex128), (qs.size, 2, 2))
    a0, am, a1 = _generator(qs), _generator(qm), _generator(qe)
    k1 = a0
    k2 = am @ (eye + 0.5 * step * k1)
    k3 = am @ (eye + 0.5 * step * k2)
    k4 = a1 @ (eye + step * k3)
    return eye + (step / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def chain_product(mats: NDArray) -> NDArray[np.complex128]:
    """Return ``mats[-1] @ ... @ mats[1] @ mats[0]`` by pairwise reduction."""
    m = np.asarray(mats, dtype=np.complex128)
    if m.shape[0] == 0:
        return np.eye(2, dtype=np.complex128)
    while m.shape[0] > 1:
        tail = None
        if m.shape[0] % 2:
            tail, m = m[-1:], m[:-1]
        m = m[1::2] @ m[0::2]
        if tail is not None:
            m = np.concatenate([m, tail])
    return m[0]
