"""Flat-torus discretization and spectral calculus.

The spatial domain is the real torus [0, 2*pi)^(2n) carrying complex
coordinates z_j = x_j + i*y_j, j = 1..n.  Fields are sampled on a uniform
grid with N points per real axis and stored as numpy arrays of shape
(N,)*2n, axes ordered (x_1, ..., x_n, y_1, ..., y_n), C (row-major) order.
Matrix-valued fields carry two trailing axes of length n; the entry
M[..., p, q] holds the coefficient with holomorphic index p and
anti-holomorphic index q (so Hermitian fields satisfy M[..., q, p] ==
conj(M[..., p, q]) pointwise).

All derivatives are Fourier-spectral.  For the mode exp(i*(m.x + l.y)) the
multiplier of d/dz_j is (i*m_j + l_j)/2 and of d/dzbar_j is (i*m_j - l_j)/2,
which realizes d/dz = (d/dx - i d/dy)/2 per complex axis.

The Kahler metric is a constant Hermitian positive-definite matrix g, so the
volume form is det(g) dx dy and covariant derivatives coincide with
coordinate derivatives (the connection coefficients vanish).
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field

import numpy as np
import scipy.fft as sfft

__all__ = [
    "TorusGeometry",
    "build_torus",
    "d_z",
    "d_zbar",
    "grad_z",
    "complex_hessian",
    "volume_integral",
    "bandlimited_noise",
    "check_hermitian_field",
]


def _workers() -> int:
    """Worker cap for FFTs, from DHYM_THREADS (default: all cores).

    Worker count never changes results: transforms are deterministic and
    grid reductions use numpy's pairwise summation.
    """
    env = os.environ.get("DHYM_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


@dataclass(frozen=True, eq=False)
class TorusGeometry:
    """Discretized flat Kahler torus.

    Attributes
    ----------
    n : complex dimension (1..3)
    N : grid points per real axis (power of two, >= 8)
    g : constant n x n Hermitian positive-definite metric matrix
    g_inv : inverse of g
    det_g : determinant of g (real, positive)
    vol : total volume det(g) * (2*pi)^(2n)
    chol : lower Cholesky factor L of g (g = L L^H)
    chol_inv : L^{-1}, used to reduce the generalized eigenproblem
    """

    n: int
    N: int
    g: np.ndarray
    g_inv: np.ndarray = field(repr=False)
    det_g: float
    vol: float
    chol: np.ndarray = field(repr=False)
    chol_inv: np.ndarray = field(repr=False)

    @property
    def shape(self) -> tuple:
        return (self.N,) * (2 * self.n)

    @property
    def num_points(self) -> int:
        return self.N ** (2 * self.n)

    def axis_coordinate(self, axis: int) -> np.ndarray:
        """Grid coordinate along one real axis, broadcastable over the grid.

        Axes 0..n-1 are x_1..x_n, axes n..2n-1 are y_1..y_n.
        """
        c = np.arange(self.N) * (2.0 * np.pi / self.N)
        return self._along(c, axis)

    def wavevector(self, axis: int) -> np.ndarray:
        """Integer wave numbers in [-N/2, N/2) along one real axis."""
        k = np.rint(sfft.fftfreq(self.N) * self.N).astype(np.int64)
        return self._along(k, axis)

    def _along(self, arr1d: np.ndarray, axis: int) -> np.ndarray:
        if not 0 <= axis < 2 * self.n:
            raise ValueError(f"axis {axis} out of range for 2n={2*self.n}")
        shape = [1] * (2 * self.n)
        shape[axis] = self.N
        return arr1d.reshape(shape)

    def dz_multiplier(self, j: int) -> np.ndarray:
        """Spectral multiplier of d/dz_j (0-based j), broadcastable."""
        if not 0 <= j < self.n:
            raise ValueError(f"complex axis {j} out of range for n={self.n}")
        m = self.wavevector(j)
        l = self.wavevector(self.n + j)
        return 0.5 * (1j * m + l)

    def dzbar_multiplier(self, j: int) -> np.ndarray:
        """Spectral multiplier of d/dzbar_j (0-based j), broadcastable."""
        if not 0 <= j < self.n:
            raise ValueError(f"complex axis {j} out of range for n={self.n}")
        m = self.wavevector(j)
        l = self.wavevector(self.n + j)
        return 0.5 * (1j * m - l)

    def fft(self, f: np.ndarray) -> np.ndarray:
        """Forward transform over the 2n grid axes (trailing axes pass through)."""
        axes = tuple(range(2 * self.n))
        return sfft.fftn(f, axes=axes, workers=_workers())

    def ifft(self, fh: np.ndarray) -> np.ndarray:
        axes = tuple(range(2 * self.n))
        return sfft.ifftn(fh, axes=axes, workers=_workers())

    def mean(self, f: np.ndarray) -> complex | float:
        axes = tuple(range(2 * self.n))
        return f.mean(axis=axes)


def build_torus(n: int, N: int, g) -> TorusGeometry:
    """Construct the discretized torus.

    Parameters
    ----------
    n : complex dimension, one of {1, 2, 3}
    N : grid points per real axis; power of two, >= 8
    g : n x n Hermitian positive-definite matrix (scalars and length-n
        sequences are promoted to diagonal form)
    """
    if n not in (1, 2, 3):
        raise ValueError(f"complex dimension must be 1, 2 or 3, got {n}")
    N = int(N)
    if N < 8 or (N & (N - 1)) != 0:
        raise ValueError(f"grid size must be a power of two >= 8, got {N}")
    g = np.asarray(g)
    if g.ndim == 0:
        g = g * np.eye(n)
    elif g.ndim == 1:
        if g.size != n:
            raise ValueError(f"metric vector has length {g.size}, expected {n}")
        g = np.diag(g)
    g = g.astype(np.complex128)
    if g.shape != (n, n):
        raise ValueError(f"metric must be {n}x{n}, got {g.shape}")
    if not np.allclose(g, g.conj().T, rtol=0.0, atol=1e-14 * max(1.0, np.abs(g).max())):
        raise ValueError("metric not Hermitian")
    eigs = np.linalg.eigvalsh(g)
    if eigs.min() <= 0.0:
        raise ValueError("metric not positive definite")
    det_g = float(np.linalg.det(g).real)
    vol = det_g * (2.0 * np.pi) ** (2 * n)
    chol = np.linalg.cholesky(g)
    return TorusGeometry(
        n=n,
        N=N,
        g=g,
        g_inv=np.linalg.inv(g),
        det_g=det_g,
        vol=vol,
        chol=chol,
        chol_inv=np.linalg.inv(chol),
    )


def d_z(geom: TorusGeometry, f: np.ndarray, j: int) -> np.ndarray:
    """Holomorphic derivative d/dz_j of a scalar field (0-based j)."""
    return geom.ifft(geom.dz_multiplier(j) * geom.fft(f))


def d_zbar(geom: TorusGeometry, f: np.ndarray, j: int) -> np.ndarray:
    """Anti-holomorphic derivative d/dzbar_j of a scalar field (0-based j)."""
    return geom.ifft(geom.dzbar_multiplier(j) * geom.fft(f))


def grad_z(geom: TorusGeometry, u: np.ndarray) -> np.ndarray:
    """All holomorphic derivatives u_i, stacked on a trailing axis of length n."""
    uh = geom.fft(u)
    out = np.empty(geom.shape + (geom.n,), dtype=np.complex128)
    for i in range(geom.n):
        out[..., i] = geom.ifft(geom.dz_multiplier(i) * uh)
    return out


def complex_hessian(geom: TorusGeometry, u: np.ndarray) -> np.ndarray:
    """Complex Hessian u_{i jbar} = d/dz_i d/dzbar_j u of a real field.

    Returns a Hermitian matrix field of shape grid + (n, n).  Diagonal
    entries equal one quarter of the ordinary Laplacian in the (x_j, y_j)
    plane, so they are real for real input.
    """
    uh = geom.fft(np.asarray(u, dtype=np.float64))
    n = geom.n
    out = np.empty(geom.shape + (n, n), dtype=np.complex128)
    for i in range(n):
        zi = geom.dz_multiplier(i)
        for j in range(i, n):
            entry = geom.ifft(zi * geom.dzbar_multiplier(j) * uh)
            out[..., i, j] = entry
            if j != i:
                out[..., j, i] = entry.conj()
    return out


def volume_integral(geom: TorusGeometry, f: np.ndarray):
    """Integral of a scalar field against the volume form det(g) dx dy.

    Exact for band-limited integrands: the rectangle rule on the periodic
    grid hits the zero Fourier mode exactly.
    """
    m = geom.mean(f)
    if np.iscomplexobj(f):
        return complex(m) * geom.vol
    return float(m) * geom.vol


def bandlimited_noise(geom: TorusGeometry, k_band: int, amplitude: float, seed: int) -> np.ndarray:
    """Reproducible real random field with Fourier support |m|_inf <= k_band.

    The field has zero mean and sup-norm equal to `amplitude`; callers
    normalize further (e.g. to a target Hessian size).  Identical arguments
    produce bit-identical fields.
    """
    if k_band < 1:
        raise ValueError("k_band must be >= 1")
    if k_band > geom.N / 3:
        raise ValueError(
            f"band exceeds dealiasing limit: k_band={k_band} > N/3={geom.N / 3:g}"
        )
    rng = np.random.default_rng(seed)
    d = 2 * geom.n
    w = 2 * k_band + 1
    block = rng.standard_normal((w,) * d) + 1j * rng.standard_normal((w,) * d)
    spec = np.zeros(geom.shape, dtype=np.complex128)
    idx = np.ix_(*[np.arange(-k_band, k_band + 1) % geom.N] * d)
    spec[idx] = block
    # Hermitian-symmetrize so the inverse transform is real; kill the mean.
    rev = tuple(slice(None, None, -1) for _ in range(d))
    spec = 0.5 * (spec + np.roll(spec[rev], 1, axis=tuple(range(d))).conj())
    spec[(0,) * d] = 0.0
    f = geom.ifft(spec).real
    if amplitude == 0.0:
        return np.zeros(geom.shape)
    peak = np.abs(f).max()
    return f * (amplitude / peak)


def check_hermitian_field(M: np.ndarray, tol: float = 1e-12) -> None:
    """Raise if a matrix field is not pointwise Hermitian to relative tol."""
    scale = np.abs(M).max()
    dev = np.abs(M - M.conj().swapaxes(-1, -2)).max()
    if dev > tol * max(scale, 1.0):
        raise ValueError("non-Hermitian curvature input")
