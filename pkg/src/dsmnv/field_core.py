"""Complex fields on square lattices and the linear operators acting on them.

A :class:`Grid` is the corner-anchored lattice ``z = (-L + i h) + 1j * (-L + j h)``
with ``h = 2L/N``.  Array index ``[j, i]`` holds the sample at ``x = -L + i h``,
``y = -L + j h``, so rows run along ``y`` and columns along ``x``.

Derivatives are spectral (periodic) and the inverse derivatives are lattice
Cauchy transforms evaluated by zero-padded FFT convolution.  Every operator
here assumes the field decays to (numerically) zero well inside the box.
"""

from __future__ import annotations

import os
import struct
import tempfile
from dataclasses import dataclass
from functools import cached_property, lru_cache
from pathlib import Path
from typing import Union

import numpy as np
import scipy.fft as sfft

__all__ = [
    "Grid",
    "ComplexField",
    "FieldFormatError",
    "make_grid",
    "weight",
    "d_z",
    "dbar_z",
    "d_inv",
    "dbar_inv",
    "smooth_window",
    "set_fft_workers",
    "write_field",
    "read_field",
    "write_csv",
    "atomic_write",
]

MAGIC = b"MNVF"
_HEADER = struct.Struct("<4sId")

_workers = 1


def set_fft_workers(n: int) -> None:
    """Bound the number of threads used by every FFT in the package."""
    global _workers
    if n < 1:
        raise ValueError("thread count must be positive")
    _workers = int(n)


def fft_workers() -> int:
    return _workers


class FieldFormatError(ValueError):
    """Raised when a field file is malformed or carries non-finite samples."""


@dataclass(frozen=True)
class Grid:
    """Square lattice of ``N x N`` points covering ``[-L, L)^2``."""

    L: float
    N: int

    def __post_init__(self):
        if not (self.L > 0 and np.isfinite(self.L)):
            raise ValueError(f"half-width must be positive and finite, got {self.L}")
        if self.N < 16 or self.N % 2:
            raise ValueError(f"point count must be even and >= 16, got {self.N}")

    @property
    def h(self) -> float:
        return 2.0 * self.L / self.N

    @property
    def shape(self) -> tuple[int, int]:
        return (self.N, self.N)

    @cached_property
    def coords(self) -> np.ndarray:
        """One-dimensional coordinates shared by both axes."""
        return -self.L + self.h * np.arange(self.N)

    @cached_property
    def points(self) -> np.ndarray:
        """Complex sample positions, ``points[j, i] = x_i + 1j * y_j``."""
        c = self.coords
        return c[None, :] + 1j * c[:, None]

    @cached_property
    def frequencies(self) -> np.ndarray:
        """Angular frequencies matching the FFT ordering of one axis."""
        return 2.0 * np.pi * sfft.fftfreq(self.N, d=self.h)

    @property
    def center_index(self) -> int:
        return self.N // 2

    def index_of(self, z: complex) -> tuple[int, int]:
        """Row/column of the lattice point nearest to ``z``."""
        i = int(round((z.real + self.L) / self.h)) % self.N
        j = int(round((z.imag + self.L) / self.h)) % self.N
        return j, i

    def involution(self, values: np.ndarray) -> np.ndarray:
        """Evaluate ``values`` at ``-z``: index ``m`` maps to ``(N - m) mod N``."""
        return np.roll(values[..., ::-1, ::-1], 1, axis=(-2, -1))


def make_grid(L: float, N: int) -> Grid:
    return Grid(float(L), int(N))


Scalar = Union[int, float, complex, np.number]


class ComplexField:
    """Complex samples on a :class:`Grid`.  The value array is read-only."""

    __slots__ = ("grid", "values")
    __array_ufunc__ = None  # let ndarray * field dispatch to __rmul__

    def __init__(self, grid: Grid, values):
        arr = np.array(values, dtype=np.complex128)
        if arr.shape != grid.shape:
            raise ValueError(f"expected shape {grid.shape}, got {arr.shape}")
        if not np.isfinite(arr).all():
            raise ValueError("field samples must be finite")
        arr.flags.writeable = False
        self.grid = grid
        self.values = arr

    @classmethod
    def from_function(cls, grid: Grid, fn) -> "ComplexField":
        return cls(grid, fn(grid.points))

    @classmethod
    def zeros(cls, grid: Grid) -> "ComplexField":
        return cls(grid, np.zeros(grid.shape, complex))

    def _coerce(self, other):
        if isinstance(other, ComplexField):
            if other.grid != self.grid:
                raise ValueError("fields live on different grids")
            return other.values
        return other

    def __add__(self, other):
        return ComplexField(self.grid, self.values + self._coerce(other))

    __radd__ = __add__

    def __sub__(self, other):
        return ComplexField(self.grid, self.values - self._coerce(other))

    def __rsub__(self, other):
        return ComplexField(self.grid, self._coerce(other) - self.values)

    def __mul__(self, other):
        return ComplexField(self.grid, self.values * self._coerce(other))

    __rmul__ = __mul__

    def __truediv__(self, other: Scalar):
        return ComplexField(self.grid, self.values / other)

    def __neg__(self):
        return ComplexField(self.grid, -self.values)

    def conj(self) -> "ComplexField":
        return ComplexField(self.grid, np.conj(self.values))

    def abs2(self) -> "ComplexField":
        return ComplexField(self.grid, np.abs(self.values) ** 2)

    def l2_norm(self) -> float:
        """Discrete L2 norm with the area element ``h^2``."""
        return float(np.sqrt(np.sum(np.abs(self.values) ** 2)) * self.grid.h)

    def max_norm(self) -> float:
        return float(np.max(np.abs(self.values)))

    def at(self, z: complex) -> complex:
        return complex(self.values[self.grid.index_of(z)])

    def __repr__(self):
        return f"ComplexField(L={self.grid.L}, N={self.grid.N}, max={self.max_norm():.3g})"


def weight(k, z):
    """``exp(conj(k) conj(z) - k z)``, written so that it is exactly unimodular."""
    k = np.asarray(k)
    z = np.asarray(z)
    return np.exp(-2j * (k.real * z.imag + k.imag * z.real))


# Spectral derivatives

@lru_cache(maxsize=16)
def _derivative_multipliers(grid: Grid) -> tuple[np.ndarray, np.ndarray]:
    xi = grid.frequencies.copy()
    xi[grid.N // 2] = 0.0  # no derivative for the unpaired Nyquist mode
    XI, ETA = np.meshgrid(xi, xi)
    return 0.5 * (1j * XI + ETA), 0.5 * (1j * XI - ETA)


def _apply_multiplier(values: np.ndarray, mult: np.ndarray) -> np.ndarray:
    spec = sfft.fft2(values, workers=_workers)
    return sfft.ifft2(spec * mult, workers=_workers)


def d_z(f: ComplexField, order: int = 1) -> ComplexField:
    """Spectral ``d/dz = (d/dx - i d/dy) / 2`` raised to ``order``."""
    m, _ = _derivative_multipliers(f.grid)
    return ComplexField(f.grid, _apply_multiplier(f.values, m**order))


def dbar_z(f: ComplexField, order: int = 1) -> ComplexField:
    """Spectral ``d/dzbar = (d/dx + i d/dy) / 2`` raised to ``order``."""
    _, m = _derivative_multipliers(f.grid)
    return ComplexField(f.grid, _apply_multiplier(f.values, m**order))


# Cauchy transforms

@lru_cache(maxsize=8)
def _cauchy_kernels(grid: Grid) -> tuple[np.ndarray, np.ndarray]:
    n = grid.N
    m = np.arange(-n, n) * grid.h
    w = m[None, :] + 1j * m[:, None]
    kern = np.zeros_like(w)
    nz = w != 0
    kern[nz] = 1.0 / (np.pi * w[nz])
    kern = np.fft.ifftshift(kern)
    return sfft.fft2(kern), sfft.fft2(np.conj(kern))


def _convolve_padded(values: np.ndarray, kernel_hat: np.ndarray, h: float) -> np.ndarray:
    n = values.shape[-1]
    spec = sfft.fft2(values, s=(2 * n, 2 * n), workers=_workers)
    out = sfft.ifft2(spec * kernel_hat, workers=_workers)
    return out[..., :n, :n] * h**2


def dbar_inv(f: ComplexField, local_correction: bool = True) -> ComplexField:
    """Solid Cauchy transform ``(1/pi) * integral f(w) / (z - w) dA(w)``.

    The plain lattice sum drops the singular cell and is only second-order
    accurate.  With ``local_correction`` the leading missing term,
    ``(h^2/pi) d f/dz``, is subtracted, giving fourth-order convergence for
    smooth decaying data.
    """
    g = f.grid
    khat, _ = _cauchy_kernels(g)
    out = _convolve_padded(f.values, khat, g.h)
    if local_correction:
        out -= g.h**2 / np.pi * d_z(f).values
    return ComplexField(g, out)


def d_inv(f: ComplexField, local_correction: bool = True) -> ComplexField:
    """Conjugate Cauchy transform ``(1/pi) * integral f(w) / conj(z - w) dA(w)``."""
    g = f.grid
    _, khat = _cauchy_kernels(g)
    out = _convolve_padded(f.values, khat, g.h)
    if local_correction:
        out -= g.h**2 / np.pi * dbar_z(f).values
    return ComplexField(g, out)


def smooth_window(grid: Grid, inner: float, outer: float, center: complex = 0.0) -> np.ndarray:
    """Radial C-infinity cutoff around ``center``: one within ``inner``, zero beyond ``outer``."""
    if not 0 < inner < outer:
        raise ValueError("need 0 < inner < outer")
    t = (np.abs(grid.points - center) - inner) / (outer - inner)
    t = np.clip(t, 0.0, 1.0)

    def bump(s):
        out = np.zeros_like(s)
        pos = s > 0
        out[pos] = np.exp(-1.0 / s[pos])
        return out

    a, b = bump(1.0 - t), bump(t)
    return a / (a + b)


# File formats

def atomic_write(path: Union[str, Path], data: bytes) -> None:
    """Write through a temporary file in the target directory, then rename."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or ".", prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def encode_field(f: ComplexField) -> bytes:
    if not np.all(np.isfinite(f.values)):
        raise FieldFormatError("refusing to write non-finite samples")
    body = np.ascontiguousarray(f.values, dtype="<c16").tobytes()
    return _HEADER.pack(MAGIC, f.grid.N, f.grid.L) + body


def decode_field(data: bytes) -> ComplexField:
    if len(data) < _HEADER.size:
        raise FieldFormatError("file too short for header")
    magic, n, half_width = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise FieldFormatError(f"bad magic {magic!r}")
    try:
        grid = Grid(half_width, n)
    except ValueError as exc:
        raise FieldFormatError(str(exc)) from exc
    expected = _HEADER.size + 16 * n * n
    if len(data) != expected:
        raise FieldFormatError(f"expected {expected} bytes, found {len(data)}")
    values = np.frombuffer(data, dtype="<c16", offset=_HEADER.size).reshape(n, n)
    if not np.all(np.isfinite(values)):
        raise FieldFormatError("payload contains non-finite samples")
    return ComplexField(grid, values)


def write_field(f: ComplexField, path: Union[str, Path]) -> None:
    atomic_write(path, encode_field(f))


def read_field(path: Union[str, Path]) -> ComplexField:
    return decode_field(Path(path).read_bytes())


def write_csv(f: ComplexField, path: Union[str, Path]) -> None:
    """Row-major ``x,y,re,im`` table with 17 significant digits."""
    g = f.grid
    pts = g.points.ravel()
    vals = f.values.ravel()
    table = np.column_stack([pts.real, pts.imag, vals.real, vals.imag])
    lines = ["x,y,re,im"]
    lines += [",".join(f"{v:.17g}" for v in row) for row in table]
    atomic_write(path, ("\n".join(lines) + "\n").encode())
