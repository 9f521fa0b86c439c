"""Batched solver for the reduced scattering equation on a coarse lattice.

Both transforms need, at every output node ``p``, the solution ``m`` of

    m = 1 + (1/4) Pbar[ q * C_p[ conj(q) * m ] ]

where ``Pbar`` is the Cauchy transform ``1/(pi w)`` and ``C_p`` has kernel
``e_p(w) / (pi conj(w))``.  The data ``q`` is supported in a disc of radius
``rho``, so both kernels may be truncated at ``2 rho`` without changing the
result there.  The truncated kernels have closed-form Fourier transforms, and
on a periodic box of side at least ``4 rho`` the discrete convolution is exact
up to the quadrature of the data itself.  The FFT lengths are odd so that the
discrete operators keep the reflection antisymmetry of the continuous ones.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.fft as sfft
import scipy.special as sp
from scipy.sparse.linalg import LinearOperator, gmres

from .field_core import fft_workers, weight


def odd_fft_size(minimum: int) -> int:
    """Smallest odd integer >= ``minimum`` whose prime factors are 3, 5 or 7."""
    n = int(minimum) | 1
    while True:
        m = n
        for p in (3, 5, 7):
            while m % p == 0:
                m //= p
        if m == 1:
            return n
        n += 2


def _truncated_kernel_hat(xi, eta, radius, conjugate):
    """Fourier transform of ``1/(pi w)`` (or ``1/(pi conj w)``) cut at ``|w| = radius``."""
    rad = np.hypot(xi, eta)
    den = xi - 1j * eta if conjugate else xi + 1j * eta
    out = np.zeros(np.broadcast(xi, eta).shape, complex)
    nz = rad > 0
    out[nz] = -2j * (1.0 - sp.j0(rad[nz] * radius)) / den[nz]
    return out


class CoarseCauchy:
    """Cauchy transforms for data living on ``x_j = j * spacing``, ``|j| <= half_count``."""

    def __init__(self, spacing: float, half_count: int):
        self.spacing = float(spacing)
        self.half_count = int(half_count)
        self.size = 2 * self.half_count + 1
        self.fft_size = odd_fft_size(4 * self.half_count + 1)
        self.radius = 2.0 * self.half_count * self.spacing
        xi = 2.0 * np.pi * sfft.fftfreq(self.fft_size, d=self.spacing)
        self._xi, self._eta = np.meshgrid(xi, xi)
        self.dbar_inv_hat = _truncated_kernel_hat(self._xi, self._eta, self.radius, False)
        offsets = self.spacing * np.arange(-self.half_count, self.half_count + 1)
        self.points = offsets[None, :] + 1j * offsets[:, None]

    def shifted_d_inv_hat(self, p: np.ndarray) -> np.ndarray:
        """Multipliers of ``(d + p)^{-1}`` for a batch of parameters ``p``."""
        p = np.asarray(p, complex).reshape(-1, 1, 1)
        return _truncated_kernel_hat(self._xi + 2 * p.imag, self._eta + 2 * p.real, self.radius, True)

    def convolve(self, values: np.ndarray, mult: np.ndarray) -> np.ndarray:
        """Linear convolution with a kernel given by its multiplier; zero padding is pruned."""
        n, m, w = self.fft_size, self.size, fft_workers()
        spec = sfft.fft(values, n=n, axis=-1, workers=w)
        spec = sfft.fft(spec, n=n, axis=-2, workers=w)
        spec *= mult
        out = sfft.ifft(spec, axis=-2, workers=w)[..., :m, :]
        return sfft.ifft(out, axis=-1, workers=w)[..., :m]


@dataclass
class BatchStats:
    """Per-node solver bookkeeping collected over a transform."""

    iterations: list = field(default_factory=list)
    residuals: list = field(default_factory=list)
    krylov_nodes: int = 0

    def extend(self, iterations, residuals):
        self.iterations.extend(int(i) for i in iterations)
        self.residuals.extend(float(r) for r in residuals)

    @property
    def max_residual(self) -> float:
        return max(self.residuals, default=0.0)

    def histogram(self) -> dict:
        values, counts = np.unique(np.asarray(self.iterations, int), return_counts=True)
        return {str(v): int(c) for v, c in zip(values, counts)}


class EngineNonConvergence(RuntimeError):
    def __init__(self, node: complex, residual: float):
        super().__init__(f"no convergence at node {node}: residual {residual:.3e}")
        self.node = node
        self.residual = residual


def _norms(a: np.ndarray) -> np.ndarray:
    return np.sqrt(np.sum(np.abs(a) ** 2, axis=(-2, -1)))


def _krylov_single(ops: CoarseCauchy, q: np.ndarray, p: complex, tol: float, max_iter: int):
    mult = ops.shifted_d_inv_hat(np.array([p]))[0]
    qc = np.conj(q)
    shape = q.shape
    n = q.size

    def apply(x):
        m = x[:n] + 1j * x[n:]
        m = m.reshape(shape)
        out = m - 0.25 * ops.convolve(q * ops.convolve(qc * m, mult), ops.dbar_inv_hat)
        out = out.ravel()
        return np.concatenate([out.real, out.imag])

    op = LinearOperator((2 * n, 2 * n), matvec=apply, dtype=float)
    rhs = np.concatenate([np.ones(n), np.zeros(n)])
    sol, _ = gmres(op, rhs, rtol=0.1 * tol, atol=0.0, restart=min(60, 2 * n), maxiter=max_iter)
    m = (sol[:n] + 1j * sol[n:]).reshape(shape)
    res = np.linalg.norm(apply(sol) - rhs) / np.linalg.norm(sol)
    return m, float(res)


def solve_nodes(
    ops: CoarseCauchy,
    q: np.ndarray,
    nodes: np.ndarray,
    *,
    tolerance: float,
    max_iterations: int,
    method: str = "born",
    batch_size: int | None = None,
    stats: BatchStats | None = None,
) -> np.ndarray:
    """Nonlinear correction ``(1/pi) sum conj(e_p q) (m - 1) h^2`` at every node ``p``.

    This is the nonlinear part of the inverse transform with data ``conj(q)``;
    the direct transform of ``q`` is its complex conjugate.
    """
    nodes = np.asarray(nodes, complex).ravel()
    out = np.empty(nodes.size, complex)
    if batch_size is None:
        batch_size = max(1, min(64, int(4e6 // ops.fft_size**2)))
    qc = np.conj(q)
    area = ops.spacing**2 / np.pi

    def finish(idx, m):
        e = weight(nodes[idx, None, None], ops.points)
        out[idx] = area * np.sum(np.conj(e * q) * (m - 1.0), axis=(-2, -1))

    for start in range(0, nodes.size, batch_size):
        idx = np.arange(start, min(start + batch_size, nodes.size))
        m_final = np.empty((idx.size,) + q.shape, complex)
        iters = np.zeros(idx.size, int)
        resid = np.full(idx.size, np.inf)
        fallback = np.zeros(idx.size, bool)

        if method == "born":
            mults = ops.shifted_d_inv_hat(nodes[idx])
            active = np.arange(idx.size)
            m = np.ones((idx.size,) + q.shape, complex)
            history = np.full(idx.size, np.inf)
            growth = np.zeros(idx.size, int)
            for it in range(1, max_iterations + 1):
                inner = ops.convolve(qc * m, mults[active])
                new = 1.0 + 0.25 * ops.convolve(q * inner, ops.dbar_inv_hat)
                change = _norms(new - m) / _norms(m)
                done = change <= tolerance
                growth = np.where(change > history, growth + 1, 0)
                bad = ~np.isfinite(change) | (growth >= 3) | (change > 1e6)
                for local in np.flatnonzero(done):
                    j = active[local]
                    m_final[j], iters[j], resid[j] = m[local], it, change[local]
                for local in np.flatnonzero(bad & ~done):
                    fallback[active[local]] = True
                keep = ~(done | bad)
                active, m, history, growth = active[keep], new[keep], change[keep], growth[keep]
                if active.size == 0:
                    break
            fallback[active] = True
        else:
            fallback[:] = True

        for j in np.flatnonzero(fallback):
            m_j, res = _krylov_single(ops, q, nodes[idx[j]], tolerance, max_iterations)
            if not res <= 10 * tolerance:
                raise EngineNonConvergence(complex(nodes[idx[j]]), res)
            m_final[j], iters[j], resid[j] = m_j, max_iterations, res
            if stats is not None:
                stats.krylov_nodes += 1

        finish(idx, m_final)
        if stats is not None:
            stats.extend(iters, resid)
    return out


def fourier_upsample(values: np.ndarray, factor: int) -> np.ndarray:
    """Trigonometric interpolation from an ``n x n`` periodic lattice to ``n*factor``.

    Samples at multiples of ``factor`` are reproduced exactly.  The unpaired
    Nyquist coefficient is split evenly between the two new modes.
    """
    if factor == 1:
        return values.copy()
    n = values.shape[-1]
    if n % 2:
        raise ValueError("need an even lattice size")
    big = n * factor
    spec = sfft.fft2(values, workers=fft_workers())
    half = n // 2
    out = np.zeros((big, big), complex)
    lo = np.r_[0:half]
    hi = np.r_[half + 1 : n]
    src = np.r_[lo, hi]
    dst = np.r_[lo, big - n + hi]
    out[np.ix_(dst, dst)] = spec[np.ix_(src, src)]
    # Nyquist row/column: split between +half and -half
    nyq_dst = (half, big - half)
    for a in nyq_dst:
        out[a, dst] += 0.5 * spec[half, src]
        out[dst, a] += 0.5 * spec[src, half]
        for b in nyq_dst:
            out[a, b] += 0.25 * spec[half, half]
    return sfft.ifft2(out, workers=fft_workers()) * factor**2
