"""Direct and inverse scattering transforms, their linearizations, and the
symmetry checks relating transformed potentials.

Two engines compute the nonlinear part of a transform:

``"spectral"`` (default)
    solves the reduced equation on a coarse sub-lattice with truncated-kernel
    Cauchy transforms (see :mod:`dsmnv._engine`), evaluates the transform on
    a sub-lattice of output nodes and interpolates trigonometrically.
``"lattice"``
    runs :func:`dsmnv.dbar_solver.solve_mu` / ``solve_nu`` at every output
    node on the full grid.  Slow; meant for small grids and cross-checks.

The linear part is always the exact separable DFT sum.

Both transforms are built on one map: for data ``q`` on either grid,
``Phi(q)(p) = (1/pi) sum_x e_{-x}(p) conj(q(x)) m_1(x, p) h^2`` where ``m`` solves
the scattering system with weight ``e_p q``.  The inverse transform is
``Phi(conj(r))`` and the direct transform is ``conj(Phi(u))``, which pairs ``u``
with ``conj(mu_1)``.  With this pairing the two transforms invert each other.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _engine
from .dbar_solver import NonConvergence, SolverConfig, solve_mu, solve_nu
from .field_core import ComplexField, Grid, make_grid, weight

__all__ = [
    "TransformConfig",
    "TransformStats",
    "lin_forward",
    "lin_inverse",
    "forward_scatter",
    "inverse_scatter",
    "support_radius",
    "SymmetryReport",
    "check_symmetries",
]

ENGINES = ("spectral", "lattice")


@dataclass(frozen=True)
class TransformConfig:
    z_grid: Grid = field(default_factory=lambda: make_grid(8.0, 256))
    k_grid: Grid = field(default_factory=lambda: make_grid(6.0, 128))
    solver: SolverConfig = field(default_factory=SolverConfig)
    engine: str = "spectral"
    max_spacing: float = 0.25
    support_tolerance: float = 1e-13
    batch_size: int | None = None

    def __post_init__(self):
        if self.engine not in ENGINES:
            raise ValueError(f"engine must be one of {ENGINES}")
        if not self.max_spacing > 0:
            raise ValueError("max_spacing must be positive")


TransformStats = _engine.BatchStats


def _dft_matrix(out_coords: np.ndarray, in_coords: np.ndarray, sign: int) -> np.ndarray:
    return np.exp(sign * 2j * np.outer(out_coords, in_coords))


def lin_forward(f: ComplexField, k_grid: Grid) -> ComplexField:
    """``(1/pi) sum_z e_k(z) f(z) h^2`` on every node of ``k_grid``.

    ``e_k(z) = exp(-2i (k1 y + k2 x))`` pairs the real part of ``k`` with ``y``
    and the imaginary part with ``x``, hence the transpose.
    """
    a = _dft_matrix(k_grid.coords, f.grid.coords, -1)
    values = a @ f.values.T @ a.T * (f.grid.h**2 / np.pi)
    return ComplexField(k_grid, values)


def lin_inverse(g: ComplexField, z_grid: Grid) -> ComplexField:
    """``(1/pi) sum_k e_{-k}(z) g(k) h^2`` on every node of ``z_grid``."""
    c = _dft_matrix(z_grid.coords, g.grid.coords, +1)
    values = c @ g.values.T @ c.T * (g.grid.h**2 / np.pi)
    return ComplexField(z_grid, values)


def support_radius(f: ComplexField, tolerance: float = 1e-13) -> float:
    """Largest ``|z|`` at which ``|f|`` exceeds ``tolerance * max |f|``."""
    mag = np.abs(f.values)
    top = mag.max()
    if top == 0:
        return 0.0
    return float(np.abs(f.grid.points[mag > tolerance * top]).max())


def _stride(grid: Grid, max_spacing: float) -> int:
    """Largest divisor ``s`` of ``N/2`` with ``s h <= max_spacing`` (at least 1)."""
    half = grid.N // 2
    best = 1
    for s in range(1, half + 1):
        if half % s == 0 and s * grid.h <= max_spacing:
            best = s
    return best


def _solve_lattice(data: ComplexField, cfg: TransformConfig):
    """Coarse box around the origin holding the numerically nonzero data."""
    grid = data.grid
    stride = _stride(grid, cfg.max_spacing)
    spacing = stride * grid.h
    rho = support_radius(data, cfg.support_tolerance) + spacing
    half = min(math.ceil(rho / spacing), grid.N // (2 * stride) - 1)
    ops = _engine.CoarseCauchy(spacing, half)
    idx = grid.N // 2 + stride * np.arange(-half, half + 1)
    box = data.values[np.ix_(idx, idx)]
    return ops, box, half * spacing


def _spectral_nonlinear(q: ComplexField, out_grid: Grid, cfg, stats):
    ops, box, reach = _solve_lattice(q, cfg)
    limit = min(cfg.max_spacing, math.pi / (2 * reach)) if reach > 0 else cfg.max_spacing
    stride = _stride(out_grid, limit)
    nodes = out_grid.points[::stride, ::stride]
    try:
        vals = _engine.solve_nodes(
            ops, box, nodes,
            tolerance=cfg.solver.tolerance,
            max_iterations=cfg.solver.max_iterations,
            method=cfg.solver.method,
            batch_size=cfg.batch_size,
            stats=stats,
        )
    except _engine.EngineNonConvergence as exc:
        raise NonConvergence(str(exc), exc.residual, exc.node) from exc
    return ComplexField(out_grid, _engine.fourier_upsample(vals.reshape(nodes.shape), stride))


def forward_scatter(
    u: ComplexField, cfg: TransformConfig = TransformConfig(), stats: TransformStats | None = None
) -> ComplexField:
    """Scattering data ``r(k) = (1/pi) sum_z e_k(z) u(z) conj(mu_1(z, k)) h^2``."""
    if u.grid != cfg.z_grid:
        raise ValueError("input field is not on the configured z-grid")
    linear = lin_forward(u, cfg.k_grid)
    if not np.any(u.values):
        return ComplexField.zeros(cfg.k_grid)
    if cfg.engine == "spectral":
        return linear + _spectral_nonlinear(u, cfg.k_grid, cfg, stats).conj()

    h2 = u.grid.h**2 / np.pi
    out = np.empty(cfg.k_grid.shape, complex)
    for idx, k in np.ndenumerate(cfg.k_grid.points):
        sol = solve_mu(u, k, cfg.solver)
        if stats is not None:
            stats.extend([sol.iterations], [sol.residual_norm])
        out[idx] = h2 * np.sum(weight(k, u.grid.points) * u.values * np.conj(sol.first.values))
    return ComplexField(cfg.k_grid, out)


def inverse_scatter(
    r: ComplexField, cfg: TransformConfig = TransformConfig(), stats: TransformStats | None = None
) -> ComplexField:
    """Potential ``u(z) = (1/pi) sum_k e_{-k}(z) r(k) nu_1(z, k) h^2``."""
    if r.grid != cfg.k_grid:
        raise ValueError("input field is not on the configured k-grid")
    linear = lin_inverse(r, cfg.z_grid)
    if not np.any(r.values):
        return ComplexField.zeros(cfg.z_grid)
    if cfg.engine == "spectral":
        return linear + _spectral_nonlinear(r.conj(), cfg.z_grid, cfg, stats)

    h2 = r.grid.h**2 / np.pi
    out = np.empty(cfg.z_grid.shape, complex)
    for idx, z in np.ndenumerate(cfg.z_grid.points):
        sol = solve_nu(r, z, cfg.solver)
        if stats is not None:
            stats.extend([sol.iterations], [sol.residual_norm])
        out[idx] = h2 * np.sum(weight(-r.grid.points, z) * r.values * sol.first.values)
    return ComplexField(cfg.z_grid, out)


@dataclass(frozen=True)
class SymmetryReport:
    """Max-norm discrepancies for negation, odd reflection and conjugation."""

    negation: float
    odd_reflection: float
    conjugation: float

    def as_dict(self) -> dict:
        return {
            "negation": self.negation,
            "odd_reflection": self.odd_reflection,
            "conjugation": self.conjugation,
        }

    def worst(self) -> float:
        return max(self.negation, self.odd_reflection, self.conjugation)


def check_symmetries(
    u: ComplexField, cfg: TransformConfig = TransformConfig(), r: ComplexField | None = None
) -> SymmetryReport:
    """Compare transforms of ``-u``, ``-u(-z)`` and ``conj(u)`` against ``r = R(u)``.

    Reflection ``z -> -z`` is taken as the lattice involution, which is exact
    on the corner-anchored grid up to the unpaired edge row and column.
    """
    if r is None:
        r = forward_scatter(u, cfg)
    zg, kg = u.grid, r.grid
    flip_k = kg.involution

    neg = forward_scatter(-u, cfg)
    refl = forward_scatter(ComplexField(zg, -zg.involution(u.values)), cfg)
    conj = forward_scatter(u.conj(), cfg)

    def gap(a, b):
        return float(np.max(np.abs(a - b)))

    return SymmetryReport(
        negation=gap(neg.values, -r.values),
        odd_reflection=gap(refl.values, -flip_k(r.values)),
        conjugation=gap(conj.values, np.conj(flip_k(r.values))),
    )
