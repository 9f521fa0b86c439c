"""Solvers for the scattering problems at a single spectral or spatial node.

The three systems share one shape.  With an "outer" weight ``a`` (a function
on the grid) the pair ``(first, second)`` solves

    first  = 1 + (1/2) Pbar[ a * conj(second) ]
    second =     (1/2) Pbar[ a * conj(first) ]

and eliminating ``second`` gives the complex-linear equation
``first = 1 + T first`` with ``T f = (1/4) Pbar[ a * P[ conj(a) f ] ]``.  Here
``Pbar`` and ``P`` are the lattice Cauchy transforms from :mod:`field_core`.

* direct problem at spectral parameter ``k``: ``a = e_k(z) u(z)``
* inverse problem at position ``z``: ``a = e_k(z) conj(r(k))``
* the sharp problem (position ``-z``): ``a = e_{-k}(z) r(k)``
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.sparse.linalg import LinearOperator, gmres

from .field_core import ComplexField, dbar_inv, dbar_z, d_inv, smooth_window, weight

__all__ = [
    "SolverConfig",
    "ScatteringSolution",
    "NonConvergence",
    "scattering_operator",
    "real_linear_operator",
    "solve_pair",
    "solve_mu",
    "solve_nu",
    "solve_nu_sharp",
    "eta",
    "eta_identity_errors",
    "extract_coeff",
]

METHODS = ("born", "krylov")


@dataclass(frozen=True)
class SolverConfig:
    tolerance: float = 1e-10
    max_iterations: int = 200
    method: str = "born"

    def __post_init__(self):
        if not self.tolerance > 0:
            raise ValueError("tolerance must be positive")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be at least 1")
        if self.method not in METHODS:
            raise ValueError(f"method must be one of {METHODS}")


@dataclass(frozen=True)
class ScatteringSolution:
    first: ComplexField
    second: ComplexField
    iterations: int
    residual_norm: float
    method: str = "born"


class NonConvergence(RuntimeError):
    """Neither Born iteration nor the Krylov fallback met the tolerance."""

    def __init__(self, message: str, residual: float, node: complex | None = None):
        super().__init__(message)
        self.residual = residual
        self.node = node


def scattering_operator(outer: ComplexField) -> Callable[[ComplexField], ComplexField]:
    """The map ``f -> (1/4) Pbar[a P[conj(a) f]]`` for the outer weight ``a``."""
    inner = outer.conj()

    def apply(f: ComplexField) -> ComplexField:
        return 0.25 * dbar_inv(outer * d_inv(inner * f))

    return apply


def real_linear_operator(apply: Callable[[ComplexField], ComplexField], grid) -> LinearOperator:
    """Represent a real-linear field map on stacked ``(Re, Im)`` vectors of length ``2 N^2``."""
    n = grid.N * grid.N

    def matvec(x):
        f = ComplexField(grid, (x[:n] + 1j * x[n:]).reshape(grid.shape))
        out = apply(f).values.ravel()
        return np.concatenate([out.real, out.imag])

    return LinearOperator((2 * n, 2 * n), matvec=matvec, dtype=float)


def _relative(a: np.ndarray, b: np.ndarray) -> float:
    nb = np.linalg.norm(b)
    return float(np.linalg.norm(a) / nb) if nb > 0 else float(np.linalg.norm(a))


def _born(T, one: ComplexField, cfg: SolverConfig):
    m = one
    previous = np.inf
    growth = 0
    for it in range(1, cfg.max_iterations + 1):
        new = one + T(m)
        change = _relative(new.values - m.values, m.values)
        if change <= cfg.tolerance:
            return m, it
        if not np.isfinite(change) or change > 1e6:
            return None, it
        growth = growth + 1 if change > previous else 0
        if growth >= 3:
            return None, it
        previous = change
        m = new
    return None, cfg.max_iterations


def _krylov(T, one: ComplexField, cfg: SolverConfig):
    grid = one.grid
    op = real_linear_operator(lambda f: f - T(f), grid)
    n = grid.N * grid.N
    rhs = np.concatenate([np.ones(n), np.zeros(n)])
    count = [0]

    def tally(_):
        count[0] += 1

    # the iteration budget counts operator applications, not restarts
    restart = min(60, cfg.max_iterations)
    sol, _ = gmres(
        op, rhs, rtol=0.1 * cfg.tolerance, atol=0.0, restart=restart,
        maxiter=-(-cfg.max_iterations // restart), callback=tally, callback_type="pr_norm",
    )
    return ComplexField(grid, (sol[:n] + 1j * sol[n:]).reshape(grid.shape)), count[0]


def solve_pair(outer: ComplexField, cfg: SolverConfig = SolverConfig()) -> ScatteringSolution:
    """Solve the two-component system for a given outer weight."""
    T = scattering_operator(outer)
    one = ComplexField(outer.grid, np.ones(outer.grid.shape))
    first, iterations, method = None, 0, cfg.method
    if cfg.method == "born":
        first, iterations = _born(T, one, cfg)
    if first is None:
        method = "krylov"
        first, more = _krylov(T, one, cfg)
        iterations += more
    second = 0.5 * dbar_inv(outer * first.conj())
    # substitute back into the undivided first equation
    lhs = first - one - 0.5 * dbar_inv(outer * second.conj())
    residual = _relative(lhs.values, first.values)
    if not residual <= 10 * cfg.tolerance:
        raise NonConvergence(
            f"scattering solve stalled at relative residual {residual:.3e}", residual
        )
    return ScatteringSolution(first, second, iterations, residual, method)


def solve_mu(u: ComplexField, k: complex, cfg: SolverConfig = SolverConfig()) -> ScatteringSolution:
    """Direct problem at spectral parameter ``k`` on the z-grid of ``u``."""
    try:
        return solve_pair(weight(k, u.grid.points) * u, cfg)
    except NonConvergence as exc:
        exc.node = k
        raise


def solve_nu(r: ComplexField, z: complex, cfg: SolverConfig = SolverConfig()) -> ScatteringSolution:
    """Inverse problem at position ``z`` on the k-grid of ``r``."""
    try:
        return solve_pair(weight(r.grid.points, z) * r.conj(), cfg)
    except NonConvergence as exc:
        exc.node = z
        raise


def solve_nu_sharp(r: ComplexField, z: complex, cfg: SolverConfig = SolverConfig()) -> ScatteringSolution:
    """Sharp problem: the inverse problem posed at ``-z``, with the weights swapped.

    Pass the same ``z`` as for :func:`solve_nu`; the sign flip is built in.
    """
    try:
        return solve_pair(weight(-r.grid.points, z) * r, cfg)
    except NonConvergence as exc:
        exc.node = z
        raise


def _eta_parts(r: ComplexField, z: complex, cfg: SolverConfig):
    plain = solve_nu(r, z, cfg)
    sharp = solve_nu_sharp(r, z, cfg)
    e = weight(r.grid.points, z)
    first = sharp.second * (0.5 * e) * r.conj() * plain.second.conj()
    second = (0.5 * np.conj(e)) * r * sharp.first.conj() * plain.first
    return plain, sharp, first + second


def eta(r: ComplexField, z: complex, cfg: SolverConfig = SolverConfig()) -> ComplexField:
    """The bilinear combination of the plain and sharp solutions at ``z``."""
    return _eta_parts(r, z, cfg)[2]


def eta_identity_errors(
    r: ComplexField,
    z: complex,
    cfg: SolverConfig = SolverConfig(),
    inner: float = 0.6,
    outer: float = 0.9,
) -> tuple[float, float]:
    """Relative L2 mismatch of the two d-bar identities satisfied by ``eta``.

    The products involved carry ``1/k`` tails, so their k-derivatives are taken
    after a smooth cutoff and compared on ``|k| <= inner * L``.
    """
    plain, sharp, eta_k = _eta_parts(r, z, cfg)
    grid = r.grid
    window = smooth_window(grid, inner * grid.L, outer * grid.L)
    mask = np.abs(grid.points) <= inner * grid.L

    lhs1 = dbar_z(window * (sharp.second * plain.first))
    lhs2 = dbar_z(window * (sharp.first * plain.second))

    def rel(a, b):
        return _relative((a.values - b.values)[mask], b.values[mask])

    return rel(lhs1, eta_k), rel(lhs2, eta_k.conj())


def extract_coeff(dbar_g: ComplexField, n: int, R: float | None = None) -> complex:
    """``(1/pi) * sum_{|k| <= R} k^n dbar_g(k) h^2``.

    For ``g`` with a tail ``sum_m g_m / k^m`` and ``dbar_g`` supported inside
    the disc, this is the coefficient of ``1/k^(n+1)``.
    """
    grid = dbar_g.grid
    if n < 1:
        raise ValueError("n must be a positive integer")
    if R is None:
        R = 0.75 * grid.L
    if not 0 < R <= grid.L:
        raise ValueError(f"radius {R} does not fit inside the grid half-width {grid.L}")
    k = grid.points
    inside = np.abs(k) <= R
    total = np.sum(k[inside] ** n * dbar_g.values[inside])
    return complex(total * grid.h**2 / np.pi)
