"""Property checks shared by the ``verify`` command and the test suite.

Each check returns a :class:`CheckResult` with the measured values, the
threshold and a pass flag; none of them raise on a failed property.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .dbar_solver import SolverConfig, eta_identity_errors, extract_coeff, solve_nu
from .field_core import ComplexField, Grid
from .scattering_maps import TransformConfig, check_symmetries, forward_scatter

__all__ = [
    "CheckResult",
    "gaussian",
    "symmetry_check",
    "eta_check",
    "residue_check",
    "bridge_check",
    "ALL_CHECKS",
]


@dataclass
class CheckResult:
    name: str
    passed: bool
    threshold: float
    measured: dict = field(default_factory=dict)

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        values = ", ".join(f"{k}={_fmt(v)}" for k, v in self.measured.items())
        return f"{status} {self.name}: {values} (threshold {self.threshold:g})"

    def as_dict(self) -> dict:
        return {"name": self.name, "passed": self.passed, "threshold": self.threshold,
                "measured": self.measured}


def _fmt(v) -> str:
    if isinstance(v, float):
        return f"{v:.3e}"
    if isinstance(v, list):
        return "[" + ", ".join(_fmt(x) for x in v) + "]"
    return str(v)


def gaussian(grid: Grid, amplitude: float, width: float = 1.0, center: complex = 0.0) -> ComplexField:
    """``amplitude * exp(-|z - center|^2 / width^2)``."""
    return ComplexField.from_function(
        grid, lambda z: amplitude * np.exp(-np.abs(z - center) ** 2 / width**2)
    )


def symmetry_check(cfg: TransformConfig | None = None, amplitude=0.3, center=0.5,
                   threshold=1e-6) -> CheckResult:
    """Negation, odd reflection and conjugation relations on an off-centre Gaussian."""
    cfg = cfg or TransformConfig()
    u = gaussian(cfg.z_grid, amplitude, center=center)
    report = check_symmetries(u, cfg)
    return CheckResult("symmetry", report.worst() < threshold, threshold, report.as_dict())


def eta_check(cfg: SolverConfig | None = None, k_grid: Grid | None = None, amplitude=0.3,
              samples=5, seed=7, threshold=1e-3) -> CheckResult:
    """Both d-bar identities of ``eta`` at random positions, for Gaussian data."""
    cfg = cfg or SolverConfig()
    k_grid = k_grid or TransformConfig().k_grid
    r = gaussian(k_grid, amplitude)
    rng = np.random.default_rng(seed)
    zs = rng.uniform(-1.0, 1.0, samples) + 1j * rng.uniform(-1.0, 1.0, samples)
    plain, conj = [], []
    for z in zs:
        a, b = eta_identity_errors(r, complex(z), cfg)
        plain.append(a)
        conj.append(b)
    worst = max(plain + conj)
    return CheckResult("eta", worst < threshold, threshold, {
        "z": [str(complex(np.round(z, 4))) for z in zs],
        "plain": plain,
        "conjugate": conj,
    })


def mollified_pole(grid: Grid, pole: complex, inner=0.5, outer=3.0) -> ComplexField:
    """``dbar`` of ``(1 - chi) / (k - pole)`` for the radial bump ``chi`` of :func:`smooth_window`.

    The derivative is taken in closed form: for radial ``chi(rho)`` with
    ``rho = |k - pole|`` one has ``dbar chi = chi'(rho) (k - pole) / (2 rho)``.
    """
    rho = np.abs(grid.points - pole)
    t = (rho - inner) / (outer - inner)
    ramp = (t > 0) & (t < 1)
    tt = t[ramp]
    a, b = np.exp(-1.0 / (1.0 - tt)), np.exp(-1.0 / tt)
    dchi = -a * b * (1.0 / (1.0 - tt) ** 2 + 1.0 / tt**2) / (a + b) ** 2 / (outer - inner)
    values = np.zeros(grid.shape, complex)
    values[ramp] = -dchi / (2.0 * rho[ramp])
    return ComplexField(grid, values)


def residue_check(k_grid: Grid | None = None, pole=0.3 + 0.2j, radii=(4.5, 5.0),
                  threshold=1e-4, radius_threshold=1e-10) -> CheckResult:
    """Coefficients of the ``1/k`` tail of a mollified pole against ``pole**n``."""
    k_grid = k_grid or TransformConfig().k_grid
    dbar_g = mollified_pole(k_grid, pole)
    errors, spread = [], []
    for n in (1, 2, 3):
        vals = [extract_coeff(dbar_g, n, R) for R in radii]
        errors.append(abs(vals[-1] - pole**n))
        spread.append(abs(vals[0] - vals[1]))
    ok = max(errors) < threshold and max(spread) < radius_threshold
    return CheckResult("residue", ok, threshold, {
        "error_n1_n3": errors,
        "radius_spread": spread,
    })


def bridge_check(cfg: TransformConfig | None = None, amplitude=0.3, center=0.5,
                 position=-0.5 + 0.75j, magnitudes=(3, 4, 5, 6), r: ComplexField | None = None,
                 target=-4.0, slack=0.5) -> CheckResult:
    """Decay of ``nu_1 - 1 - sum_{l<=2} nu_{1,l}/k^(l+1)`` along the negative real k axis.

    ``nu_1`` comes from the solver at ``position``; the coefficients are the
    symbolic ones evaluated on the potential.  The position is one where the
    next coefficient is not small, so the leading error term is visible.
    """
    from .symbolic import numeric_eval, plain_coefficients

    cfg = cfg or TransformConfig()
    u = gaussian(cfg.z_grid, amplitude, center=center)
    if r is None:
        r = forward_scatter(u, cfg)
    nu1, _ = plain_coefficients(2)
    coeffs = [numeric_eval(c, u).at(position) for c in nu1]
    sol = solve_nu(r, position, cfg.solver)
    kg = cfg.k_grid
    moduli, errors = [], []
    for mag in magnitudes:
        j, i = kg.index_of(-mag)
        k = kg.points[j, i]
        approx = 1 + sum(c / k ** (n + 1) for n, c in enumerate(coeffs))
        moduli.append(float(abs(k)))
        errors.append(float(abs(sol.first.values[j, i] - approx)))
    slope = float(np.polyfit(np.log(moduli), np.log(errors), 1)[0])
    return CheckResult("bridge", abs(slope - target) <= slack, slack, {
        "moduli": moduli,
        "errors": errors,
        "slope": slope,
    })


ALL_CHECKS = {
    "symmetry": symmetry_check,
    "eta": eta_check,
    "residue": residue_check,
    "bridge": bridge_check,
}
