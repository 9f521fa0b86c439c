"""Large-k expansion coefficients of the scattering solutions and the
equation of motion assembled from them.

With ``nu_1 ~ 1 + sum nu_{1,l} / k^(l+1)`` and ``nu_2 ~ sum nu_{2,l} / k^(l+1)``
the coefficients obey

    nu_{1,0} = (1/4) dbi(u ub),        nu_{2,0} = (1/2) ub,
    nu_{2,l} = (1/2) ub nu_{1,l-1} - d nu_{2,l-1},
    nu_{1,l} = (1/2) dbi(u nu_{2,l}).

The sharp family follows from the plain one by :meth:`SymExpr.sharp`.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from importlib import resources

from .expr import ONE, U, UB, Apply, Product, SymExpr, SymbolicError, node_text, order
from .text import format_coefficient, parse

__all__ = [
    "DerivationError",
    "plain_coefficients",
    "sharp_coefficients",
    "bracket3",
    "Derivation",
    "derive_mnv",
    "fold_terms",
    "load_golden",
    "check_golden",
]


class DerivationError(AssertionError):
    """An expected cancellation or identity failed; carries the first offending term."""


def plain_coefficients(level: int) -> tuple[list[SymExpr], list[SymExpr]]:
    """``([nu_{1,0..level}], [nu_{2,0..level}])``."""
    if level < 0:
        raise ValueError("level must be non-negative")
    half = Fraction(1, 2)
    nu1 = [Fraction(1, 4) * (U * UB).dbi()]
    nu2 = [half * UB]
    for _ in range(level):
        nxt = half * UB * nu1[-1] - nu2[-1].d()
        nu2.append(nxt)
        nu1.append(half * (U * nxt).dbi())
    return nu1, nu2


def sharp_coefficients(level: int) -> tuple[list[SymExpr], list[SymExpr]]:
    nu1, nu2 = plain_coefficients(level)
    return [c.sharp() for c in nu1], [c.sharp() for c in nu2]


def bracket3(leading: list[SymExpr], trailing: list[SymExpr]) -> SymExpr:
    """Coefficient of ``1/k^4`` in ``(1 + sum a_l/k^(l+1)) (sum b_l/k^(l+1))``.

    ``leading`` holds ``a_0..a_2`` and ``trailing`` holds ``b_0..b_3``.
    """
    a, b = leading, trailing
    return b[3] + b[2] * a[0] + b[1] * a[1] + b[0] * a[2]


def _first_difference(got: SymExpr, want: SymExpr) -> str:
    diff = got - want
    for node, c in diff.items():
        return f"{format_coefficient(c)} * {node_text(node)}"
    return ""


def fold_terms(expr: SymExpr) -> list[tuple[Fraction, Product | Apply, str, SymExpr]]:
    """Group ``c * prefactor * P(inner)`` terms and write each inner sum as ``D(m)``.

    ``P`` is ``dbi`` (with ``D = d``) or ``di`` (with ``D = db``).  Returns
    ``(coefficient, prefactor, P, m)`` tuples; raises :class:`DerivationError`
    when some group has no antiderivative among monomials.
    """
    groups: dict = {}
    for node, c in expr.items():
        factors = node.factors if isinstance(node, Product) else (node,)
        inv = [f for f in factors if isinstance(f, Apply) and f.op in ("di", "dbi")]
        if len(inv) != 1:
            raise DerivationError(f"term {node_text(node)} is not of the form prefactor * P(inner)")
        pre = [f for f in factors if f is not inv[0]]
        pre_node = pre[0] if len(pre) == 1 else Product(tuple(pre))
        key = (node_text(pre_node), inv[0].op, c)
        entry = groups.setdefault(key, [pre_node, inv[0].op, c, SymExpr()])
        entry[3] = entry[3] + SymExpr.from_raw([(inv[0].child, 1)])

    folded = []
    for pre_node, op, c, inner in groups.values():
        deriv = "d" if op == "dbi" else "db"
        m = _antiderivative(inner, deriv)
        if m is None:
            raise DerivationError(f"no {deriv}-antiderivative for {inner}")
        folded.append((c, pre_node, op, m))
    folded.sort(key=lambda t: (t[2] != "dbi", str(t[3])))
    return folded


def _antiderivative(target: SymExpr, deriv: str) -> SymExpr | None:
    """Rational combination ``m`` of monomials with ``deriv(m) == target``."""
    candidates = {}
    for node, _ in target.items():
        factors = node.factors if isinstance(node, Product) else (node,)
        for i, f in enumerate(factors):
            if isinstance(f, Apply) and f.op == deriv:
                lowered = list(factors[:i]) + [f.child] + list(factors[i + 1:])
                cand = SymExpr.from_raw([(Product(tuple(lowered)), 1)])
                for cn, _ in cand.items():
                    candidates[node_text(cn)] = cn
    basis = [SymExpr.from_raw([(n, 1)]) for _, n in sorted(candidates.items())]
    images = [b.apply(deriv) for b in basis]
    rows = sorted({node_text(n) for img in images + [target] for n, _ in img.items()})
    index = {r: i for i, r in enumerate(rows)}

    def column(e):
        col = [Fraction(0)] * len(rows)
        for n, c in e.items():
            col[index[node_text(n)]] = c
        return col

    matrix = [column(img) for img in images]
    rhs = column(target)
    sol = _solve_rational(matrix, rhs)
    if sol is None:
        return None
    out = SymExpr()
    for coeff, b in zip(sol, basis):
        out = out + b * coeff
    return out if out.apply(deriv) == target else None


def _solve_rational(columns: list[list[Fraction]], rhs: list[Fraction]):
    """Exact least-norm-free solve of ``A x = rhs`` (columns of A given); None if inconsistent."""
    nrow, ncol = len(rhs), len(columns)
    aug = [[columns[j][i] for j in range(ncol)] + [rhs[i]] for i in range(nrow)]
    pivots = []
    r = 0
    for c in range(ncol):
        piv = next((i for i in range(r, nrow) if aug[i][c] != 0), None)
        if piv is None:
            continue
        aug[r], aug[piv] = aug[piv], aug[r]
        p = aug[r][c]
        aug[r] = [v / p for v in aug[r]]
        for i in range(nrow):
            if i != r and aug[i][c] != 0:
                f = aug[i][c]
                aug[i] = [a - f * b for a, b in zip(aug[i], aug[r])]
        pivots.append(c)
        r += 1
    if any(all(v == 0 for v in row[:-1]) and row[-1] != 0 for row in aug):
        return None
    x = [Fraction(0)] * ncol
    for i, c in enumerate(pivots):
        x[c] = aug[i][-1]
    return x


@dataclass
class Derivation:
    """Every intermediate of the equation-of-motion computation."""

    nu1: list[SymExpr]
    nu2: list[SymExpr]
    nus1: list[SymExpr]
    nus2: list[SymExpr]
    bracket_plain: SymExpr
    bracket_conj: SymExpr
    velocity: SymExpr
    rhs: SymExpr
    folded: list = field(default_factory=list)

    def folded_text(self) -> str:
        parts = []
        for c, pre, op, m in self.folded:
            inner = "d" if op == "dbi" else "db"
            parts.append(f"{format_coefficient(c)}*{node_text(pre)}*{op}({inner}({m}))")
        return " + ".join(parts)


def derive_mnv() -> Derivation:
    """Assemble ``u_t + d^3 u + db^3 u`` from the third expansion coefficients.

    ``u_t = 2 (I_1 + conj(I_2))`` with ``I_1 = -[nu_2^sharp nu_1]_3`` and
    ``I_2 = [nu_1^sharp nu_2]_3``.  Checks that the first-order terms cancel
    against the dispersion, that orders five and seven vanish, and that the
    cubic remainder folds into four terms with a common coefficient.
    """
    nu1, nu2 = plain_coefficients(3)
    nus1, nus2 = [c.sharp() for c in nu1], [c.sharp() for c in nu2]
    plain = bracket3(nu1, nus2)
    conj = bracket3(nus1, nu2)
    velocity = 2 * (-plain + conj.conj())
    rhs = velocity + U.d().d().d() + U.db().db().db()
    for n in rhs.orders():
        if n != 3:
            part = rhs.part(n)
            raise DerivationError(
                f"order-{n} terms survive: first is {_first_difference(part, SymExpr())}"
            )
    out = Derivation(nu1, nu2, nus1, nus2, plain, conj, velocity, rhs)
    out.folded = fold_terms(rhs)
    return out


def load_golden() -> dict[str, SymExpr]:
    text = resources.files(__package__).joinpath("golden.txt").read_text()
    entries: dict[str, str] = {}
    current = None
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].rstrip()
        if not line.strip():
            continue
        if raw[0].isspace():
            if current is None:
                raise SymbolicError("continuation line before any entry")
            entries[current] += " " + line.strip()
            continue
        name, _, body = line.partition("=")
        current = name.strip()
        entries[current] = body.strip()
    return {name: parse(body) for name, body in entries.items()}


def _computed_entries() -> dict[str, SymExpr]:
    nu1, nu2 = plain_coefficients(3)
    nus1, nus2 = [c.sharp() for c in nu1], [c.sharp() for c in nu2]
    low = lambda e: e.part(1) + e.part(3)  # noqa: E731
    d = derive_mnv()
    out = {}
    for name, fam in (("nu1", nu1), ("nu2", nu2), ("nus1", nus1), ("nus2", nus2)):
        prefix = name[:-1]
        digit = name[-1]
        for level in range(len(fam) if digit == "2" else 3):
            out[f"{prefix}{digit}{level}"] = fam[level]
    out.update(
        nus22_nu10=nus2[2] * nu1[0],
        nus21_nu11=nus2[1] * nu1[1],
        nus21_nu11_expanded=nus2[1] * nu1[1],
        nus20_nu12=nus2[0] * nu1[2],
        nu23_o13=low(nu2[3]),
        nu22_nus10_o13=low(nu2[2] * nus1[0]),
        nu21_nus11_o13=low(nu2[1] * nus1[1]),
        nu20_nus12_o13=low(nu2[0] * nus1[2]),
        bracket_plain=d.bracket_plain.part(1) + d.bracket_plain.part(3),
        bracket_conj=d.bracket_conj.part(1) + d.bracket_conj.part(3),
        mnv_rhs_expanded=d.rhs,
        mnv_rhs=d.rhs,
        nonlinearity_4_3=d.rhs * Fraction(4, 3),
    )
    return out


def check_golden(golden: dict[str, SymExpr] | None = None) -> list[tuple[str, bool, str]]:
    """Compare every computable golden entry; returns ``(name, ok, first difference)``."""
    golden = golden if golden is not None else load_golden()
    computed = _computed_entries()
    results = []
    for name, want in golden.items():
        if name not in computed:
            continue
        got = computed[name]
        ok = got == want
        results.append((name, ok, "" if ok else _first_difference(got, want)))
    return results
