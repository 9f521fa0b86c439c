"""Expressions in ``u``, ``ubar``, the derivatives ``d``, ``db`` and the Cauchy
transforms ``di`` (inverse of ``d``) and ``dbi`` (inverse of ``db``).

Every :class:`SymExpr` is kept in canonical form, a sparse map from canonical
monomials to rational coefficients.  A monomial is canonical when

* products are flattened and their factors sorted;
* derivatives sit only on atoms, as ``d^a db^b`` applied to ``u`` or ``ub``;
* a product holds at most one ``dbi(...)`` factor and at most one ``di(...)``
  factor.  Two of them are merged with the product rule
  ``dbi(f) * dbi(g) = dbi(f * dbi(g) + g * dbi(f))`` (valid for decaying data);
* ``db(dbi(f)) = f``, ``d(di(f)) = f``, while ``d`` commutes past ``dbi`` and
  ``db`` past ``di``; ``dbi(db^b ...atom)`` with ``b >= 1`` drops one ``db``.

Two expressions are equal exactly when their canonical maps are equal.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from numbers import Rational
from typing import Iterable, Iterator, Union

__all__ = [
    "Atom",
    "Apply",
    "Product",
    "Node",
    "SymExpr",
    "SymbolicError",
    "ONE",
    "U",
    "UB",
    "canonicalize",
    "node_text",
    "order",
]

DERIVATIVES = ("d", "db")
INVERSES = ("di", "dbi")
OPERATORS = DERIVATIVES + INVERSES
ATOMS = ("u", "ub")


class SymbolicError(ValueError):
    pass


@dataclass(frozen=True)
class Atom:
    name: str

    def __post_init__(self):
        if self.name not in ATOMS:
            raise SymbolicError(f"unknown atom {self.name!r}")


@dataclass(frozen=True)
class Apply:
    op: str
    child: "Node"

    def __post_init__(self):
        if self.op not in OPERATORS:
            raise SymbolicError(f"unknown operator {self.op!r}")


@dataclass(frozen=True)
class Product:
    factors: tuple


Node = Union[Atom, Apply, Product]
Terms = dict  # Node -> Fraction

ONE = Product(())


@lru_cache(maxsize=None)
def node_text(node: Node) -> str:
    """Canonical text of a monomial; also the sort key for factors and terms."""
    if isinstance(node, Atom):
        return node.name
    if isinstance(node, Apply):
        return f"{node.op}({node_text(node.child)})"
    if not node.factors:
        return "1"
    return "*".join(node_text(f) for f in node.factors)


@lru_cache(maxsize=None)
def order(node: Node) -> int:
    """Number of ``u``/``ub`` occurrences."""
    if isinstance(node, Atom):
        return 1
    if isinstance(node, Apply):
        return order(node.child)
    return sum(order(f) for f in node.factors)


def _operator_count(node: Node) -> int:
    if isinstance(node, Atom):
        return 0
    if isinstance(node, Apply):
        return 1 + _operator_count(node.child)
    return sum(_operator_count(f) for f in node.factors)


# monomial helpers

def _factors(node: Node) -> tuple:
    return node.factors if isinstance(node, Product) else (node,)


def _from_factors(factors) -> Node:
    factors = sorted(factors, key=node_text)
    if not factors:
        return ONE
    if len(factors) == 1:
        return factors[0]
    return Product(tuple(factors))


def _derivative_atom(node: Node):
    """``(atom, a, b)`` if ``node`` is ``d^a db^b atom``, else ``None``."""
    a = b = 0
    while isinstance(node, Apply) and node.op in DERIVATIVES:
        if node.op == "d":
            a += 1
        else:
            b += 1
        node = node.child
    return (node, a, b) if isinstance(node, Atom) else None


def _make_derivative(atom: Atom, a: int, b: int) -> Node:
    node: Node = atom
    for _ in range(b):
        node = Apply("db", node)
    for _ in range(a):
        node = Apply("d", node)
    return node


def _add(acc: Terms, terms: Terms, scale=1) -> Terms:
    for node, c in terms.items():
        v = acc.get(node, 0) + c * scale
        if v:
            acc[node] = v
        else:
            acc.pop(node, None)
    return acc


# canonical algebra on term maps

def _merge(factors: list) -> Terms:
    factors = sorted(factors, key=node_text)
    for op in INVERSES:
        hits = [i for i, f in enumerate(factors) if isinstance(f, Apply) and f.op == op]
        if len(hits) >= 2:
            i, j = hits[0], hits[1]
            first, second = factors[i], factors[j]
            rest = [f for n, f in enumerate(factors) if n not in (i, j)]
            inner: Terms = {}
            _add(inner, _mul_nodes(first.child, second))
            _add(inner, _mul_nodes(second.child, first))
            out: Terms = {}
            for node, c in _apply_terms(op, inner).items():
                _add(out, _merge(rest + list(_factors(node))), c)
            return out
    return {_from_factors(factors): Fraction(1)}


def _mul_nodes(a: Node, b: Node) -> Terms:
    return _merge(list(_factors(a)) + list(_factors(b)))


def _mul_terms(a: Terms, b: Terms) -> Terms:
    out: Terms = {}
    for na, ca in a.items():
        for nb, cb in b.items():
            _add(out, _mul_nodes(na, nb), ca * cb)
    return out


@lru_cache(maxsize=None)
def _apply_node(op: str, node: Node) -> tuple:
    """Canonical terms of ``op(node)`` for a canonical monomial, as a frozen tuple."""
    return tuple(_apply_node_uncached(op, node).items())


def _apply_node_uncached(op: str, node: Node) -> Terms:
    if op in DERIVATIVES:
        if node == ONE:
            return {}
        if isinstance(node, Product):
            out: Terms = {}
            fs = node.factors
            for i, f in enumerate(fs):
                others = fs[:i] + fs[i + 1:]
                for dn, c in _apply_node(op, f):
                    _add(out, _merge(list(others) + list(_factors(dn))), c)
            return out
        if isinstance(node, Apply) and node.op in INVERSES:
            if (op, node.op) in (("db", "dbi"), ("d", "di")):
                return {node.child: Fraction(1)}
            return _apply_terms(node.op, _apply_terms(op, {node.child: Fraction(1)}))
        atom, a, b = _derivative_atom(node)
        return {_make_derivative(atom, a + (op == "d"), b + (op == "db")): Fraction(1)}

    if node == ONE:
        raise SymbolicError(f"{op}(1) does not decay")
    info = _derivative_atom(node)
    if info is not None:
        atom, a, b = info
        if op == "dbi" and b > 0:
            return {_make_derivative(atom, a, b - 1): Fraction(1)}
        if op == "di" and a > 0:
            return {_make_derivative(atom, a - 1, b): Fraction(1)}
    return {Apply(op, node): Fraction(1)}


def _apply_terms(op: str, terms: Terms) -> Terms:
    out: Terms = {}
    for node, c in terms.items():
        _add(out, dict(_apply_node(op, node)), c)
    return out


def _canon(node: Node) -> Terms:
    if isinstance(node, Atom):
        return {node: Fraction(1)}
    if isinstance(node, Apply):
        return _apply_terms(node.op, _canon(node.child))
    acc: Terms = {ONE: Fraction(1)}
    for f in node.factors:
        acc = _mul_terms(acc, _canon(f))
    return acc


def _swap_atoms(node: Node, swap_ops: bool) -> Node:
    if isinstance(node, Atom):
        return Atom("ub" if node.name == "u" else "u")
    if isinstance(node, Apply):
        op = node.op
        if swap_ops:
            op = {"d": "db", "db": "d", "di": "dbi", "dbi": "di"}[op]
        return Apply(op, _swap_atoms(node.child, swap_ops))
    return Product(tuple(_swap_atoms(f, swap_ops) for f in node.factors))


Coefficient = Union[int, Fraction]


class SymExpr:
    """A canonical linear combination of monomials with rational coefficients."""

    __slots__ = ("_terms",)

    def __init__(self, terms: Terms | None = None):
        self._terms = {n: Fraction(c) for n, c in (terms or {}).items() if c}

    # construction

    @classmethod
    def atom(cls, name: str) -> "SymExpr":
        return cls({Atom(name): 1})

    @classmethod
    def constant(cls, value: Coefficient) -> "SymExpr":
        return cls({ONE: value})

    @classmethod
    def from_raw(cls, pairs: Iterable[tuple[Node, Coefficient]]) -> "SymExpr":
        """Canonicalize an arbitrary (not necessarily canonical) combination."""
        acc: Terms = {}
        for node, c in pairs:
            _add(acc, _canon(node), Fraction(c))
        return cls(acc)

    # inspection

    def items(self) -> Iterator[tuple[Node, Fraction]]:
        """Terms sorted by order, then by canonical text."""
        return iter(sorted(self._terms.items(), key=lambda t: (order(t[0]), node_text(t[0]))))

    def coefficient(self, node: Node) -> Fraction:
        return self._terms.get(node, Fraction(0))

    def __len__(self):
        return len(self._terms)

    def is_zero(self) -> bool:
        return not self._terms

    def orders(self) -> list[int]:
        return sorted({order(n) for n in self._terms})

    def part(self, n: int) -> "SymExpr":
        """Terms of total order ``n`` in ``u``, ``ub``."""
        return SymExpr({k: c for k, c in self._terms.items() if order(k) == n})

    def truncate(self, max_order: int) -> "SymExpr":
        return SymExpr({k: c for k, c in self._terms.items() if order(k) <= max_order})

    # algebra

    def __add__(self, other):
        other = _lift(other)
        return SymExpr(_add(dict(self._terms), other._terms))

    __radd__ = __add__

    def __sub__(self, other):
        other = _lift(other)
        return SymExpr(_add(dict(self._terms), other._terms, -1))

    def __rsub__(self, other):
        return _lift(other) - self

    def __neg__(self):
        return SymExpr({n: -c for n, c in self._terms.items()})

    def __mul__(self, other):
        if isinstance(other, (Rational, int)):
            return SymExpr({n: c * other for n, c in self._terms.items()})
        other = _lift(other)
        return SymExpr(_mul_terms(self._terms, other._terms))

    __rmul__ = __mul__

    def apply(self, op: str) -> "SymExpr":
        if op not in OPERATORS:
            raise SymbolicError(f"unknown operator {op!r}")
        return SymExpr(_apply_terms(op, self._terms))

    def d(self):
        return self.apply("d")

    def db(self):
        return self.apply("db")

    def di(self):
        return self.apply("di")

    def dbi(self):
        return self.apply("dbi")

    def sharp(self) -> "SymExpr":
        """Swap ``u`` and ``ub`` and flip the sign of every operator application."""
        return SymExpr.from_raw(
            (_swap_atoms(n, False), c * (-1) ** _operator_count(n)) for n, c in self._terms.items()
        )

    def conj(self) -> "SymExpr":
        """Formal complex conjugate: ``u <-> ub``, ``d <-> db``, ``di <-> dbi``."""
        return SymExpr.from_raw((_swap_atoms(n, True), c) for n, c in self._terms.items())

    # comparison and display

    def __eq__(self, other):
        if isinstance(other, (int, Fraction)):
            other = SymExpr.constant(other)
        if not isinstance(other, SymExpr):
            return NotImplemented
        return self._terms == other._terms

    __hash__ = None

    def __str__(self):
        from .text import format_expr

        return format_expr(self)

    def __repr__(self):
        return f"SymExpr({str(self)!r})"


def _lift(value) -> SymExpr:
    if isinstance(value, SymExpr):
        return value
    if isinstance(value, (Rational, int)):
        return SymExpr.constant(value)
    raise TypeError(f"cannot combine SymExpr with {type(value).__name__}")


def canonicalize(expr: Union[SymExpr, Node]) -> SymExpr:
    """Canonical form of a raw monomial or (already canonical) expression."""
    if isinstance(expr, SymExpr):
        return SymExpr.from_raw(expr._terms.items())
    return SymExpr.from_raw([(expr, 1)])


U = SymExpr.atom("u")
UB = SymExpr.atom("ub")
