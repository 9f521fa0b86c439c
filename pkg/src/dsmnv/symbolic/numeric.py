"""Evaluate symbolic expressions on a sampled potential."""

from __future__ import annotations

import numpy as np

from ..field_core import ComplexField, d_inv, d_z, dbar_inv, dbar_z
from .expr import Apply, Atom, Node, SymExpr

_OPS = {"d": d_z, "db": dbar_z, "di": d_inv, "dbi": dbar_inv}


def numeric_eval(expr: SymExpr, u: ComplexField) -> ComplexField:
    """Replace ``u``, ``ub`` by the samples and each operator by its lattice version."""
    cache: dict = {}

    def ev(node: Node) -> ComplexField:
        hit = cache.get(node)
        if hit is not None:
            return hit
        if isinstance(node, Atom):
            out = u if node.name == "u" else u.conj()
        elif isinstance(node, Apply):
            out = _OPS[node.op](ev(node.child))
        else:
            out = ComplexField(u.grid, np.ones(u.grid.shape))
            for f in node.factors:
                out = out * ev(f)
        cache[node] = out
        return out

    total = np.zeros(u.grid.shape, complex)
    for node, c in expr.items():
        total += float(c) * ev(node).values
    return ComplexField(u.grid, total)
