"""UAI MARKOV model format, read and write.

Tables in the file are potentials; they convert to energies by -log, with
a zero entry becoming the +inf sentinel. Writing inverts the map, so a
round trip reproduces finite energies to within float rounding.
"""

from __future__ import annotations

import numpy as np

from ..errors import MalformedUai, NegativeProbability
from ..model import FactorGraph, build_graph


def parse_uai(text: str) -> FactorGraph:
    tokens = text.split()
    pos = 0

    def take(what: str) -> str:
        nonlocal pos
        if pos >= len(tokens):
            raise MalformedUai(f"unexpected end of file while reading {what}")
        tok = tokens[pos]
        pos += 1
        return tok

    def take_int(what: str) -> int:
        tok = take(what)
        try:
            return int(tok)
        except ValueError:
            raise MalformedUai(f"expected an integer {what}, got {tok!r}") from None

    header = take("network type")
    if header.upper() != "MARKOV":
        raise MalformedUai(f"expected MARKOV network, got {header!r}")
    n = take_int("variable count")
    if n < 1:
        raise MalformedUai("need at least one variable")
    cards = [take_int(f"cardinality of variable {i}") for i in range(n)]
    m = take_int("factor count")
    scopes = []
    for a in range(m):
        arity = take_int(f"arity of factor {a}")
        scope = [take_int(f"scope entry of factor {a}") for _ in range(arity)]
        if any(not 0 <= i < n for i in scope):
            raise MalformedUai(f"factor {a} references a variable outside 0..{n - 1}")
        scopes.append(scope)
    factors = []
    for a, scope in enumerate(scopes):
        size = take_int(f"table size of factor {a}")
        expected = int(np.prod([cards[i] for i in scope])) if scope else 1
        if size != expected:
            raise MalformedUai(f"factor {a} declares {size} entries, scope needs {expected}")
        values = np.empty(size)
        for k in range(size):
            tok = take(f"table entry of factor {a}")
            try:
                values[k] = float(tok)
            except ValueError:
                raise MalformedUai(f"bad table entry {tok!r} in factor {a}") from None
        if np.any(values < 0):
            raise NegativeProbability(f"factor {a} has a negative potential")
        with np.errstate(divide="ignore"):
            energies = -np.log(values)
        factors.append((f"f{a}", [f"v{i}" for i in scope], energies))
    return build_graph([(f"v{i}", cards[i]) for i in range(n)], factors)


def write_uai(graph: FactorGraph) -> str:
    lines = ["MARKOV", str(graph.n_vars)]
    lines.append(" ".join(str(int(c)) for c in graph.var_cards))
    lines.append(str(graph.n_factors))
    for scope in graph.scopes:
        lines.append(" ".join([str(len(scope))] + [str(i) for i in scope]))
    lines.append("")
    for table in graph.tables:
        with np.errstate(over="ignore"):
            pots = np.exp(-table.ravel())
        lines.append(str(table.size))
        lines.append(" ".join(repr(float(p)) for p in pots))
        lines.append("")
    return "\n".join(lines) + "\n"
