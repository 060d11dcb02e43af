"""LDPC codes: alist parsing, random regular codes, decoding factor graphs."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import CrossoverOutOfRange, InconsistentAdjacency, MalformedAlist
from ..model import FactorGraph, build_graph
from ..oracle import gf2_nullspace


@dataclass(frozen=True)
class LdpcCode:
    """Parity-check structure: n bits, m checks, one bit-index tuple per check."""

    n: int
    m: int
    check_scopes: tuple

    def __post_init__(self):
        if self.n < 1 or self.m < 1:
            raise ValueError("code dimensions must be positive")
        for scope in self.check_scopes:
            if not scope:
                raise ValueError("every check needs at least one bit")
            if any(not 0 <= i < self.n for i in scope):
                raise ValueError("check references a bit outside the block")

    def check_matrix(self) -> np.ndarray:
        h = np.zeros((self.m, self.n), dtype=np.uint8)
        for j, scope in enumerate(self.check_scopes):
            for i in scope:
                h[j, i] ^= 1
        return h


def parse_alist(text: str) -> LdpcCode:
    """Read the standard alist sparse parity-check format.

    Layout: ``n m``, max column/row degrees, per-column degrees, per-row
    degrees, then per-column and per-row 1-based index lists (0-padded).
    Column and row lists are cross-checked against each other.
    """
    rows = [line.split() for line in text.splitlines() if line.strip()]
    try:
        n, m = int(rows[0][0]), int(rows[0][1])
        max_col_deg, max_row_deg = int(rows[1][0]), int(rows[1][1])
        col_deg = [int(t) for t in rows[2]]
        row_deg = [int(t) for t in rows[3]]
        col_lists = rows[4 : 4 + n]
        row_lists = rows[4 + n : 4 + n + m]
        if len(col_deg) != n or len(row_deg) != m:
            raise MalformedAlist("degree list lengths disagree with the header")
        if len(col_lists) != n or len(row_lists) != m:
            raise MalformedAlist("truncated index lists")
        if max(col_deg) > max_col_deg or max(row_deg) > max_row_deg:
            raise MalformedAlist("a degree exceeds the declared maximum")
        col_adj = []
        for i, tokens in enumerate(col_lists):
            entries = [int(t) for t in tokens if int(t) != 0]
            if len(entries) != col_deg[i]:
                raise MalformedAlist(f"column {i} lists {len(entries)} checks, declared {col_deg[i]}")
            col_adj.append(entries)
        scopes = []
        for j, tokens in enumerate(row_lists):
            entries = [int(t) for t in tokens if int(t) != 0]
            if len(entries) != row_deg[j]:
                raise MalformedAlist(f"row {j} lists {len(entries)} bits, declared {row_deg[j]}")
            if any(not 1 <= b <= n for b in entries):
                raise MalformedAlist(f"row {j} references a bit outside 1..{n}")
            scopes.append(tuple(b - 1 for b in entries))
    except (IndexError, ValueError) as err:
        raise MalformedAlist(f"cannot parse alist: {err}") from None

    from_cols = {(j - 1, i) for i, checks in enumerate(col_adj) for j in checks}
    from_rows = {(j, i) for j, scope in enumerate(scopes) for i in scope}
    if from_cols != from_rows:
        raise InconsistentAdjacency("column and row adjacency lists disagree")
    return LdpcCode(n=n, m=m, check_scopes=tuple(scopes))


def random_regular_code(n: int, bit_degree: int, check_degree: int, seed: int = 0) -> LdpcCode:
    """Seeded (bit_degree, check_degree)-regular code with full-rank checks.

    Configuration-model stub matching, resampled deterministically until no
    check repeats a bit and the check matrix has full rank (so the code
    dimension is exactly n - m).
    """
    if n * bit_degree % check_degree != 0:
        raise ValueError("n * bit_degree must be divisible by check_degree")
    m = n * bit_degree // check_degree
    rng = np.random.default_rng(seed)
    stubs = np.repeat(np.arange(n), bit_degree)
    for _ in range(10_000):
        perm = rng.permutation(stubs)
        scopes = [tuple(sorted(perm[j * check_degree : (j + 1) * check_degree])) for j in range(m)]
        if any(len(set(s)) != len(s) for s in scopes):
            continue
        code = LdpcCode(n=n, m=m, check_scopes=tuple(scopes))
        if gf2_nullspace(code.check_matrix()).shape[0] == n - m:
            return code
    raise RuntimeError("could not sample a full-rank regular code; adjust the parameters")


def channel_flip_distance(word, received) -> int:
    return int(np.sum(np.asarray(word, dtype=np.uint8) != np.asarray(received, dtype=np.uint8)))


def ldpc_to_graph(code: LdpcCode, received_word, crossover_p: float) -> FactorGraph:
    """BSC decoding model: likelihood unaries plus hard parity factors.

    Bit unary energy is -log(1-p) where the bit agrees with the received
    word and -log p where it differs; a parity factor is 0 on even-parity
    configurations and +inf otherwise, so the model MAP is the ML codeword.
    """
    if not 0.0 < crossover_p < 0.5:
        raise CrossoverOutOfRange(f"crossover probability must lie in (0, 0.5), got {crossover_p}")
    y = np.asarray(received_word, dtype=np.uint8)
    if y.shape != (code.n,):
        raise ValueError(f"received word needs length {code.n}")
    e_same = -np.log1p(-crossover_p)
    e_diff = -np.log(crossover_p)
    variables = [(f"b{i}", 2) for i in range(code.n)]
    factors = []
    for i in range(code.n):
        table = np.where(np.arange(2) == y[i], e_same, e_diff)
        factors.append((f"obs{i}", [f"b{i}"], table))
    for j, scope in enumerate(code.check_scopes):
        k = len(scope)
        idx = np.indices((2,) * k).sum(axis=0) % 2
        table = np.where(idx == 0, 0.0, np.inf)
        factors.append((f"chk{j}", [f"b{i}" for i in scope], table))
    return build_graph(variables, factors)
