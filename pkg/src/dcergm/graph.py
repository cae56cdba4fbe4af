"""Simple labeled graphs stored as an upper-triangular edge bit vector.

Vertices are ``0 .. n-1``.  Pairs ``(i, j)`` with ``i < j`` are indexed in
row-major order, i.e. the order of ``np.triu_indices(n, 1)``; bit ``e`` of a
graph's bitmask is the presence bit of pair ``e``.

The same presence bits can be read in two encodings: ``ZERO_ONE`` (absent
= 0, present = 1) and ``PLUS_MINUS`` (absent = -1, present = +1).
"""
from __future__ import annotations

import enum
from functools import lru_cache
from math import comb

import numpy as np


class Encoding(str, enum.Enum):
    ZERO_ONE = "zero_one"
    PLUS_MINUS = "plus_minus"

    @classmethod
    def parse(cls, value: "Encoding | str") -> "Encoding":
        if isinstance(value, Encoding):
            return value
        aliases = {"01": cls.ZERO_ONE, "zero_one": cls.ZERO_ONE, "zeroone": cls.ZERO_ONE,
                   "pm": cls.PLUS_MINUS, "plus_minus": cls.PLUS_MINUS, "plusminus": cls.PLUS_MINUS,
                   "+-1": cls.PLUS_MINUS}
        try:
            return aliases[str(value).lower()]
        except KeyError:
            raise ValueError(f"unknown encoding {value!r}") from None


class GraphParseError(ValueError):
    """Raised for malformed graph files; ``lineno`` is 1-based (0 if unknown)."""

    def __init__(self, message: str, lineno: int = 0):
        self.lineno = lineno
        super().__init__(f"line {lineno}: {message}" if lineno else message)


def n_pairs(n: int) -> int:
    return comb(n, 2)


@lru_cache(maxsize=64)
def pair_arrays(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Endpoint arrays ``(rows, cols)`` of all pairs, in bit order. Read-only."""
    rows, cols = np.triu_indices(n, 1)
    rows = rows.astype(np.int64)
    cols = cols.astype(np.int64)
    rows.flags.writeable = False
    cols.flags.writeable = False
    return rows, cols


def pair_index(n: int, i: int, j: int) -> int:
    """Bit index of the unordered pair ``{i, j}``."""
    if i == j:
        raise ValueError(f"self-loop pair ({i}, {j})")
    if i > j:
        i, j = j, i
    if i < 0 or j >= n:
        raise ValueError(f"pair ({i}, {j}) out of range for n={n}")
    return i * n - i * (i + 1) // 2 + (j - i - 1)


class Graph:
    """Immutable simple graph on ``n`` labeled vertices."""

    __slots__ = ("n", "bits", "encoding")

    def __init__(self, n: int, bits, encoding: Encoding | str = Encoding.ZERO_ONE):
        n = int(n)
        if n < 1:
            raise ValueError("a graph needs at least one vertex")
        arr = np.array(bits, dtype=np.uint8).reshape(-1)
        if arr.size != n_pairs(n):
            raise ValueError(f"expected {n_pairs(n)} pair bits for n={n}, got {arr.size}")
        if arr.size and arr.max() > 1:
            raise ValueError("pair bits must be 0 or 1")
        arr.flags.writeable = False
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "bits", arr)
        object.__setattr__(self, "encoding", Encoding.parse(encoding))

    def __setattr__(self, name, value):
        raise AttributeError("Graph is immutable")

    # -- constructors -------------------------------------------------
    @classmethod
    def empty(cls, n: int, encoding=Encoding.ZERO_ONE) -> "Graph":
        return cls(n, np.zeros(n_pairs(n), dtype=np.uint8), encoding)

    @classmethod
    def complete(cls, n: int, encoding=Encoding.ZERO_ONE) -> "Graph":
        return cls(n, np.ones(n_pairs(n), dtype=np.uint8), encoding)

    @classmethod
    def from_edges(cls, n: int, edges, encoding=Encoding.ZERO_ONE) -> "Graph":
        bits = np.zeros(n_pairs(n), dtype=np.uint8)
        for u, v in edges:
            bits[pair_index(n, int(u), int(v))] = 1
        return cls(n, bits, encoding)

    @classmethod
    def from_bitmask(cls, n: int, mask: int, encoding=Encoding.ZERO_ONE) -> "Graph":
        m = n_pairs(n)
        mask = int(mask)
        if mask < 0 or mask >> m:
            raise ValueError(f"bitmask does not fit in {m} pair bits")
        raw = np.frombuffer(mask.to_bytes((m + 7) // 8 or 1, "little"), dtype=np.uint8)
        bits = np.unpackbits(raw, bitorder="little")[:m]
        return cls(n, bits, encoding)

    @classmethod
    def from_adjacency(cls, adj, encoding=Encoding.ZERO_ONE) -> "Graph":
        """Build from a symmetric matrix in the given encoding (diagonal ignored)."""
        a = np.asarray(adj)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValueError("adjacency must be a square matrix")
        if not np.array_equal(a, a.T):
            raise ValueError("adjacency must be symmetric")
        enc = Encoding.parse(encoding)
        rows, cols = pair_arrays(a.shape[0])
        vals = a[rows, cols]
        if enc is Encoding.ZERO_ONE:
            if not np.isin(vals, (0, 1)).all():
                raise ValueError("zero-one adjacency entries must be 0 or 1")
            bits = vals
        else:
            if not np.isin(vals, (-1, 1)).all():
                raise ValueError("plus-minus adjacency entries must be -1 or +1")
            bits = vals > 0
        return cls(a.shape[0], bits.astype(np.uint8), enc)

    # -- views --------------------------------------------------------
    @property
    def n_pairs(self) -> int:
        return self.bits.size

    @property
    def bitmask(self) -> int:
        packed = np.packbits(self.bits, bitorder="little")
        return int.from_bytes(packed.tobytes(), "little")

    def values(self) -> np.ndarray:
        """Pair values in the graph's own encoding (int8, bit order)."""
        if self.encoding is Encoding.ZERO_ONE:
            return self.bits.astype(np.int8)
        return (2 * self.bits.astype(np.int8) - 1).astype(np.int8)

    def adjacency(self) -> np.ndarray:
        """Dense symmetric matrix in the graph's encoding, zero diagonal."""
        a = np.zeros((self.n, self.n), dtype=np.int8)
        rows, cols = pair_arrays(self.n)
        v = self.values()
        a[rows, cols] = v
        a[cols, rows] = v
        return a

    def value(self, i: int, j: int) -> int:
        return int(self.values()[pair_index(self.n, i, j)])

    def has_edge(self, i: int, j: int) -> bool:
        return bool(self.bits[pair_index(self.n, i, j)])

    def row_bitsets(self) -> list[int]:
        """Neighbourhoods as python-int bitsets (bit v of row u set iff u~v)."""
        rows = [0] * self.n
        r, c = pair_arrays(self.n)
        for e in np.flatnonzero(self.bits):
            u, v = int(r[e]), int(c[e])
            rows[u] |= 1 << v
            rows[v] |= 1 << u
        return rows

    def with_edge(self, i: int, j: int, present: bool) -> "Graph":
        bits = self.bits.copy()
        bits[pair_index(self.n, i, j)] = 1 if present else 0
        return Graph(self.n, bits, self.encoding)

    def recode(self, encoding) -> "Graph":
        return Graph(self.n, self.bits, encoding)

    def permuted(self, perm) -> "Graph":
        """Relabel: vertex ``v`` of the result is vertex ``perm[v]`` of self."""
        perm = np.asarray(perm)
        a = self.adjacency()
        return Graph.from_adjacency(a[np.ix_(perm, perm)], self.encoding)

    # -- dunder -------------------------------------------------------
    def __eq__(self, other):
        if not isinstance(other, Graph):
            return NotImplemented
        return (self.n == other.n and self.encoding is other.encoding
                and np.array_equal(self.bits, other.bits))

    def __hash__(self):
        return hash((self.n, self.encoding, self.bits.tobytes()))

    def __repr__(self):
        return f"Graph(n={self.n}, edges={int(self.bits.sum())}, encoding={self.encoding.value})"


def degrees(g: Graph) -> np.ndarray:
    """Row sums of the adjacency matrix in the graph's own encoding.

    ``d_i`` for zero-one graphs; ``k_i = sum_j Y_ij`` for plus-minus graphs.
    """
    rows, cols = pair_arrays(g.n)
    v = g.values().astype(np.int64)
    return np.bincount(rows, weights=v, minlength=g.n).astype(np.int64) + \
        np.bincount(cols, weights=v, minlength=g.n).astype(np.int64)


# -- serialization ----------------------------------------------------------

def to_edge_list(g: Graph) -> str:
    """``n`` on the first line, then one ``u v`` line per present edge."""
    rows, cols = pair_arrays(g.n)
    lines = [str(g.n)]
    lines += [f"{rows[e]} {cols[e]}" for e in np.flatnonzero(g.bits)]
    return "\n".join(lines) + "\n"


def parse_edge_list(text: str, encoding=Encoding.ZERO_ONE) -> Graph:
    """Inverse of :func:`to_edge_list`. Blank lines and ``#`` comments are skipped."""
    n = None
    edges = []
    seen = set()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if n is None:
            if len(parts) != 1:
                raise GraphParseError("expected the vertex count on its own line", lineno)
            try:
                n = int(parts[0])
            except ValueError:
                raise GraphParseError(f"vertex count {parts[0]!r} is not an integer", lineno) from None
            if n < 1:
                raise GraphParseError("vertex count must be positive", lineno)
            continue
        if len(parts) != 2:
            raise GraphParseError(f"expected 'u v', got {line!r}", lineno)
        try:
            u, v = int(parts[0]), int(parts[1])
        except ValueError:
            raise GraphParseError(f"non-integer vertex in {line!r}", lineno) from None
        if not (0 <= u < n and 0 <= v < n):
            raise GraphParseError(f"vertex out of range 0..{n - 1} in {line!r}", lineno)
        if u == v:
            raise GraphParseError(f"self-loop {u} {v}", lineno)
        key = (min(u, v), max(u, v))
        if key in seen:
            raise GraphParseError(f"duplicate edge {u} {v}", lineno)
        seen.add(key)
        edges.append(key)
    if n is None:
        raise GraphParseError("empty graph file")
    return Graph.from_edges(n, edges, encoding)


def to_hex(g: Graph) -> str:
    """Compact form ``"<n>:<bitmask in hex>"``."""
    return f"{g.n}:{g.bitmask:x}"


def parse_hex(text: str, encoding=Encoding.ZERO_ONE) -> Graph:
    try:
        n_txt, mask_txt = text.strip().split(":")
        n = int(n_txt)
        mask = int(mask_txt, 16)
    except ValueError:
        raise GraphParseError(f"malformed hex graph {text.strip()!r}") from None
    try:
        return Graph.from_bitmask(n, mask, encoding)
    except ValueError as exc:
        raise GraphParseError(str(exc)) from None


def read_graph(path, encoding=Encoding.ZERO_ONE) -> Graph:
    """Read either serialization; a single ``n:hex`` token selects the hex form."""
    with open(path) as fh:
        text = fh.read()
    stripped = text.strip()
    if ":" in stripped and "\n" not in stripped:
        return parse_hex(stripped, encoding)
    return parse_edge_list(text, encoding)
