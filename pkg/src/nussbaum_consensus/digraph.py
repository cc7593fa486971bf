"""Weighted digraphs, Laplacians and their connectivity structure.

Agents are 0-indexed in every Python API.  The plain-text graph format used
on disk is 1-indexed::

    # comment
    n=4
    1 2 1.0     # edge 1 -> 2, i.e. a_21 = 1.0

A row ``i`` of the weight matrix lists what agent ``i`` hears: ``weights[i, k]``
is the strength of the edge ``k -> i``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import reduce
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

RANK_RTOL = 1e-9
ROW_SUM_RTOL = 1e-12
POSITIVITY_TOL = 1e-12


class GraphError(ValueError):
    """Base class for graph-related failures."""


class DimensionError(GraphError):
    pass


class StructureError(GraphError):
    """The graph lacks a structural property an operation needs."""


class GraphFileError(GraphError):
    def __init__(self, path, line: int, message: str):
        self.path = str(path)
        self.line = line
        super().__init__(f"{self.path}:{line}: {message}")


@dataclass(frozen=True, eq=False)
class DiGraph:
    """Directed graph over ``n`` agents with nonnegative edge weights."""

    weights: np.ndarray
    name: str = field(default="", compare=False)

    def __post_init__(self):
        w = np.array(self.weights, dtype=float)
        if w.ndim != 2 or w.shape[0] != w.shape[1] or w.shape[0] < 1:
            raise DimensionError(f"weights must be a nonempty square matrix, got shape {w.shape}")
        if not np.all(np.isfinite(w)):
            raise GraphError("weights must be finite")
        if np.any(w < 0):
            raise GraphError("negative edge weights are not supported")
        if np.any(np.diag(w) != 0):
            raise GraphError("self-loops are not supported")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[tuple[int, int, float]], name: str = "") -> "DiGraph":
        """Build from ``(src, dst, weight)`` triples, 0-indexed."""
        w = np.zeros((n, n))
        for src, dst, weight in edges:
            if not (0 <= src < n and 0 <= dst < n):
                raise DimensionError(f"edge ({src}, {dst}) out of range for n={n}")
            w[dst, src] = weight
        return cls(w, name=name)

    @classmethod
    def empty(cls, n: int, name: str = "") -> "DiGraph":
        return cls(np.zeros((n, n)), name=name)

    @property
    def n(self) -> int:
        return self.weights.shape[0]

    def edges(self) -> list[tuple[int, int, float]]:
        """``(src, dst, weight)`` triples, 0-indexed, sorted by (src, dst)."""
        dst, src = np.nonzero(self.weights)
        out = [(int(s), int(d), float(self.weights[d, s])) for d, s in zip(dst, src)]
        return sorted(out)

    def successors(self, k: int) -> list[int]:
        return [int(i) for i in np.nonzero(self.weights[:, k])[0]]

    def in_degrees(self) -> np.ndarray:
        return self.weights.sum(axis=1)

    def subgraph(self, members: Iterable[int]) -> "DiGraph":
        """Same vertex set, keeping only edges with both ends in ``members``."""
        mask = np.zeros(self.n, dtype=bool)
        mask[list(members)] = True
        return DiGraph(self.weights * np.outer(mask, mask))

    def __eq__(self, other):
        if not isinstance(other, DiGraph):
            return NotImplemented
        return np.array_equal(self.weights, other.weights)

    def __hash__(self):
        return hash(self.weights.tobytes())

    def __repr__(self):
        label = f"{self.name!r}, " if self.name else ""
        return f"DiGraph({label}n={self.n}, edges={len(self.edges())})"


def laplacian(g: DiGraph) -> np.ndarray:
    """``L = D - A`` with ``D`` the in-degree matrix."""
    return np.diag(g.in_degrees()) - g.weights


def check_laplacian(l: np.ndarray) -> None:
    l = np.asarray(l, dtype=float)
    if l.ndim != 2 or l.shape[0] != l.shape[1]:
        raise DimensionError(f"Laplacian must be square, got shape {l.shape}")
    scale = np.max(np.abs(l)) if l.size else 0.0
    if np.any(np.abs(l.sum(axis=1)) > ROW_SUM_RTOL * scale):
        raise StructureError("Laplacian rows do not sum to zero")
    off = l - np.diag(np.diag(l))
    if np.any(off > 0) or np.any(np.diag(l) < 0):
        raise StructureError("Laplacian sign pattern violated")


def strongly_connected_components(g: DiGraph) -> list[frozenset[int]]:
    """Tarjan's algorithm with an explicit stack.

    Components come out in reverse topological order of the condensation.
    """
    n = g.n
    succ = [g.successors(k) for k in range(n)]
    index = [-1] * n
    low = [0] * n
    on_stack = [False] * n
    stack: list[int] = []
    comps: list[frozenset[int]] = []
    counter = 0

    for root in range(n):
        if index[root] != -1:
            continue
        work = [(root, 0)]
        index[root] = low[root] = counter
        counter += 1
        stack.append(root)
        on_stack[root] = True
        while work:
            v, pos = work[-1]
            if pos < len(succ[v]):
                work[-1] = (v, pos + 1)
                w = succ[v][pos]
                if index[w] == -1:
                    index[w] = low[w] = counter
                    counter += 1
                    stack.append(w)
                    on_stack[w] = True
                    work.append((w, 0))
                elif on_stack[w]:
                    low[v] = min(low[v], index[w])
                continue
            work.pop()
            if work:
                parent = work[-1][0]
                low[parent] = min(low[parent], low[v])
            if low[v] == index[v]:
                comp = set()
                while True:
                    w = stack.pop()
                    on_stack[w] = False
                    comp.add(w)
                    if w == v:
                        break
                comps.append(frozenset(comp))
    return comps


def is_strongly_connected(g: DiGraph) -> bool:
    return len(strongly_connected_components(g)) == 1


def basis_bicomponents(g: DiGraph) -> list[frozenset[int]]:
    """Strongly connected components that receive no edge from outside.

    Sorted by smallest member so the output is stable.
    """
    out = []
    for comp in strongly_connected_components(g):
        inside = np.zeros(g.n, dtype=bool)
        inside[list(comp)] = True
        if not np.any(g.weights[np.ix_(inside, ~inside)] > 0):
            out.append(comp)
    return sorted(out, key=min)


def union_graph(gs: Sequence[DiGraph]) -> DiGraph:
    """Edge-set union; weights combine by entrywise maximum."""
    if not gs:
        raise GraphError("union of an empty graph list")
    n = gs[0].n
    if any(g.n != n for g in gs):
        raise DimensionError("graphs in a union must share the same agent count")
    return DiGraph(reduce(np.maximum, (g.weights for g in gs)))


def basis_union(gs: Sequence[DiGraph]) -> tuple[DiGraph, frozenset[int]]:
    """Union of every basis bicomponent subgraph, and the vertices it spans."""
    if not gs:
        raise GraphError("need at least one graph")
    if any(g.n != gs[0].n for g in gs):
        raise DimensionError("graphs in a family must share the same agent count")
    parts = []
    covered: set[int] = set()
    for g in gs:
        for comp in basis_bicomponents(g):
            parts.append(g.subgraph(comp))
            covered |= comp
    return union_graph(parts), frozenset(covered)


def has_jointly_strongly_connected_basis(gs: Sequence[DiGraph]) -> bool:
    union, covered = basis_union(gs)
    return len(covered) == union.n and is_strongly_connected(union)


def reduced_laplacian(l: np.ndarray, members: Iterable[int]) -> np.ndarray:
    """Delete the rows and columns of ``l`` outside ``members``.

    Only basis bicomponents give a genuine Laplacian here; any other set
    leaves rows with a nonzero sum and is rejected.
    """
    idx = sorted(members)
    if not idx:
        raise GraphError("members must be nonempty")
    l = np.asarray(l, dtype=float)
    lr = l[np.ix_(idx, idx)]
    scale = np.max(np.abs(l)) if l.size else 0.0
    if np.any(np.abs(lr.sum(axis=1)) > ROW_SUM_RTOL * scale):
        raise StructureError(f"{[i + 1 for i in idx]} is not a basis bicomponent: reduced rows do not sum to zero")
    return lr


def laplacian_rank(l: np.ndarray) -> int:
    s = np.linalg.svd(np.asarray(l, dtype=float), compute_uv=False)
    if s.size == 0 or s[0] == 0.0:
        return 0
    return int(np.sum(s > RANK_RTOL * s[0]))


def left_null_vector(l_r: np.ndarray) -> np.ndarray:
    """Positive left null vector of a strongly connected Laplacian, summing to 1.

    Solved directly: the transposed system with its last equation replaced by
    the normalisation constraint.
    """
    l_r = np.asarray(l_r, dtype=float)
    r = l_r.shape[0]
    if r == 1:
        return np.ones(1)
    if laplacian_rank(l_r) != r - 1:
        raise StructureError("zero eigenvalue is not simple; graph is not strongly connected")
    a = l_r.T.copy()
    a[-1, :] = 1.0
    rhs = np.zeros(r)
    rhs[-1] = 1.0
    omega = np.linalg.solve(a, rhs)
    if np.any(omega <= POSITIVITY_TOL):
        raise StructureError("left null vector is not strictly positive; graph is not strongly connected")
    return omega


def disagreement_sides(weights: np.ndarray, omega: np.ndarray, zeta: np.ndarray) -> tuple[float, float]:
    """Both sides of the weighted disagreement identity on a strongly connected block.

    ``sum_mn w_m a_mn z_m (z_m - z_n)`` and ``1/2 sum_mn w_m a_mn (z_m - z_n)^2``,
    which agree whenever ``omega`` is the left null vector of the block's
    Laplacian.
    """
    a = np.asarray(weights, dtype=float)
    diff = zeta[:, None] - zeta[None, :]
    wa = omega[:, None] * a
    return float(np.sum(wa * zeta[:, None] * diff)), float(0.5 * np.sum(wa * diff**2))


# graph files ------------------------------------------------------------------


def parse_graph(text: str, source="<string>") -> DiGraph:
    n = None
    edges = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if n is None:
            key, sep, value = line.partition("=")
            if not sep or key.strip() != "n":
                raise GraphFileError(source, lineno, "expected header 'n=<count>'")
            try:
                n = int(value.strip())
            except ValueError:
                raise GraphFileError(source, lineno, f"bad agent count {value.strip()!r}") from None
            if n < 1:
                raise GraphFileError(source, lineno, "agent count must be positive")
            continue
        parts = line.split()
        if len(parts) != 3:
            raise GraphFileError(source, lineno, "expected '<from> <to> <weight>'")
        try:
            src, dst, weight = int(parts[0]), int(parts[1]), float(parts[2])
        except ValueError:
            raise GraphFileError(source, lineno, f"cannot parse edge {line!r}") from None
        if not (1 <= src <= n and 1 <= dst <= n):
            raise GraphFileError(source, lineno, f"agent index out of range 1..{n}")
        if src == dst:
            raise GraphFileError(source, lineno, "self-loops are not supported")
        if not (weight > 0 and np.isfinite(weight)):
            raise GraphFileError(source, lineno, "edge weight must be positive and finite")
        edges.append((src - 1, dst - 1, weight))
    if n is None:
        raise GraphFileError(source, 0, "missing header 'n=<count>'")
    return DiGraph.from_edges(n, edges, name=Path(str(source)).stem)


def load_graph(path) -> DiGraph:
    path = Path(path)
    return parse_graph(path.read_text(), source=path)


def format_graph(g: DiGraph) -> str:
    lines = [f"n={g.n}"]
    lines += [f"{s + 1} {d + 1} {w!r}" for s, d, w in g.edges()]
    return "\n".join(lines) + "\n"
