from pathlib import Path

import numpy as np
import pytest

from nussbaum_consensus.config import load_scenario
from nussbaum_consensus.digraph import DiGraph
from nussbaum_consensus.simulate import simulate

ROOT = Path(__file__).resolve().parents[1]
SCENARIOS = ROOT / "scenarios"
GRAPHS = SCENARIOS / "graphs"

SWITCHING_X0 = (-1.0, 1.2, -3.0, 1.5)
SWITCHING_V0 = (-0.2, -1.0, 0.2, 1.0)
SWITCHING_GAINS = (1.0, -4.0, -3.0, 6.0)


def graph1(n, *edges):
    """Graph from 1-indexed ``(src, dst[, weight])`` edges."""
    triples = [(e[0] - 1, e[1] - 1, e[2] if len(e) > 2 else 1.0) for e in edges]
    return DiGraph.from_edges(n, triples)


# brute-force oracles --------------------------------------------------------------
# Independent of the library: plain boolean transitive closure.


def reach(adj):
    """reach[k][i] is True iff there is a directed path k -> i (or k == i)."""
    n = len(adj)
    r = [[k == i or adj[k][i] for i in range(n)] for k in range(n)]
    for m in range(n):
        for k in range(n):
            if r[k][m]:
                for i in range(n):
                    if r[m][i]:
                        r[k][i] = True
    return r


def edge_matrix(g):
    """adj[k][i] True iff edge k -> i."""
    w = g.weights
    return [[bool(w[i, k] > 0) for i in range(g.n)] for k in range(g.n)]


def oracle_sccs(g):
    r = reach(edge_matrix(g))
    seen, out = set(), []
    for k in range(g.n):
        if k in seen:
            continue
        comp = frozenset(i for i in range(g.n) if r[k][i] and r[i][k])
        seen |= comp
        out.append(comp)
    return out


def oracle_bases(g):
    adj = edge_matrix(g)
    out = []
    for comp in oracle_sccs(g):
        if not any(adj[k][i] for i in comp for k in range(g.n) if k not in comp):
            out.append(comp)
    return sorted(out, key=min)


def oracle_joint_basis(gs):
    n = gs[0].n
    adj = [[False] * n for _ in range(n)]
    covered = set()
    for g in gs:
        a = edge_matrix(g)
        for comp in oracle_bases(g):
            covered |= comp
            for k in comp:
                for i in comp:
                    if a[k][i]:
                        adj[k][i] = True
    r = reach(adj)
    return len(covered) == n and all(r[k][i] for k in range(n) for i in range(n))


# random graphs ------------------------------------------------------------------


def random_digraph(rng, n, density=None):
    density = rng.uniform(0.05, 0.6) if density is None else density
    w = np.where(rng.random((n, n)) < density, rng.uniform(0.1, 5.0, (n, n)), 0.0)
    np.fill_diagonal(w, 0.0)
    return DiGraph(w)


def random_strongly_connected(rng, n):
    """Hamiltonian cycle through a random permutation plus random chords."""
    w = np.where(rng.random((n, n)) < rng.uniform(0, 0.5), rng.uniform(0.1, 5.0, (n, n)), 0.0)
    perm = rng.permutation(n)
    for a, b in zip(perm, np.roll(perm, -1)):
        if a != b:
            w[b, a] = rng.uniform(0.1, 5.0)
    np.fill_diagonal(w, 0.0)
    return DiGraph(w)


# shared closed-loop runs ----------------------------------------------------------


@pytest.fixture(scope="session")
def switching_si():
    sc = load_scenario(SCENARIOS / "switching_si.toml").scenario.replace(record_every=1)
    return sc, simulate(sc)


@pytest.fixture(scope="session")
def switching_di():
    sc = load_scenario(SCENARIOS / "switching_di.toml").scenario.replace(record_every=1)
    return sc, simulate(sc)


# acceptance summary ---------------------------------------------------------------

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
