"""Community detection on weighted graphs.

Four algorithms operate on the same WeightedGraph: Louvain, agglomerative
fast-greedy modularity, a two-level map-equation minimizer, and a
multiscale Potts-model descent with a stability sweep over resolution
values. All of them return compact community assignments and are
deterministic for a fixed seed.
"""

import math
from dataclasses import dataclass, field

import numpy as np

_EPS = 1e-12


@dataclass
class WeightedGraph:
    n: int
    edges: list                      # (i, j, w) with i <= j; self-loops allowed
    adj: list = field(default=None)  # per node: list of (neighbor, w), no self
    self_loops: np.ndarray = field(default=None)
    strength: np.ndarray = field(default=None)
    total_weight: float = 0.0        # each edge once, self-loops once

    @classmethod
    def from_edges(cls, n, edges):
        adj = [[] for _ in range(n)]
        self_loops = np.zeros(n)
        strength = np.zeros(n)
        total = 0.0
        canon = []
        for i, j, w in edges:
            if w < 0 or not math.isfinite(w):
                raise ValueError(f"bad edge weight {w}")
            i, j = (int(i), int(j)) if i <= j else (int(j), int(i))
            canon.append((i, j, float(w)))
            total += w
            if i == j:
                # coarsening self-loop: weight w in-community, 2w strength
                self_loops[i] += w
                strength[i] += 2.0 * w
            else:
                adj[i].append((j, float(w)))
                adj[j].append((i, float(w)))
                strength[i] += w
                strength[j] += w
        return cls(n=n, edges=canon, adj=adj, self_loops=self_loops,
                   strength=strength, total_weight=total)


def from_rag(rag, min_weight=0.0):
    """WeightedGraph from a weighted RAG, dropping numerically dead edges.

    Edges whose similarity falls below min_weight carry no usable
    evidence; keeping them would let scale-invariant quality functions
    merge arbitrarily dissimilar regions.
    """
    if rag.weights is None:
        raise ValueError("RAG has no weights")
    edges = [(int(i), int(j), float(w))
             for (i, j), w in zip(rag.edges, rag.weights) if w >= min_weight and w > 0]
    return WeightedGraph.from_edges(rag.n, edges)


@dataclass
class CommunityResult:
    partition: np.ndarray
    modularity: float
    algorithm: str
    seed: int = 0
    q_trace: list = field(default=None)
    score: float = None       # algorithm-native objective, where distinct from Q
    gamma: float = None


def _compact(assignment):
    _, inv = np.unique(assignment, return_inverse=True)
    return inv.astype(np.int64)


def modularity(g, assignment):
    """Weighted modularity of a partition.

    Q = sum_c [ w_in(c)/W - (s(c)/(2W))^2 ]; reduces to the unweighted
    fraction form on unit weights. Q = 0 by convention on edgeless graphs.
    """
    assignment = np.asarray(assignment)
    if assignment.shape[0] != g.n:
        raise ValueError("partition does not cover all nodes")
    W = g.total_weight
    if W == 0:
        return 0.0
    ncomm = int(assignment.max()) + 1
    w_in = np.zeros(ncomm)
    for i, j, w in g.edges:
        if assignment[i] == assignment[j]:
            w_in[assignment[i]] += w
    s = np.zeros(ncomm)
    np.add.at(s, assignment, g.strength)
    return float(np.sum(w_in / W - (s / (2.0 * W)) ** 2))


# ---------------------------------------------------------------------------
# Louvain

def _louvain_local_moves(g, rng=None, comm=None):
    """Single-node moves until no positive modularity gain remains.

    Moves consider every neighboring community plus a fresh singleton
    (which lets a node escape a bad community). Node order is shuffled
    when an rng is given, otherwise ascending ids (deterministic
    refinement mode). Returns (assignment, any_moved).
    """
    n = g.n
    W = g.total_weight
    comm = np.arange(n) if comm is None else _compact(np.asarray(comm))
    moved_any = False
    while True:
        comm = _compact(comm)
        ncomm = int(comm.max()) + 1
        sigma_tot = np.zeros(ncomm + n)    # strength sum per community
        np.add.at(sigma_tot, comm, g.strength)
        next_free = ncomm
        moved = False
        order = rng.permutation(n) if rng is not None else np.arange(n)
        for v in order:
            cv = comm[v]
            sv = g.strength[v]
            # weight from v to each neighboring community
            links = {}
            for u, w in g.adj[v]:
                links[comm[u]] = links.get(comm[u], 0.0) + w
            sigma_tot[cv] -= sv
            base = links.get(cv, 0.0) / W - sigma_tot[cv] * sv / (2.0 * W * W)
            best_c, best_gain = cv, 0.0
            for c, wc in sorted(links.items()):
                if c == cv:
                    continue
                gain = wc / W - sigma_tot[c] * sv / (2.0 * W * W) - base
                if gain > best_gain + _EPS:
                    best_gain, best_c = gain, c
            if -base > best_gain + _EPS:
                best_gain, best_c = -base, next_free
            sigma_tot[best_c] += sv
            if best_c != cv:
                if best_c == next_free:
                    next_free += 1
                comm[v] = best_c
                moved = True
                moved_any = True
        if not moved:
            break
    return _compact(comm), moved_any


def _coarsen(g, assignment):
    ncomm = int(assignment.max()) + 1
    acc = {}
    for i, j, w in g.edges:
        a, b = assignment[i], assignment[j]
        if a > b:
            a, b = b, a
        acc[(a, b)] = acc.get((a, b), 0.0) + w
    return WeightedGraph.from_edges(ncomm, [(a, b, w) for (a, b), w in acc.items()])


def _louvain_once(g, rng):
    mapping = np.arange(g.n)
    q_trace = [modularity(g, mapping)]
    graph = g
    if g.total_weight > 0:
        while True:
            assignment, moved = _louvain_local_moves(graph, rng)
            if not moved:
                break
            mapping = assignment[mapping]
            q_trace.append(modularity(g, mapping))
            if int(assignment.max()) + 1 == graph.n:
                break
            graph = _coarsen(graph, assignment)
    return _compact(mapping), q_trace


def louvain(g, seed=0, restarts=4):
    """Louvain modularity optimization (move phase + coarsening).

    Runs a few seeded restarts and keeps the highest-modularity result;
    the greedy phases are order-dependent and small graphs are prone to
    local optima."""
    best = None
    for r in range(restarts):
        part, q_trace = _louvain_once(g, np.random.default_rng((seed, r)))
        q = modularity(g, part)
        if best is None or q > best[0] + _EPS:
            best = (q, part, q_trace)
    q, part, q_trace = best
    return CommunityResult(partition=part, modularity=q,
                           algorithm="louvain", seed=seed, q_trace=q_trace)


# ---------------------------------------------------------------------------
# Fast-greedy agglomeration

def fast_greedy(g):
    """Agglomerative merging by best modularity delta.

    Starts from singletons, always merges the edge-connected community
    pair with the largest delta-Q (or least negative), and returns the
    partition with the highest Q seen along the merge sequence.
    Deterministic: ties break on the smallest community id pair.
    """
    n = g.n
    W = g.total_weight
    assignment = np.arange(n)
    if W == 0:
        return CommunityResult(partition=assignment.copy(), modularity=0.0,
                               algorithm="fast_greedy")
    s = g.strength.copy().astype(float)
    nbr = [dict() for _ in range(n)]
    for i, j, w in g.edges:
        if i != j:
            nbr[i][j] = nbr[i].get(j, 0.0) + w
            nbr[j][i] = nbr[j].get(i, 0.0) + w
    alive = set(range(n))
    q = modularity(g, assignment)
    best_q, best_assignment = q, assignment.copy()
    while True:
        best = None
        for a in sorted(alive):
            for b in sorted(nbr[a]):
                if b <= a:
                    continue
                dq = nbr[a][b] / W - s[a] * s[b] / (2.0 * W * W)
                if best is None or dq > best[0] + _EPS:
                    best = (dq, a, b)
        if best is None:
            break
        _, a, b = best
        # merge b into a
        assignment[assignment == b] = a
        s[a] += s[b]
        for c, w in nbr[b].items():
            if c == a:
                continue
            nbr[a][c] = nbr[a].get(c, 0.0) + w
            nbr[c][a] = nbr[c].get(a, 0.0) + w
            del nbr[c][b]
        nbr[a].pop(b, None)
        nbr[b].clear()
        alive.discard(b)
        q = modularity(g, _compact(assignment))
        if q > best_q + _EPS:
            best_q, best_assignment = q, assignment.copy()
    # deterministic single-node polish of the best partition found
    part, _ = _louvain_local_moves(g, comm=_compact(best_assignment))
    return CommunityResult(partition=part, modularity=modularity(g, part),
                           algorithm="fast_greedy")


# ---------------------------------------------------------------------------
# Two-level map equation

def _plogp(x):
    return x * math.log(x) if x > 0.0 else 0.0


def map_equation(g, assignment):
    """Description length of a two-level random-walk coding of the graph.

    Node visit rates are the weighted-degree stationary distribution of
    the undirected walk; no teleportation. Natural-log units.
    """
    assignment = np.asarray(assignment)
    W = g.total_weight
    if W == 0:
        return 0.0
    p = g.strength / (2.0 * W)
    ncomm = int(assignment.max()) + 1
    exit_w = np.zeros(ncomm)
    for i, j, w in g.edges:
        a, b = assignment[i], assignment[j]
        if a != b:
            exit_w[a] += w
            exit_w[b] += w
    q = exit_w / (2.0 * W)
    p_mod = np.zeros(ncomm)
    np.add.at(p_mod, assignment, p)
    L = _plogp(q.sum())
    L -= 2.0 * sum(_plogp(x) for x in q)
    L -= sum(_plogp(x) for x in p)
    L += sum(_plogp(qi + pi) for qi, pi in zip(q, p_mod))
    return float(L)


def infomap(g, seed=0):
    """Greedy node-move minimization of the two-level map equation."""
    rng = np.random.default_rng(seed)
    n = g.n
    if g.total_weight == 0:
        part = np.arange(n)
        return CommunityResult(partition=part, modularity=0.0,
                               algorithm="infomap", seed=seed, score=0.0)
    assignment = np.arange(n)
    cur = map_equation(g, assignment)
    while True:
        moved = False
        for v in rng.permutation(n):
            cv = assignment[v]
            cand = {assignment[u] for u, _ in g.adj[v]}
            cand.add(int(assignment.max()) + 1)   # fresh singleton module
            cand.discard(cv)
            best_c, best_L = cv, cur
            for c in sorted(cand):
                assignment[v] = c
                L = map_equation(g, _compact(assignment))
                if L < best_L - _EPS:
                    best_L, best_c = L, c
                assignment[v] = cv
            if best_c != cv:
                assignment[v] = best_c
                assignment = _compact(assignment)
                cur = best_L
                moved = True
        if not moved:
            break
    part = _compact(assignment)
    return CommunityResult(partition=part, modularity=modularity(g, part),
                           algorithm="infomap", seed=seed,
                           score=map_equation(g, part))


# ---------------------------------------------------------------------------
# Multiscale Potts descent with stability sweep

def potts_energy(g, assignment, gamma):
    """Absolute-Potts Hamiltonian: intra-community links reward their
    weight, intra-community missing links cost gamma."""
    assignment = np.asarray(assignment)
    ncomm = int(assignment.max()) + 1
    sizes = np.bincount(assignment, minlength=ncomm)
    # all intra pairs get the gamma penalty, then adjacent intra pairs
    # trade it back for (w + gamma)
    h = gamma * float(np.sum(sizes * (sizes - 1) // 2))
    for i, j, w in g.edges:
        if i != j and assignment[i] == assignment[j]:
            h -= w + gamma
    return h


def _potts_descent(g, gamma, rng):
    n = g.n
    assignment = np.arange(n)
    members = [{v} for v in range(n)]
    while True:
        moved = False
        for v in rng.permutation(n):
            cv = assignment[v]
            links = {}
            for u, w in g.adj[v]:
                links.setdefault(assignment[u], [0.0, 0])
                links[assignment[u]][0] += w
                links[assignment[u]][1] += 1
            def val(c, exclude_self):
                size = len(members[c]) - (1 if exclude_self else 0)
                wsum, nadj = links.get(c, [0.0, 0])
                return -(wsum) + gamma * (size - nadj)
            cur_val = val(cv, True)
            best_c, best_val = cv, cur_val
            for c in sorted(links):
                if c == cv:
                    continue
                cand = val(c, False)
                if cand < best_val - _EPS:
                    best_val, best_c = cand, c
            if 0.0 < best_val - _EPS:
                # leaving for a fresh singleton community is cheaper
                best_c, best_val = n, 0.0
            if best_c != cv:
                members[cv].discard(v)
                if best_c == n:
                    members.append({v})
                    assignment[v] = len(members) - 1
                else:
                    members[best_c].add(v)
                    assignment[v] = best_c
                moved = True
        if not moved:
            break
    return _compact(assignment)


def fmcdrn(g, gammas=(0.005, 0.01, 0.05, 0.1, 0.5, 1.0), replicas=6, seed=0):
    """Potts-model community detection with a resolution stability sweep.

    For each resolution value the Hamiltonian is minimized from several
    seeded starts; the resolution whose replicas agree most (mean
    pairwise NMI) is selected and its lowest-energy replica returned.
    """
    gammas = list(gammas)
    if not gammas:
        raise ValueError("gamma list must be non-empty")
    if any(gm <= 0 for gm in gammas):
        raise ValueError("gamma values must be positive")
    if replicas < 2:
        raise ValueError("need at least 2 replicas for the stability check")
    best = None   # (mean_nmi, -gamma) maximized
    for gamma in gammas:
        parts = []
        for r in range(replicas):
            rng = np.random.default_rng((seed, int(gamma * 1e9), r))
            parts.append(_potts_descent(g, gamma, rng))
        sims = [nmi(parts[i], parts[j])
                for i in range(replicas) for j in range(i + 1, replicas)]
        mean_nmi = float(np.mean(sims))
        energies = [potts_energy(g, p, gamma) for p in parts]
        k = int(np.argmin(energies))
        key = (mean_nmi, -gamma)
        if best is None or key > best[0]:
            best = (key, gamma, parts[k], energies[k], mean_nmi)
    _, gamma, part, energy, _ = best
    return CommunityResult(partition=part, modularity=modularity(g, part),
                           algorithm="fmcdrn", seed=seed, score=energy,
                           gamma=gamma)


# ---------------------------------------------------------------------------

def nmi(p, q):
    """Normalized mutual information of two partitions of the same nodes,
    normalized by the arithmetic mean of the entropies."""
    p = np.asarray(p)
    q = np.asarray(q)
    if p.shape != q.shape:
        raise ValueError("partitions cover different node sets")
    n = p.size
    if n == 0:
        raise ValueError("empty partitions")
    pc = _compact(p)
    qc = _compact(q)
    np_, nq = int(pc.max()) + 1, int(qc.max()) + 1
    cont = np.zeros((np_, nq))
    np.add.at(cont, (pc, qc), 1.0)
    pi = cont.sum(axis=1) / n
    qj = cont.sum(axis=0) / n
    hp = -sum(_plogp(x) for x in pi)
    hq = -sum(_plogp(x) for x in qj)
    if hp + hq == 0.0:
        # both partitions are the single all-in-one block, hence identical
        return 1.0
    info = 0.0
    for i in range(np_):
        for j in range(nq):
            nij = cont[i, j] / n
            if nij > 0:
                info += nij * math.log(nij / (pi[i] * qj[j]))
    return float(min(max(2.0 * info / (hp + hq), 0.0), 1.0))


ALGORITHMS = {
    "louvain": lambda g, seed=0, **kw: louvain(g, seed=seed),
    "fast_greedy": lambda g, seed=0, **kw: fast_greedy(g),
    "infomap": lambda g, seed=0, **kw: infomap(g, seed=seed),
    "fmcdrn": lambda g, seed=0, gammas=(0.005, 0.01, 0.05, 0.1, 0.5, 1.0),
    replicas=6, **kw: fmcdrn(g, gammas=gammas, replicas=replicas, seed=seed),
}
