"""Regular vine tree sequences.

A vine on nodes 1..d is a sequence of trees T_1..T_q (q <= d-1): T_1 spans the
nodes, and the nodes of T_j are the edges of T_{j-1}, joined only when they
share a component (proximity). Each edge e carries a conditioned pair (a_e,
b_e) and a conditioning set D_e; the pair (a_e, b_e, D_e) identifies an edge
uniquely across the whole sequence.

Edges are entered as nested pairs: a first-tree edge is a pair of node labels,
a deeper edge is a pair of edges of the previous tree, e.g.
``[[(1, 2), (2, 3)], [((1, 2), (2, 3))]]`` for d = 3.
"""
from __future__ import annotations

import itertools
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass, field

from .errors import (
    DomainError,
    InfeasibleDiagonal,
    MalformedMatrix,
    MissingSubset,
    NonpositiveValue,
    NotATree,
    ProximityViolation,
    TruncatedVine,
    UnknownEdge,
    WrongCardinality,
    XVineError,
)


@dataclass(frozen=True)
class Edge:
    """One edge of a vine tree; identity is the triple (a, b, cond)."""

    a: int
    b: int
    cond: frozenset[int]
    union: frozenset[int] = field(compare=False)
    level: int = field(compare=False)
    child_a: Edge | None = field(compare=False, repr=False, default=None)
    child_b: Edge | None = field(compare=False, repr=False, default=None)

    @property
    def key(self) -> tuple[int, int, tuple[int, ...]]:
        return self.a, self.b, tuple(sorted(self.cond))

    @property
    def conditioned(self) -> frozenset[int]:
        return frozenset((self.a, self.b))

    @property
    def label(self) -> str:
        if self.cond:
            return f"({self.a},{self.b};{','.join(map(str, sorted(self.cond)))})"
        return f"({self.a},{self.b})"


def _canon(item, level: int):
    """Canonical nested-frozenset form of a raw edge at the given level."""
    try:
        parts = list(item)
    except TypeError:
        raise WrongCardinality(f"edge entry {item!r} is not a pair") from None
    if len(parts) != 2:
        raise WrongCardinality(f"edge entry {item!r} must have exactly two endpoints")
    if level == 1:
        if not all(isinstance(p, int) and not isinstance(p, bool) for p in parts):
            raise WrongCardinality(f"first-tree edge {item!r} must join two integer nodes")
        out = frozenset(parts)
    else:
        out = frozenset(_canon(p, level - 1) for p in parts)
    if len(out) != 2:
        raise WrongCardinality(f"edge entry {item!r} joins a node to itself")
    return out


def _check_tree(node_set: set, pairs: list[tuple], level: int) -> None:
    """Union-find check that `pairs` is a spanning tree on `node_set`."""
    parent = {x: x for x in node_set}

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for u, v in pairs:
        ru, rv = find(u), find(v)
        if ru == rv:
            raise NotATree(f"tree {level} contains a cycle")
        parent[ru] = rv
    if len({find(x) for x in node_set}) > 1:
        raise NotATree(f"tree {level} is disconnected")


class VineSequence:
    """A validated (possibly truncated) regular vine tree sequence."""

    __slots__ = ("d", "nodes", "trees", "_by_key", "_by_union", "_cond")

    def __init__(self, trees: Sequence[Iterable], d: int | None = None,
                 nodes: Iterable[int] | None = None):
        raw_trees = [list(t) for t in trees]
        if nodes is not None:
            node_set = set(int(x) for x in nodes)
        elif d is not None:
            node_set = set(range(1, d + 1))
        else:
            node_set = set()
            for item in raw_trees[0] if raw_trees else ():
                node_set.update(_canon(item, 1))
        if len(node_set) < 2:
            raise WrongCardinality("a vine needs at least two nodes")
        if not raw_trees or len(raw_trees) > len(node_set) - 1:
            raise WrongCardinality(
                f"need between 1 and {len(node_set) - 1} trees, got {len(raw_trees)}")

        built: list[tuple[Edge, ...]] = []
        prev: dict[frozenset, Edge] = {}
        for lvl, raw in enumerate(raw_trees, start=1):
            expected = len(node_set) - lvl
            if len(raw) != expected:
                raise WrongCardinality(
                    f"tree {lvl} must have {expected} edges, got {len(raw)}")
            edges: list[Edge] = []
            cur: dict[frozenset, Edge] = {}
            pairs: list[tuple] = []
            if lvl == 1:
                for item in raw:
                    ck = _canon(item, 1)
                    x, y = sorted(ck)
                    if not ck <= node_set:
                        raise NotATree(f"edge ({x},{y}) uses a node outside the node set")
                    if ck in cur:
                        raise NotATree(f"duplicate edge ({x},{y}) in tree 1")
                    e = Edge(a=x, b=y, cond=frozenset(), union=ck, level=1)
                    cur[ck] = e
                    edges.append(e)
                    pairs.append((x, y))
                _check_tree(node_set, pairs, 1)
            else:
                for item in raw:
                    ck = _canon(item, lvl)
                    k1, k2 = tuple(ck)
                    if k1 not in prev or k2 not in prev:
                        raise NotATree(
                            f"tree {lvl} endpoint is not an edge of tree {lvl - 1}")
                    e1, e2 = prev[k1], prev[k2]
                    if len(k1 & k2) != 1:
                        raise ProximityViolation(
                            f"edges {e1.label} and {e2.label} share "
                            f"{len(k1 & k2)} components, need exactly 1")
                    union = e1.union | e2.union
                    cond = e1.union & e2.union
                    conditioned = union - cond
                    if len(conditioned) != 2:
                        raise WrongCardinality(
                            f"joining {e1.label} and {e2.label} leaves "
                            f"{len(conditioned)} conditioned variables")
                    x, y = sorted(conditioned)
                    ca = e1 if x in e1.union else e2
                    cb = e2 if ca is e1 else e1
                    if ck in cur:
                        raise NotATree(f"duplicate edge in tree {lvl}")
                    e = Edge(a=x, b=y, cond=cond, union=union, level=lvl,
                             child_a=ca, child_b=cb)
                    cur[ck] = e
                    edges.append(e)
                    pairs.append((k1, k2))
                _check_tree(set(prev), pairs, lvl)
            built.append(tuple(sorted(edges, key=lambda e: e.key)))
            prev = cur

        self.d = len(node_set)
        self.nodes = tuple(sorted(node_set))
        self.trees = tuple(built)
        self._by_key = {e.key: e for t in self.trees for e in t}
        self._by_union = {(e.level, e.union): e for t in self.trees for e in t}
        self._cond = {}
        for t in self.trees:
            for e in t:
                self._cond[(e.a, e.cond | {e.b})] = (e, "a")
                self._cond[(e.b, e.cond | {e.a})] = (e, "b")

    # --- basic views ---------------------------------------------------------

    @property
    def q(self) -> int:
        """Number of trees (truncation level)."""
        return len(self.trees)

    @property
    def is_truncated(self) -> bool:
        return self.q < self.d - 1

    def level_edges(self, j: int) -> tuple[Edge, ...]:
        if not 1 <= j <= self.q:
            raise DomainError(f"tree index {j} outside 1..{self.q}")
        return self.trees[j - 1]

    def edges(self):
        return itertools.chain.from_iterable(self.trees)

    def __eq__(self, other) -> bool:
        if not isinstance(other, VineSequence):
            return NotImplemented
        return self.nodes == other.nodes and tuple(
            tuple(e.key for e in t) for t in self.trees) == tuple(
            tuple(e.key for e in t) for t in other.trees)

    def __hash__(self):
        return hash((self.nodes, tuple(tuple(e.key for e in t) for t in self.trees)))

    def __repr__(self) -> str:
        return f"VineSequence(d={self.d}, q={self.q})"

    # --- lookups -------------------------------------------------------------

    def find_edge(self, ref) -> Edge:
        """Resolve an edge reference: an Edge, (a, b) for tree 1, or (a, b, D)."""
        if isinstance(ref, Edge):
            key = ref.key
        else:
            parts = tuple(ref)
            if len(parts) == 2:
                x, y = sorted(parts)
                key = (x, y, ())
            elif len(parts) == 3:
                x, y = sorted(parts[:2])
                key = (x, y, tuple(sorted(parts[2])))
            else:
                raise UnknownEdge(f"cannot interpret edge reference {ref!r}")
        try:
            return self._by_key[key]
        except KeyError:
            raise UnknownEdge(f"no edge ({key[0]},{key[1]};{key[2]}) in this vine") from None

    def edge_metadata(self, ref):
        """Return (a_e, b_e, D_e, A_e) for the referenced edge."""
        e = self.find_edge(ref)
        return e.a, e.b, e.cond, e.union

    def conditional_edge(self, i: int, given: Iterable[int]):
        """Edge and side providing the conditional of i given `given`, if explicit."""
        return self._cond.get((i, frozenset(given)))

    # --- derived structures ----------------------------------------------------

    def _raw(self, e: Edge):
        if e.level == 1:
            return e.union
        return frozenset((self._raw(e.child_a), self._raw(e.child_b)))

    def sub_vine(self, ref) -> VineSequence:
        """The vine induced on the complete union of the referenced edge."""
        top = self.find_edge(ref)
        raw_trees = []
        for lvl in range(1, top.level + 1):
            raw_trees.append([self._raw(e) for e in self.trees[lvl - 1]
                              if e.union <= top.union])
        return VineSequence(raw_trees, nodes=top.union)

    def truncate(self, q: int) -> VineSequence:
        """Keep only trees 1..q."""
        if not 1 <= q <= self.q:
            raise DomainError(f"truncation level {q} outside 1..{self.q}")
        raw_trees = [[self._raw(e) for e in self.trees[lvl - 1]]
                     for lvl in range(1, q + 1)]
        return VineSequence(raw_trees, nodes=self.nodes)

    def telescoping_product(self, gamma: Mapping[frozenset, float]) -> float:
        """Evaluate the telescoping edge product of a subset functional.

        gamma maps frozensets of nodes to positive reals with gamma({j}) = 1
        (singletons may be omitted). For any such functional the product over
        edges of gamma(D_e) * gamma(A_e) / (gamma(A_child_a) * gamma(A_child_b))
        collapses to gamma of the full node set when the vine is untruncated.
        """
        def g(s: frozenset) -> float:
            if len(s) == 1 and s not in gamma:
                return 1.0
            try:
                v = float(gamma[s])
            except KeyError:
                raise MissingSubset(
                    f"gamma is missing the subset {{{','.join(map(str, sorted(s)))}}}"
                ) from None
            if not v > 0.0:
                raise NonpositiveValue(
                    f"gamma of {{{','.join(map(str, sorted(s)))}}} must be positive, got {v}")
            return v

        out = 1.0
        for e in self.trees[0]:
            out *= g(e.union)
        for t in self.trees[1:]:
            for e in t:
                out *= g(e.cond) * g(e.union) / (g(e.child_a.union) * g(e.child_b.union))
        return out

    # --- structure matrices -----------------------------------------------------

    def to_structure_matrix(self, first_diag: int | None = None,
                            diagonal: Sequence[int] | None = None) -> StructureMatrix:
        """Encode as an upper-triangular structure matrix.

        Columns are filled right to left by repeatedly peeling a node that sits
        in the conditioned pair of exactly one deepest-tree edge. `diagonal`
        pins the whole peel order (position 1 is never peeled); otherwise the
        smallest eligible node other than `first_diag` is peeled each round.
        """
        if diagonal is not None:
            diagonal = tuple(int(x) for x in diagonal)
            if sorted(diagonal) != list(self.nodes):
                raise InfeasibleDiagonal(
                    f"diagonal {diagonal} is not a permutation of the nodes")
            if first_diag is not None and first_diag != diagonal[0]:
                raise InfeasibleDiagonal(
                    f"first_diag={first_diag} conflicts with diagonal[0]={diagonal[0]}")
            first_diag = diagonal[0]
        if first_diag is not None and first_diag not in self.nodes:
            raise InfeasibleDiagonal(f"first_diag={first_diag} is not a node")

        d, q = self.d, self.q
        pos = {n: i for i, n in enumerate(self.nodes)}
        live: list[set[Edge]] = [set(t) for t in self.trees]
        live_nodes = set(self.nodes)
        mat = [[0] * d for _ in range(d)]

        for col in range(d, 1, -1):
            deepest_lvl = min(q, col - 1)
            owners: dict[int, list[Edge]] = {}
            for e in live[deepest_lvl - 1]:
                for m in e.union:
                    owners.setdefault(m, []).append(e)
            peelable = {m: es[0] for m, es in owners.items()
                        if len(es) == 1 and m in (es[0].a, es[0].b)}
            if diagonal is not None:
                want = diagonal[col - 1]
                if want not in peelable:
                    raise InfeasibleDiagonal(
                        f"node {want} cannot occupy diagonal position {col}")
            else:
                cands = set(peelable) - ({first_diag} if first_diag is not None else set())
                if not cands:
                    raise InfeasibleDiagonal(
                        f"no node other than {first_diag} can be peeled at column {col}")
                want = min(cands)
            e = peelable[want]
            for lvl in range(deepest_lvl, 0, -1):
                mat[lvl - 1][col - 1] = e.a if e.b == want else e.b
                live[lvl - 1].discard(e)
                if lvl > 1:
                    e = e.child_a if want in e.child_a.union else e.child_b
            live_nodes.discard(want)
            mat[col - 1][col - 1] = want
        mat[0][0] = live_nodes.pop()
        return StructureMatrix(d=d, trunc=q,
                               matrix=tuple(tuple(row) for row in mat))


@dataclass(frozen=True)
class StructureMatrix:
    """Upper-triangular integer encoding of a (truncated) vine."""

    d: int
    trunc: int
    matrix: tuple[tuple[int, ...], ...]

    def __post_init__(self) -> None:
        d, q, m = self.d, self.trunc, self.matrix
        if d < 2:
            raise MalformedMatrix(f"dimension {d} below 2")
        if not 1 <= q <= d - 1:
            raise MalformedMatrix(f"truncation level {q} outside 1..{d - 1}")
        if len(m) != d or any(len(row) != d for row in m):
            raise MalformedMatrix(f"matrix must be {d}x{d}")
        diag = [m[i][i] for i in range(d)]
        if sorted(diag) != sorted(set(diag)) or len(set(diag)) != d:
            raise MalformedMatrix("diagonal is not a permutation of distinct nodes")
        allowed: set[int] = set()
        for i in range(d):          # column, 0-indexed
            for r in range(d):      # row
                v = m[r][i]
                if r > i and v != 0:
                    raise MalformedMatrix(f"nonzero entry below the diagonal at ({r+1},{i+1})")
                if r < i:
                    filled = r < min(i, q)
                    if filled and v not in allowed:
                        raise MalformedMatrix(
                            f"entry {v} at ({r+1},{i+1}) is not an earlier diagonal node")
                    if not filled and v != 0:
                        raise MalformedMatrix(
                            f"entry at ({r+1},{i+1}) must be 0 beyond truncation level {q}")
            allowed.add(m[i][i])

    @property
    def diagonal(self) -> tuple[int, ...]:
        return tuple(self.matrix[i][i] for i in range(self.d))

    def to_json(self) -> dict:
        return {"d": self.d, "trunc": self.trunc,
                "matrix": [list(row) for row in self.matrix]}

    @classmethod
    def from_json(cls, obj) -> StructureMatrix:
        if not isinstance(obj, Mapping):
            raise MalformedMatrix("structure JSON must be an object")
        try:
            d = int(obj["d"])
            trunc = int(obj["trunc"])
            rows = obj["matrix"]
            matrix = tuple(tuple(int(v) for v in row) for row in rows)
        except (KeyError, TypeError, ValueError) as exc:
            raise MalformedMatrix(f"structure JSON malformed: {exc}") from exc
        return cls(d=d, trunc=trunc, matrix=matrix)


def validate_vine(trees: Sequence[Iterable], d: int | None = None) -> VineSequence:
    """Validate raw nested-pair trees and build a VineSequence."""
    return VineSequence(trees, d=d)


def from_structure_matrix(sm: StructureMatrix) -> VineSequence:
    """Decode a structure matrix back into a vine sequence."""
    d, q, m = sm.d, sm.trunc, sm.matrix
    raw_trees: list[dict] = [dict() for _ in range(q)]   # canonical -> None (ordered set)
    by_union: dict[tuple[int, frozenset], frozenset] = {}
    for i in range(2, d + 1):
        diag = m[i - 1][i - 1]
        prev_raw = None
        prev_union = frozenset((diag,))
        for k in range(1, min(i - 1, q) + 1):
            partner = m[k - 1][i - 1]
            cond = frozenset(m[t - 1][i - 1] for t in range(1, k))
            union = prev_union | {partner}
            if k == 1:
                if partner == diag:
                    raise MalformedMatrix(f"column {i} couples node {diag} to itself")
                raw = frozenset((diag, partner))
            else:
                other = by_union.get((k - 1, cond | {partner}))
                if other is None:
                    raise MalformedMatrix(
                        f"column {i} row {k}: no tree-{k - 1} edge on variables "
                        f"{sorted(cond | {partner})} to couple with")
                raw = frozenset((prev_raw, other))
            by_union[(k, union)] = raw
            raw_trees[k - 1][raw] = None
            prev_raw, prev_union = raw, union
    try:
        return VineSequence([list(t) for t in raw_trees], d=d)
    except XVineError as exc:
        raise MalformedMatrix(f"decoded edges do not form a regular vine: {exc}") from exc


@dataclass(frozen=True)
class SamplingOrder:
    """A node permutation with its nested edge chain for conditional sampling."""

    j: int
    sigma: tuple[int, ...]
    edges: tuple[Edge, ...]


def sampling_order(vine: VineSequence, j: int) -> SamplingOrder:
    """Canonical sampling order started at node j (untruncated vines only).

    sigma(1) = j; each subsequent step extends the chain by an edge of the next
    tree incident to the current chain edge, preferring edges that are leaves
    of the tree after that and breaking ties on the smallest new node.
    """
    if vine.is_truncated:
        raise TruncatedVine(
            f"sampling order needs all {vine.d - 1} trees, vine has {vine.q}")
    if j not in vine.nodes:
        raise DomainError(f"node {j} not in vine")
    sigma = [j]
    seen = {j}
    chain: list[Edge] = []
    current: Edge | None = None
    for lvl in range(1, vine.d):
        if lvl == 1:
            cands = [e for e in vine.trees[0] if j in (e.a, e.b)]
        else:
            cands = [e for e in vine.trees[lvl - 1]
                     if current in (e.child_a, e.child_b)]
        pool = cands
        if len(cands) > 1 and lvl < vine.d - 1:
            degree: dict[Edge, int] = {}
            for f in vine.trees[lvl]:
                degree[f.child_a] = degree.get(f.child_a, 0) + 1
                degree[f.child_b] = degree.get(f.child_b, 0) + 1
            leaves = [e for e in cands if degree.get(e, 0) <= 1]
            pool = leaves or cands
        new = {e: next(iter(e.union - seen)) for e in pool}
        e = min(pool, key=lambda e: new[e])
        chain.append(e)
        sigma.append(new[e])
        seen.add(new[e])
        current = e
    return SamplingOrder(j=j, sigma=tuple(sigma), edges=tuple(chain))


def _prufer_tree(seq: Sequence[int], d: int) -> list[tuple[int, int]]:
    degree = {n: 1 for n in range(1, d + 1)}
    for s in seq:
        degree[s] += 1
    edges = []
    leaves = sorted(n for n in degree if degree[n] == 1)
    for s in seq:
        leaf = leaves.pop(0)
        edges.append((leaf, s))
        degree[s] -= 1
        if degree[s] == 1:
            import bisect
            bisect.insort(leaves, s)
    edges.append((leaves[0], leaves[1]))
    return edges


def random_vine(d: int, rng, q: int | None = None) -> VineSequence:
    """Random regular vine on 1..d (testing aid): random spanning tree per level."""
    if d < 2:
        raise DomainError("need d >= 2")
    q = d - 1 if q is None else q
    if not 1 <= q <= d - 1:
        raise DomainError(f"truncation level {q} outside 1..{d - 1}")
    if d == 2:
        return VineSequence([[(1, 2)]], d=2)
    seq = [int(x) for x in rng.integers(1, d + 1, size=d - 2)]
    level = [frozenset(e) for e in _prufer_tree(seq, d)]
    raw_trees = [list(level)]
    for _ in range(2, q + 1):
        cand = [(x, y) for x, y in itertools.combinations(level, 2) if len(x & y) == 1]
        order = rng.permutation(len(cand))
        parent = {x: x for x in level}

        def find(x):
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        nxt = []
        for idx in order:
            x, y = cand[idx]
            rx, ry = find(x), find(y)
            if rx != ry:
                parent[rx] = ry
                nxt.append(frozenset((x, y)))
        level = nxt
        raw_trees.append(list(level))
    return VineSequence(raw_trees, d=d)
