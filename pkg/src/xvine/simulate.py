"""Samplers for X-vine models.

Three laws are exposed: the conditional law given that one fixed coordinate is
below 1 (exact inverse-Rosenblatt along a sampling order), the inverted-Pareto
law (rejection over uniformly chosen conditioning coordinates), and its
reciprocal on the Pareto scale.

Work is carved into fixed-size blocks, each driven by its own counter-based
substream, so output depends only on (seed, n) and never on the thread count.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, InvalidIndex
from .families import pair_h_inv, tail_h_inv
from .model import XVineSpec, _Evaluator
from .numerics import rng_stream
from .vines import Edge, sampling_order

#: Rows per deterministic work unit.
BLOCK = 4096


@dataclass(frozen=True)
class SamplerConfig:
    """CLI-facing sampling request."""

    n: int
    seed: int
    conditioning: int | None = None
    pareto: bool = False
    threads: int = 1

    def __post_init__(self) -> None:
        if self.n < 0:
            raise DomainError(f"sample size must be nonnegative, got {self.n}")
        if self.conditioning is not None and self.pareto:
            raise DomainError("conditional sampling is defined on the inverted scale only")


@dataclass(frozen=True)
class RejectionStats:
    """Bookkeeping from the rejection sampler."""

    proposals: int
    accepted: int

    @property
    def acceptance_rate(self) -> float:
        return self.accepted / self.proposals if self.proposals else float("nan")


def resolve_threads(threads: int | None = None) -> int:
    """Explicit argument, else the XVINE_THREADS variable, else 1."""
    if threads is not None:
        return max(1, int(threads))
    env = os.environ.get("XVINE_THREADS", "")
    try:
        return max(1, int(env)) if env else 1
    except ValueError:
        return 1


def _conditional_plan(spec: XVineSpec, j: int):
    """Sampling order, realized as per-column edge chains of a structure matrix."""
    vine = spec.vine
    if not vine.is_truncated:
        sm = vine.to_structure_matrix(diagonal=sampling_order(vine, j).sigma)
    else:
        sm = vine.to_structure_matrix(first_diag=j)
    m = sm.matrix
    cols: list[tuple[int, list[Edge]]] = []
    for i in range(2, sm.d + 1):
        target = m[i - 1][i - 1]
        chain: list[Edge] = []
        for lvl in range(1, min(i - 1, sm.trunc) + 1):
            giv = frozenset(m[t - 1][i - 1] for t in range(1, lvl + 1))
            hit = vine.conditional_edge(target, giv)
            if hit is None:
                raise InvalidIndex(
                    f"structure matrix column {i} does not resolve {target} | {sorted(giv)}")
            chain.append(hit[0])
        cols.append((target, chain))
    return m[0][0], cols


def _conditional_block(spec: XVineSpec, plan, rng, n: int, trace=None) -> np.ndarray:
    first, cols = plan
    w = rng.random((n, spec.d))
    values: dict[int, np.ndarray] = {first: w[:, 0]}
    ev = _Evaluator(spec, values, trace=trace)
    for k, (target, chain) in enumerate(cols):
        u = w[:, k + 1]
        for e in reversed(chain[1:]):
            partner = e.b if target == e.a else e.a
            child_o = e.child_a if partner == e.a else e.child_b
            zo = ev.r(child_o, partner)
            if trace is not None:
                trace.append(("pair_h_inv", e.key, target))
            u = pair_h_inv(spec.pairs[e], u, zo)
        e1 = chain[0]
        partner = e1.b if target == e1.a else e1.a
        if trace is not None:
            trace.append(("tail_h_inv", e1.key, target))
        values[target] = tail_h_inv(spec.tail[e1], u, values[partner])
    order = {node: idx for idx, node in enumerate(spec.vine.nodes)}
    out = np.empty((n, spec.d))
    for node, arr in values.items():
        out[:, order[node]] = arr
    return out


def _blocked(n: int, threads: int, worker) -> list:
    """Run worker(block_index, block_size) over fixed-size blocks, in order."""
    sizes = [(b, min(BLOCK, n - b * BLOCK)) for b in range((n + BLOCK - 1) // BLOCK)]
    if threads > 1 and len(sizes) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(lambda bs: worker(*bs), sizes))
    return [worker(*bs) for bs in sizes]


def sample_conditional(spec: XVineSpec, j: int, n: int, seed: int,
                       threads: int | None = None,
                       _trace: list | None = None) -> np.ndarray:
    """Draw from the model law conditioned on coordinate j being below 1.

    Coordinate j is uniform on (0, 1); the rest follow by inverting the
    conditional CDF recursion down a structure-matrix column each.
    """
    if j not in spec.vine.nodes:
        raise DomainError(f"conditioning variable {j} not in model")
    if n < 0:
        raise DomainError(f"sample size must be nonnegative, got {n}")
    threads = resolve_threads(threads)
    plan = _conditional_plan(spec, j)
    if n == 0:
        return np.empty((0, spec.d))
    if _trace is not None:
        return _conditional_block(spec, plan, rng_stream(seed, 0), n, trace=_trace)
    parts = _blocked(n, threads,
                     lambda b, m: _conditional_block(spec, plan, rng_stream(seed, b), m))
    return np.vstack(parts)


def _rejection_block(spec: XVineSpec, plans, n: int, seed: int, block: int):
    d = spec.d
    rows: list[np.ndarray] = []
    got = 0
    proposals = 0
    rate = 2.0 / (d + 1)
    rnd = 0
    while got < n:
        if rnd >= 500:
            raise DomainError("rejection sampler failed to reach the requested size")
        m = min(max(int(math.ceil((n - got) / rate * 1.2)), 64), 1 << 18)
        rng = rng_stream(seed, block, rnd)
        which = rng.integers(0, d, size=m)
        accept_u = rng.random(m)
        z = np.empty((m, d))
        for jdx in np.unique(which):
            sel = which == jdx
            sub = rng_stream(seed, block, rnd, int(jdx) + 1)
            z[sel] = _conditional_block(spec, plans[jdx], sub, int(sel.sum()))
        below = (z < 1.0).sum(axis=1)
        keep = accept_u * below < 1.0
        rows.append(z[keep])
        got += int(keep.sum())
        proposals += m
        rate = max(got / proposals, 1.0 / (2 * d))
        rnd += 1
    return np.vstack(rows)[:n], proposals, got


def sample_inverted_pareto(spec: XVineSpec, n: int, seed: int,
                           threads: int | None = None,
                           ) -> tuple[np.ndarray, RejectionStats]:
    """Draw from the inverted-Pareto law of the model by rejection.

    A conditioning coordinate is chosen uniformly, a conditional sample drawn,
    and the row kept with probability 1/N where N counts its coordinates below
    1; this removes the multiple-counting of rows lying in several coordinate
    slabs. Returns the samples and proposal statistics.
    """
    if n < 0:
        raise DomainError(f"sample size must be nonnegative, got {n}")
    threads = resolve_threads(threads)
    plans = [_conditional_plan(spec, j) for j in spec.vine.nodes]
    if n == 0:
        return np.empty((0, spec.d)), RejectionStats(0, 0)
    parts = _blocked(n, threads,
                     lambda b, m: _rejection_block(spec, plans, m, seed, b))
    z = np.vstack([p[0] for p in parts])
    stats = RejectionStats(proposals=sum(p[1] for p in parts),
                           accepted=sum(p[2] for p in parts))
    return z, stats


def sample_pareto(spec: XVineSpec, n: int, seed: int,
                  threads: int | None = None) -> tuple[np.ndarray, RejectionStats]:
    """Multivariate-Pareto-scale samples: reciprocal of the inverted-Pareto law."""
    z, stats = sample_inverted_pareto(spec, n, seed, threads=threads)
    return 1.0 / z, stats
