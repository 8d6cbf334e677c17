"""Shared builders for randomized specs, vines and subset functionals."""
from __future__ import annotations

import numpy as np
import pytest

from xvine.families import PAIR_KINDS, TAIL_KINDS, PairFamily, TailFamily
from xvine.model import XVineSpec
from xvine.vines import VineSequence, random_vine

#: Parameter ranges for randomized specs.  The floors keep the margin
#: quadrature well-posed: near the family boundaries (logistic theta -> 1,
#: neglogistic theta -> 0) the marginal integrand's far tail decays so slowly
#: that no fixed grid reaches it.
TAIL_RANGES = {
    "hr": (0.4, 5.0),
    "logistic": (1.3, 6.0),
    "neglogistic": (0.45, 6.0),
    "dirichlet": (0.45, 8.0),
}

PAIR_RANGES = {
    "gaussian": (-0.85, 0.85),
    "clayton": (0.3, 6.0),
    "survclayton": (0.3, 6.0),
    "gumbel": (1.1, 5.0),
    "survgumbel": (1.1, 5.0),
    "joe": (1.1, 6.0),
    "survjoe": (1.1, 6.0),
    "frank": (-12.0, 12.0),
}


def random_tail_family(rng: np.random.Generator, kind: str | None = None) -> TailFamily:
    kind = kind or str(rng.choice(TAIL_KINDS))
    lo, hi = TAIL_RANGES[kind]
    return TailFamily(kind, float(rng.uniform(lo, hi)))


def random_pair_family(rng: np.random.Generator, kind: str | None = None) -> PairFamily:
    kinds = [k for k in PAIR_KINDS if k != "indep"]
    kind = kind or str(rng.choice(kinds))
    lo, hi = PAIR_RANGES[kind]
    return PairFamily(kind, float(rng.uniform(lo, hi)))


def random_spec(vine: VineSequence, rng: np.random.Generator) -> XVineSpec:
    """Random families on every edge of the given vine."""
    tails = {e: random_tail_family(rng) for e in vine.trees[0]}
    pairs = {e: random_pair_family(rng) for t in vine.trees[1:] for e in t}
    return XVineSpec(vine, tails, pairs)


def random_admissible_gamma(vine: VineSequence,
                            rng: np.random.Generator) -> dict[frozenset, float]:
    """Positive subset functional with unit singletons on every set the
    telescoping product touches."""
    gamma: dict[frozenset, float] = {frozenset({n}): 1.0 for n in vine.nodes}
    for t in vine.trees:
        for e in t:
            for s in (e.union, e.cond, e.union - e.cond):
                if s and s not in gamma:
                    gamma[s] = float(rng.uniform(0.2, 5.0))
            if e.level > 1:
                for s in (e.child_a.union, e.child_b.union):
                    if s not in gamma:
                        gamma[s] = float(rng.uniform(0.2, 5.0))
    return gamma


def spec_grid_points(rng: np.random.Generator, d: int, n: int) -> np.ndarray:
    """Well-spread positive evaluation points."""
    return np.exp(rng.uniform(np.log(0.05), np.log(20.0), size=(n, d)))


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(611)


def make_random_vine(seed: int, d: int, q: int | None = None) -> VineSequence:
    return random_vine(d, np.random.default_rng(seed), q=q)
