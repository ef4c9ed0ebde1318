import numpy as np
import pytest

from groupbias import BiasedSet, counted


def random_multiset(G, k, seed, claimed=1.0, kind="reference"):
    rng = np.random.default_rng(seed)
    vals = rng.integers(0, G.order, size=k, dtype=np.int64)
    return BiasedSet(group=G, values=vals, claimed_bias=claimed,
                     claim_kind=kind, seed=seed)


def whole_group_set(G):
    return BiasedSet(group=G, values=np.arange(G.order, dtype=np.int64),
                     claimed_bias=0.0, claim_kind="bound")


@pytest.fixture
def lps_13_5():
    # small Ramanujan instance; fresh per test since certification mutates
    from groupbias import lps_graph
    return lps_graph(13, 5, certify="none")
