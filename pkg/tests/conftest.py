import numpy as np
import pytest

from quenchwork.hamiltonians import ChainParams
from quenchwork.pipeline import QuenchSpec

PAPER_SECTOR = dict(L=15, K=5, parity=1)


def chain(mu=0.5, lam=0.0, **kw):
    return ChainParams(**{**PAPER_SECTOR, **kw, "mu": mu, "lam": lam})


@pytest.fixture(scope="session")
def paper_quenches():
    """The five dim-1512 quenches the figures use, keyed by label."""
    return {
        "small_chaotic": QuenchSpec(chain(lam=0.7), chain(lam=0.9)),
        "large_chaotic": QuenchSpec(chain(lam=0.7), chain(lam=3.2)),
        "fig7a": QuenchSpec(chain(lam=0.1), chain(lam=0.3)),
        "fig7b": QuenchSpec(chain(mu=0.1), chain(mu=0.5)),
        "fig7c": QuenchSpec(chain(mu=0.1), chain(mu=2.4)),
    }


@pytest.fixture(scope="session")
def small_quench():
    """Cheap L=8 quench for unit-level checks."""
    kw = dict(L=8, K=4, parity=1)
    return QuenchSpec(ChainParams(mu=0.1, lam=0.0, **kw),
                      ChainParams(mu=0.5, lam=0.0, **kw))


@pytest.fixture()
def rng():
    return np.random.default_rng(20240915)
