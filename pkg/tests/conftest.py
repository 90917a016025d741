from functools import lru_cache

import pytest

from toriclow.corpus import generate

CORPUS_SEED = 20240611
CORPUS_SIZE = 200


@lru_cache(maxsize=1)
def corpus_instances():
    return tuple(generate(CORPUS_SEED, CORPUS_SIZE))


@pytest.fixture(scope="session")
def corpus():
    return corpus_instances()


@lru_cache(maxsize=1)
def low_instances():
    from toriclow.lowdeg import low_toric_degree
    return tuple(inst for inst in corpus_instances() if low_toric_degree(inst.fan, inst.divisor).is_low)
