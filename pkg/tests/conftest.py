import numpy as np
import pytest

from attachnet import fixtures
from attachnet.ingest import Demographics, ResponseTable


@pytest.fixture(scope="session")
def fixture_model():
    return fixtures.load_fixture_model()


@pytest.fixture(scope="session")
def fixture_partition():
    return fixtures.load_fixture_partition()


@pytest.fixture(scope="session")
def polarity():
    return fixtures.load_polarity()


def make_table(rows, items=None, age=None, gender=None, country=None):
    """Build a ResponseTable straight from arrays, bypassing CSV parsing."""
    rows = np.asarray(rows, dtype=np.float64)
    n = rows.shape[0]
    if items is None:
        items = tuple(f"Q{i + 1:02d}" for i in range(rows.shape[1]))
    from attachnet.ingest import map_region

    country = tuple(country) if country is not None else ("",) * n
    demo = Demographics(
        age=np.asarray(age if age is not None else [-1] * n, dtype=np.int16),
        gender=tuple(gender) if gender is not None else ("unknown",) * n,
        country=country,
        region=tuple(map_region(c) for c in country),
    )
    return ResponseTable(items=tuple(items), rows=rows, demographics=demo)


@pytest.fixture
def rng():
    return np.random.default_rng(20210401)
