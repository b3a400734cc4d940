import numpy as np
import pytest

from tfclead import synthgen
from tfclead.features import EncodedDataset, Vocabulary
from tfclead.ingest import RawTable, VehicleRecord
from tfclead.labeling import scheme_for


def dense_dataset(X, labels=None, n_classes=None) -> EncodedDataset:
    """Sparse dataset from a dense 0/1 matrix with features named ``f:<j>``."""
    X = np.asarray(X, dtype=np.uint8)
    n, m = X.shape
    rows, cols = np.nonzero(X)
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(np.bincount(rows, minlength=n), out=indptr[1:])
    scheme = None
    if labels is not None:
        labels = np.asarray(labels, dtype=np.int64)
        scheme = scheme_for(n_classes or max(2, int(labels.max()) + 1))
    return EncodedDataset(
        indptr=indptr,
        indices=cols.astype(np.int32),
        vocabulary=Vocabulary(tuple(f"f:{j}" for j in range(m))),
        row_ids=tuple(f"r{i}" for i in range(n)),
        labels=labels,
        scheme=scheme,
    )


def make_record(vid="V1", **kw) -> VehicleRecord:
    base = dict(
        vehicle_id=vid,
        product_key="A10IC",
        derivative="ICE",
        series_flag=True,
        entry_weekday_hour="Monday-08",
        priority=0,
        config_variants=frozenset({"AA1"}),
        inspection_codes=frozenset(),
        parking_locations=frozenset(),
        lead_time_days=1.5,
    )
    base.update(kw)
    return VehicleRecord(**base)


@pytest.fixture(scope="session")
def small_config():
    return synthgen.GeneratorConfig(n_vehicles=3000, seed=11)


@pytest.fixture(scope="session")
def small_fleet(small_config):
    return RawTable(tuple(synthgen.generate_fleet(small_config)), "small")


@pytest.fixture(scope="session")
def default_fleet():
    return RawTable(tuple(synthgen.generate_fleet(synthgen.GeneratorConfig())), "default")


def pytest_terminal_summary(terminalreporter):
    mod = __import__("sys").modules.get("test_acceptance")
    if mod is not None and mod.RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in mod.RESULTS:
            terminalreporter.write_line(line)
