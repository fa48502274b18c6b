import numpy as np
import pytest

from ppa_imitation.dataset import Dataset, RowMeta


def _ds():
    ds = Dataset(3, 2)
    ds.append([1.0, 2.0, 3.0], [1.0, 0.0], RowMeta(1, 0, 0, "two_stage", 0.1, 0.0, False))
    ds.append([0.5, 0.0, 1.0], [0.25, 0.75], RowMeta(1, 0, 1, "aggregated"))
    return ds


def test_append_validates():
    ds = _ds()
    with pytest.raises(ValueError):
        ds.append([1.0], [1.0, 0.0], RowMeta(1, 0, 0, "x"))
    with pytest.raises(ValueError):
        ds.append([1.0, 2.0, 3.0], [0.6, 0.6], RowMeta(1, 0, 0, "x"))
    assert len(ds) == 2
    assert ds.X.shape == (2, 3) and ds.Y.shape == (2, 2)


def test_jsonl_roundtrip(tmp_path):
    ds = _ds()
    ds.to_jsonl(tmp_path / "d.jsonl")
    back = Dataset.from_jsonl(tmp_path / "d.jsonl", 3, 2)
    assert np.array_equal(back.X, ds.X) and np.array_equal(back.Y, ds.Y)
    assert back.fingerprint() == ds.fingerprint()


def test_fingerprint_changes_with_content():
    a, b = _ds(), _ds()
    assert a.fingerprint() == b.fingerprint()
    b.append([0.0, 0.0, 0.0], [0.0, 1.0], RowMeta(2, 1, 0, "x"))
    assert a.fingerprint() != b.fingerprint()
