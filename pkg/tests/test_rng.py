import numpy as np
import pytest

from ppa_imitation.rng import RngStream


def test_streams_are_addressed_not_sequential():
    a = RngStream(5, "x", 1, 2, 3).generator().random(4)
    RngStream(5, "y").generator().random(100)
    b = RngStream(5, "x", 1, 2, 3).generator().random(4)
    assert np.array_equal(a, b)


def test_every_coordinate_matters():
    base = RngStream(5, "x", 1, 2, 3)
    ref = base.generator().random()
    for change in ({"master_seed": 6}, {"purpose": "z"}, {"episode": 0}, {"epoch": 0}, {"call": 0}):
        assert base.derive(**change).generator().random() != ref


def test_rejects_bad_indices():
    with pytest.raises(ValueError):
        RngStream(1, "x", -1)
    with pytest.raises(ValueError):
        RngStream(-1)
