import numpy as np
import pytest

from ipdlab.weights import WeightSequence, weight_conditions


def test_uniform_all_conditions():
    c = weight_conditions(WeightSequence.constant())
    assert c.c1 and c.c2 and c.c3 and c.monotone


def test_geometric_fails_condition_one():
    w = WeightSequence.geometric()
    c = weight_conditions(w)
    assert not c.c1
    # w_N / W_N = 2^{N-1} / (2^N - 1) -> 1/2
    r = w.array(40) / w.prefix_sums(40)
    assert r[-1] == pytest.approx(0.5, abs=1e-9)


def test_harmonic_all_conditions():
    c = weight_conditions(WeightSequence.harmonic())
    assert c.c1 and c.c2 and c.c3 and c.monotone


def test_linear_all_conditions():
    c = weight_conditions(WeightSequence.linear())
    assert c.c1 and c.c2 and c.c3


def test_summable_weights_fail_condition_two():
    c = weight_conditions(WeightSequence.power(-2.0))
    assert not c.c2


def test_normalized_first_weight():
    w = WeightSequence(lambda n: 3.0 * n, "scaled")
    assert w(1) == 1.0 and w(4) == 4.0


def test_deltas_telescope_for_monotone():
    w = WeightSequence.linear()
    d = w.deltas(10)
    assert d[-1] == pytest.approx(10.0)
    assert np.all(np.diff(d) >= 0)


def test_non_positive_first_weight_rejected():
    with pytest.raises(ValueError):
        WeightSequence(lambda n: 0.0)


def test_horizon_floor():
    with pytest.raises(ValueError):
        weight_conditions(WeightSequence.constant(), horizon=10)


def test_from_spec():
    assert WeightSequence.from_spec({"kind": "linear"}).name == "linear"
    assert WeightSequence.from_spec({"kind": "power", "alpha": 0.5})(4) == pytest.approx(2.0)
    with pytest.raises(ValueError):
        WeightSequence.from_spec({"kind": "reversed"})
