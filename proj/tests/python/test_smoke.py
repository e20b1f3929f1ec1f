import json
import math

import pytest

import ffcbf


def test_version():
    assert ffcbf.__version__ == "0.1.0"


def test_straight_step_and_barriers():
    s = ffcbf.VehicleState(0.0, 0.0, math.pi / 2, 0.0, 6.0)
    e = ffcbf.step(s, 0.0, 0.0, 0.01)
    assert e.y == pytest.approx(0.06)
    a = ffcbf.VehicleState(-10.0, 3.0, 0.0, 0.0, 5.0)
    b = ffcbf.VehicleState(0.0, 0.0, 0.0, 0.0, 0.0)
    assert ffcbf.h0(a, b) == pytest.approx(109.0 - 6.25)
    assert ffcbf.h_ff(a, b) == pytest.approx(9.0 - 6.25)
    assert ffcbf.h_rff(a, b) >= ffcbf.h_ff(a, b)


def test_lqr_unit_weights():
    k = ffcbf.lqr_gain(1.0, 1.0, 1.0)
    assert k[0, 0] == pytest.approx(1.0)
    assert k[0, 2] == pytest.approx(math.sqrt(3.0))


def test_qp_projection():
    import numpy as np

    status, u = ffcbf.solve_qp(np.zeros(2), np.array([[1.0, 1.0]]), np.array([2.0]))
    assert status == "optimal"
    assert u == pytest.approx([1.0, 1.0])
    status, _ = ffcbf.solve_qp(np.zeros(1), np.array([[1.0], [-1.0]]), np.array([1.0, 0.0]))
    assert status == "infeasible"


def test_batch_is_deterministic():
    cfg = json.loads(ffcbf.default_config())
    cfg["scenario"]["seed"] = 3
    text = json.dumps(cfg)
    a = ffcbf.run_batch(text, 4, 2)
    b = ffcbf.run_batch(text, 4, 1)
    assert a == b
    assert len(a["trials"]) == 4
    assert 0.0 <= a["success_rate"] <= 1.0


def test_unknown_key_is_rejected():
    with pytest.raises(ValueError):
        ffcbf.run_trial(json.dumps({"scenario": {"bogus": 1}}), 0)
