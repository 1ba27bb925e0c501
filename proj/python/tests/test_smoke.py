import json
import math

import pytest

import kdvlab


def test_free_spectrum():
    s = kdvlab.periodic_spectrum(kdvlab.FourierField(8, 32), 3)
    assert s.eigenvalues[0] == pytest.approx(0.0, abs=1e-8)
    for n in range(1, 4):
        assert s.eigenvalues[2 * n] == pytest.approx((n * math.pi) ** 2, abs=1e-8)
        assert s.gaps[n - 1] == 0.0


def test_spectrum_matches_matrix_oracle():
    u = kdvlab.FourierField.from_modes(16, 64, [(1, 0.2), (-2, 0.1)])
    a = kdvlab.periodic_spectrum(u, 5).eigenvalues
    b = kdvlab.matrix_oracle_spectrum(u, 5)
    assert max(abs(x - y) for x, y in zip(a, b)) < 1e-7


def test_actions_and_percival():
    u = kdvlab.FourierField.from_modes(16, 64, [(1, 0.1)])
    I = kdvlab.actions(u, 5)
    assert I.I[0] == pytest.approx(0.01 / (4 * math.pi), rel=1e-2)
    assert kdvlab.percival_residual(u, 10) < 1e-6


def test_flow_conserves_norm():
    u = kdvlab.FourierField.from_modes(16, 64, [(1, 0.2), (-2, 0.1)])
    v = kdvlab.evolve_to(u, 0.01, 1e-4)
    assert v.l2_norm_squared() == pytest.approx(u.l2_norm_squared(), rel=1e-7)


def test_field_json_round_trip():
    u = kdvlab.FourierField.from_modes(4, 12, [(1, 0.1), (-3, 1.0 / 3.0)])
    assert kdvlab.field_from_json(kdvlab.field_to_json(u)) == u
    assert float(kdvlab.format_double(0.1)) == 0.1


def test_resonance():
    res, k, value = kdvlab.resonance_indicator([1.0, 2.0], 1e-12, 2, 3)
    assert res and value == 0.0 and k[0] + 2 * k[1] == 0


def test_invalid_argument_is_value_error():
    with pytest.raises(ValueError):
        kdvlab.FourierField(8, 20)


def test_run_experiment(tmp_path):
    status, results = kdvlab.run_config(
        {"experiment": "actions", "K": 8, "n_max": 4, "initial": {"kind": "modes", "modes": [[1, 0.1]]}},
        str(tmp_path),
    )
    assert status == 0
    assert results["percival_residual"] < 1e-4
    body = json.loads((tmp_path / "actions.json").read_text())
    assert body["config"]["K"] == 8
    with pytest.raises(ValueError):
        kdvlab.run_config({"experiment": "actions", "K": 8, "N": 16}, str(tmp_path))


def test_criterion_one():
    r = kdvlab.run_criterion(1, "fast")
    assert r["passed"], r["detail"]


def test_percival_from_precomputed_actions():
    u = kdvlab.FourierField.from_modes(16, 64, [(1, 0.1)])
    I = kdvlab.actions(u, 10)
    assert kdvlab.percival_residual(u, I) == pytest.approx(kdvlab.percival_residual(u, 10), abs=1e-12)
