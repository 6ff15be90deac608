import json
import math

import numpy as np
import pytest

import qdent


def test_cascade_emits_both_photons():
    decay = qdent.DecayRates(gamma_b=0.2, gamma_x=0.1)
    rho0 = np.zeros((3, 3), complex)
    rho0[2, 2] = 1.0
    out = qdent.evolve(decay=decay, t_span=(0.0, 200.0), rho0=rho0)
    assert out["p_b"] == pytest.approx(1.0, abs=1e-5)
    assert out["p_x"] == pytest.approx(1.0, abs=1e-5)
    t = out["times"]
    assert np.allclose(out["populations"][:, 2], np.exp(-0.2 * t), atol=1e-6)


def test_pi_pulse_without_dephasing():
    sigma, delta_x = 5.0, 3.0
    area = qdent.two_photon_pi_area(sigma, delta_x)
    setup = qdent.SweepSetup(sigma=sigma, delta_x=delta_x)
    ex = qdent.first_rabi_extrema(setup, 2 * area, 60)
    assert ex is not None
    assert ex.p_b_max > 0.95


def test_bell_state_metrics():
    rho = qdent.model_state(phi_p=0.0)
    assert qdent.concurrence(rho) == pytest.approx(1.0, abs=1e-10)
    fid, phi = qdent.fidelity_bell(rho)
    assert fid == pytest.approx(1.0, abs=1e-10)
    assert qdent.visibilities(rho)["energy_0"] == pytest.approx(1.0, abs=1e-10)


def test_werner_closed_forms():
    p = 0.84
    q = 1 - p
    # with pairing weight 4 the accidental fraction is 2e / (1 + e)
    eps = q / (2 - q)
    assert qdent.accidental_fraction(eps) == pytest.approx(q, abs=1e-12)
    rho = qdent.model_state(phi_p=0.0, epsilon=eps)
    assert qdent.concurrence(rho) == pytest.approx((3 * p - 1) / 2, abs=1e-10)
    assert qdent.fidelity_bell(rho)[0] == pytest.approx((1 + 3 * p) / 4, abs=1e-10)


def test_tomography_round_trip():
    rho = qdent.model_state(phi_p=math.pi, epsilon=0.06)
    counts = qdent.simulate_counts(rho, 1e5, 7)
    assert len(counts) == 16 == len(qdent.setting_labels())
    est = qdent.reconstruct_mle(counts)
    assert np.trace(est).real == pytest.approx(1.0, abs=1e-9)
    assert qdent.state_fidelity(est, rho) > 0.99


def test_config_strict():
    resolved = json.loads(qdent.parse_config('{"dot": {"gamma_x": 0.002}}'))
    assert resolved["dot"]["gamma_x"] == 0.002
    with pytest.raises(qdent.ConfigError, match="dot.gamma_y"):
        qdent.parse_config('{"dot": {"gamma_y": 1}}')


def test_run_command(tmp_path):
    files = qdent.run_command("entangle", '{"tomography": {"batch": 2}}', str(tmp_path))
    report = json.loads((tmp_path / "entangle_report.json").read_text())
    assert report["batch"] == 2
    assert len(files) == 6


def test_invalid_arguments_raise():
    with pytest.raises(ValueError):
        qdent.concurrence(np.eye(3))
    with pytest.raises(ValueError):
        qdent.omega0_for_area(1.0, -1.0)
