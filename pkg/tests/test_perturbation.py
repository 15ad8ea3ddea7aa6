import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from adiabatic_overlaps.dynamics import IntegratorConfig, evolve
from adiabatic_overlaps.errors import ContractError, DegeneracyError
from adiabatic_overlaps.models import dense_driven
from adiabatic_overlaps.overlaps import trajectory_overlaps
from adiabatic_overlaps.perturbation import (
    SpectralData,
    displayed_amplitudes,
    displayed_coefficients,
    evolved_series,
    gamma_free_orders,
    predict_overlaps,
    reconstruct_evolved,
    rs_ground_series,
)

LAMS = np.geomspace(1e-3, 1e-1, 8)
TIGHT = IntegratorConfig(rel_tol=1e-14, abs_tol=1e-16, max_step=0.005)


def loglog_slope(x, y):
    return np.polyfit(np.log(x), np.log(y), 1)[0]


def exact_run(sd):
    h0, v = sd.matrices()
    traj = evolve(dense_driven(h0, v, sd.gamma), np.concatenate([[0.0], LAMS]), TIGHT)
    # express Psi in the chi basis with <chi_0|Phi_0> real positive
    phase = np.conj(traj.phi0.amplitudes[0]) / abs(traj.phi0.amplitudes[0])
    psis = [phase * s.amplitudes for s in traj.evolved[1:]]
    return traj, psis, trajectory_overlaps(traj)[1:]


@pytest.fixture(scope="module")
def spectral_case():
    sd = SpectralData.random(4, seed=7, gamma=1.0)
    return (sd,) + exact_run(sd)


# -- coefficients ----------------------------------------------------------------------


@given(st.integers(2, 7), st.integers(0, 2**31), st.floats(0.1, 10.0), st.booleans())
def test_recursion_reproduces_displayed_coefficients(dim, seed, gamma, real):
    sd = SpectralData.random(dim, seed, gamma=gamma, real=real)
    rec = evolved_series(sd, 5).coeffs
    shown = displayed_coefficients(sd)
    scale = max(1.0, np.abs(shown).max())
    assert np.abs(rec - shown).max() <= 1e-12 * scale


def test_first_order_coefficient_vanishes():
    sd = SpectralData.random(5, 3)
    c = evolved_series(sd, 3).coeffs
    assert np.array_equal(c[1], np.zeros(5))
    assert c[0, 0] == 1.0


def test_series_reconstructs_exact_state(spectral_case):
    sd, _, psis, _ = spectral_case
    ser = evolved_series(sd, 5)
    res = np.array([np.linalg.norm(p - reconstruct_evolved(ser, lam)) for lam, p in zip(LAMS, psis)])
    assert res[0] < 1e-13
    assert loglog_slope(LAMS[3:], res[3:]) > 5.0


def test_displayed_amplitudes_converge_at_fifth_order(spectral_case):
    sd, _, psis, _ = spectral_case
    res = np.array([np.linalg.norm(p - displayed_amplitudes(sd, lam)) for lam, p in zip(LAMS, psis)])
    assert loglog_slope(LAMS[2:], res[2:]) == pytest.approx(5.0, abs=0.3)


def test_rs_series_against_exact_ground_state(spectral_case):
    sd, traj, _, _ = spectral_case
    rs = rs_ground_series(sd)
    res = []
    for lam, phi in zip(LAMS, traj.instantaneous[1:]):
        a = phi.amplitudes * abs(phi.amplitudes[0]) / phi.amplitudes[0]
        res.append(np.linalg.norm(a - rs.evaluate(lam)))
    assert loglog_slope(LAMS, np.array(res)) == pytest.approx(3.0, abs=0.15)


def test_rs_order_truncation():
    sd = SpectralData.random(4, 1)
    one = rs_ground_series(sd, order=1)
    assert np.all(one.ground[2:] == 0) and np.all(one.excited[2:] == 0)
    with pytest.raises(ContractError):
        rs_ground_series(sd, order=4)


# -- overlap predictions ---------------------------------------------------------------


def test_C_prediction_residual_is_fourth_order_or_better(spectral_case):
    sd, _, _, recs = spectral_case
    res = np.array([abs(r.C - predict_overlaps(sd, lam).C) for lam, r in zip(LAMS, recs)])
    assert loglog_slope(LAMS[2:], res[2:]) > 3.8


def test_leading_sin_theta_and_sqrt_D_un(spectral_case):
    sd, _, _, recs = spectral_case
    sin_res, dun_res = [], []
    for lam, r in zip(LAMS, recs):
        p = predict_overlaps(sd, lam)
        sin_res.append(abs(r.sin_theta - p.sin_theta))
        dun_res.append(abs(math.sqrt(r.D_un) - abs(p.sqrt_D_un)))
    assert loglog_slope(LAMS[2:], np.array(sin_res[2:])) == pytest.approx(4.0, abs=0.2)
    assert loglog_slope(LAMS[2:], np.array(dun_res[2:])) == pytest.approx(4.0, abs=0.2)


def test_low_orders_of_F_do_not_depend_on_gamma():
    sd1 = SpectralData.random(4, seed=9, gamma=1.0)
    sd2 = SpectralData(sd1.energies, sd1.v_elements, gamma=3.0)
    _, _, r1 = exact_run(sd1)
    _, _, r2 = exact_run(sd2)
    diff = np.array([abs(a.F - b.F) for a, b in zip(r1, r2)])
    # agreement through lambda^2 means the difference starts at lambda^3 or later
    assert loglog_slope(LAMS[2:], diff[2:]) > 2.8
    orders = gamma_free_orders(sd1)
    assert orders == gamma_free_orders(sd2)
    assert orders[1] == 0.0


def test_trust_flag():
    sd = SpectralData.random(4, seed=2)
    vmax = np.abs(sd.v_elements[1:, 0]).max()
    small = 0.05 * sd.gap / vmax
    assert predict_overlaps(sd, small).trusted
    assert not predict_overlaps(sd, 0.2 * sd.gap / vmax).trusted


def test_D_leading_lies_in_unit_interval():
    for seed in range(20):
        d = predict_overlaps(SpectralData.random(5, seed), 0.01).D_leading
        assert 0.0 <= d <= 1.0 + 1e-12  # Cauchy-Schwarz on the S sums


# -- validation ----------------------------------------------------------------------


def test_spectral_data_validation():
    with pytest.raises(ContractError):
        SpectralData(np.array([1.0, 0.0]), np.zeros((2, 2)), 1.0)
    with pytest.raises(DegeneracyError):
        SpectralData(np.array([0.0, 0.0, 1.0]), np.zeros((3, 3)), 1.0)
    with pytest.raises(ContractError):
        SpectralData(np.array([0.0, 1.0]), np.array([[0, 1], [0, 0]]), 1.0)
    with pytest.raises(ContractError):
        SpectralData(np.array([0.0, 1.0]), np.zeros((2, 2)), 0.0)


def test_from_matrices_roundtrip():
    rng = np.random.default_rng(4)
    a = rng.normal(size=(4, 4))
    h0 = a + a.T
    v = np.diag([1.0, 2.0, 3.0, 4.0])
    sd, u = SpectralData.from_matrices(h0, v, 0.5)
    assert np.allclose(u @ np.diag(sd.energies) @ u.conj().T, h0)
    assert np.allclose(u @ sd.v_elements @ u.conj().T, v)
