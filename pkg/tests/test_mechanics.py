import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from oracles import lateral_amplitudes_by_integration

from ipm_softmag.mechanics import (
    MODES, CalibrationMissingError, Harmonic, LateralModel, ResonanceError,
    export_natural_frequencies, fit_mode_factors, forcing_harmonics, lamination_stress,
    lateral_response, natural_frequencies, resonance_margin, ripple_force, strain_check,
    unbalance_force,
)
from ipm_softmag.reference import natural_frequency_table


def test_unbalance_force_examples():
    assert unbalance_force(1.0, 0.0, 100.0) == 0.0
    assert unbalance_force(1.0, 0.001, 100.0) == pytest.approx(10.0, rel=1e-15)
    with pytest.raises(ValueError):
        unbalance_force(0.0, 0.001, 100.0)


@settings(max_examples=100, deadline=None)
@given(st.floats(0.1, 100.0), st.one_of(st.just(0.0), st.floats(1e-9, 1e-2)),
       st.floats(0.0, 2000.0), st.sampled_from([0.25, 0.5, 2.0, 4.0]))
def test_unbalance_force_homogeneity(m, e, w, c):
    # power-of-two factors scale floats exactly, so equality is exact
    base = unbalance_force(m, e, w)
    assert unbalance_force(c * m, e, w) == c * base
    assert unbalance_force(m, c * e, w) == c * base
    assert unbalance_force(m, e, c * w) == c * c * base


@settings(max_examples=100, deadline=None)
@given(st.floats(0.1, 100.0), st.floats(1e-9, 1e-2), st.floats(0.0, 2000.0),
       st.floats(1.0, 1e4), st.floats(1e-5, 1e-2))
def test_stress_matches_hand_computation(m, e, w, f_rip, area):
    f = unbalance_force(m, e, w)
    assert f == m * e * w**2
    assert lamination_stress(f + f_rip, area) == (m * e * w**2 + f_rip) / area


def test_lamination_stress_examples():
    assert lamination_stress(0.0, 1e-3) == 0.0
    assert lamination_stress(1280.0, 1.28e-3) == pytest.approx(1e6, rel=1e-15)
    with pytest.raises(ValueError):
        lamination_stress(1.0, 0.0)


def test_ripple_force_formula():
    assert ripple_force(30.0, 120.0, 0.066, 0.01) == pytest.approx(0.01 * 30 * 120 / 0.066)
    assert ripple_force(0.0, 120.0, 0.066) == 0.0


def test_strain_check_examples(db):
    zero = strain_check(0.0, db["Hiperco 50"])
    assert zero.strain == 0.0 and zero.within_yield
    assert strain_check(207e6, db["Hiperco 50"]).strain == pytest.approx(1e-3, rel=1e-15)
    assert strain_check(300e6, db["M800-50A"]).within_yield is False


def test_single_harmonic_closed_form():
    model = LateralModel(np.diag([10.0, 10.0]), np.diag([1e6, 1e6]), [Harmonic(100.0, 100.0)])
    resp = lateral_response(model)
    expected = 100.0 / (1e6 - 10.0 * 1e4)
    assert resp.displacement_x == pytest.approx(expected, rel=1e-14)
    assert resp.displacement_y == pytest.approx(expected, rel=1e-14)


def test_zero_forcing_zero_displacement():
    model = LateralModel(np.eye(2) * 10, np.eye(2) * 1e6,
                         forcing_harmonics(0.0, 0.0, 314.0))
    assert lateral_response(model).amplitude == 0.0


def test_resonance_is_rejected():
    with pytest.raises(ResonanceError):
        lateral_response(LateralModel(np.eye(2) * 10, np.eye(2) * 1e6,
                                      [Harmonic(1.0, 316.0)]))


def test_model_rejects_non_spd():
    with pytest.raises(ValueError):
        LateralModel(np.eye(2), np.array([[1.0, 2.0], [2.0, 1.0]]))
    with pytest.raises(ValueError):
        LateralModel(np.array([[1.0, 0.1], [0.0, 1.0]]), np.eye(2))


def test_frequency_domain_matches_time_stepping():
    m = np.array([[12.0, 1.0], [1.0, 9.0]])
    k = np.array([[4e5, 5e4], [5e4, 3e5]])
    harmonics = [Harmonic(50.0, 120.0, 0.3), Harmonic(20.0, 240.0, 1.1)]
    model = LateralModel(m, k, harmonics)
    resp = lateral_response(model)
    ref = lateral_amplitudes_by_integration(m, k, [(h.amplitude, h.frequency, h.phase)
                                                   for h in harmonics])
    assert np.allclose(resp.harmonic_x, ref[0], rtol=1e-6)
    assert np.allclose(resp.harmonic_y, ref[1], rtol=1e-6)


def test_forcing_harmonics_split():
    h = forcing_harmonics(10.0, 6.0, 100.0, 4)
    assert [x.frequency for x in h] == [100.0, 200.0, 300.0, 400.0]
    assert h[0].amplitude == 10.0
    assert sum(x.amplitude for x in h[1:]) == pytest.approx(6.0)
    assert h[1].amplitude > h[2].amplitude > h[3].amplitude


def test_natural_frequencies_need_calibration(db):
    with pytest.raises(CalibrationMissingError):
        natural_frequencies(db["Hiperco 50"], None)
    with pytest.raises(CalibrationMissingError):
        natural_frequencies(db["Hiperco 50"], {2: 1.0})


def test_calibration_material_is_reproduced(db):
    factors = fit_mode_factors(db["Hiperco 50"], natural_frequency_table("Hiperco 50"))
    f = natural_frequencies(db["Hiperco 50"], factors)
    assert f[2] == pytest.approx(377.1, rel=1e-12)
    vac = natural_frequencies(db["VACOFLUX 50"], factors)
    assert abs(vac[2] - 414.0) / 414.0 < 0.02


def test_resonance_margin_examples():
    hip = natural_frequency_table("Hiperco 50")
    margins = resonance_margin(hip, [50.0, 2400.0])
    assert margins[2].margin == pytest.approx(1 - 50.0 / 377.1, abs=1e-12)
    assert margins[2].margin == pytest.approx(0.867, abs=5e-4)
    assert not margins[2].flagged
    assert margins[5].margin == pytest.approx(0.0845, abs=5e-4)
    assert margins[5].flagged
    on_mode = resonance_margin({2: 377.1}, [377.1])
    assert on_mode[2].margin == 0.0 and on_mode[2].flagged
    with pytest.raises(ValueError):
        resonance_margin(hip, [])


@settings(max_examples=30, deadline=None)
@given(st.floats(1e9, 5e11), st.floats(1e3, 2e4))
def test_cross_mode_ratio_constant(e, rho):
    factors = {m: 0.1 * m for m in MODES}
    db_like = type("M", (), {"young_modulus": e, "density": rho})
    ref = type("M", (), {"young_modulus": 2e11, "density": 8000.0})
    a, b = natural_frequencies(db_like, factors), natural_frequencies(ref, factors)
    ratios = [a[m] / b[m] for m in MODES]
    assert max(ratios) - min(ratios) <= 1e-12 * max(ratios)
    assert ratios[0] == pytest.approx(math.sqrt(e / rho / (2e11 / 8000.0)), rel=1e-12)


def test_export_table_layout(tmp_path):
    table = {name: natural_frequency_table(name) for name in ("Hiperco 50", "M235-35A")}
    export_natural_frequencies(table, tmp_path / "nf.csv")
    lines = (tmp_path / "nf.csv").read_text().splitlines()
    assert lines[0] == "mode,Hiperco 50,M235-35A"
    assert [ln.split(",")[0] for ln in lines[1:]] == [str(m) for m in MODES]
