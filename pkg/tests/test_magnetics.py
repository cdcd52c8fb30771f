import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from oracles import inverse_bh, overlap_by_quadrature, series_loop_flux

from ipm_softmag.geometry import MotorGeometry, cogging_period, uniform_ring
from ipm_softmag.magnetics import (
    MU0, NetworkStructureError, OperatingPoint, ReluctanceNetwork, SolverError, TorqueProfile,
    _overlap, _trapezoid_knots, airgap_torque, build_network, coenergy, cogging_profile,
    dominant_order, dq_components, metrics, phase_currents, solve, torque_profile,
)
from ipm_softmag.materials import BHCurve


def _loop(steel, magnet_perm, mmf, sections):
    """Three-node loop: one magnet branch followed by steel sections."""
    n = len(sections) + 1
    frm = np.arange(n)
    to = (np.arange(n) + 1) % n
    return ReluctanceNetwork(
        labels=tuple(f"n{i}" for i in range(n)),
        frm=frm, to=to,
        linear=np.array([True] + [False] * len(sections)),
        permeance=np.array([magnet_perm] + [0.0] * len(sections)),
        area=np.array([1.0] + [a for a, _ in sections]),
        length=np.array([1.0] + [l for _, l in sections]),
        source=np.array([mmf] + [0.0] * len(sections)),
        group=np.array(["magnet"] + ["tooth"] * len(sections), dtype=object),
        steel=steel,
        dpermeance=np.zeros(n),
        tooth_branches=np.array([], int),
    )


@pytest.mark.parametrize("mmf", [50.0, 800.0, 5000.0])
def test_nonlinear_loop_matches_root_finding(db, mmf):
    steel = db["M800-50A"].steel
    sections = [(1e-4, 0.05), (6e-5, 0.02)]
    perm = 4e-7
    net = _loop(steel, perm, mmf, sections)
    sol = solve(net)
    h_of_b = inverse_bh(lambda h: float(steel.evaluate(np.array([h]))[0][0]))
    ref = series_loop_flux(mmf, perm, h_of_b, sections)
    assert np.allclose(sol.branch_fluxes, ref, rtol=1e-8)
    assert sol.iterations <= 50


def test_linear_network_converges_in_one_step(geom, vtopo):
    net = build_network(geom, vtopo, None, 3.0, phase_currents(geom, -100.0, 150.0, 3.0))
    sol = solve(net)
    assert sol.iterations == 1
    assert sol.residual <= 1e-9


def test_node_balance_on_machine(geom, vtopo, dtopo, db):
    cur = phase_currents(geom, -150.0, 250.0, 1.0)
    for topo in (vtopo, dtopo):
        net = build_network(geom, topo, db["M235-35A"], 1.0, cur)
        sol = solve(net)
        imbalance = np.abs(sol.node_imbalance(net))
        assert imbalance.max() <= 1e-9 * np.abs(sol.branch_fluxes).max()


def test_zero_sources_give_zero_flux(geom, vtopo, db):
    net = build_network(geom, vtopo, db["Hiperco 50"], 0.0, remanence_scale=0.0)
    sol = solve(net)
    assert sol.iterations == 0
    assert not np.any(sol.branch_fluxes)


def test_disconnected_network_is_structure_error(db):
    net = _loop(db["M800-50A"].steel, 1e-6, 10.0, [(1e-4, 0.1), (1e-4, 0.1)])
    net = net.replace(frm=np.array([0, 1, 2, 3]), to=np.array([1, 0, 3, 2]),
                      labels=tuple("abcd"), linear=np.ones(4, bool),
                      permeance=np.ones(4), area=np.ones(4), length=np.ones(4),
                      source=np.ones(4), group=np.array(["x"] * 4, dtype=object),
                      dpermeance=np.zeros(4))
    with pytest.raises(NetworkStructureError):
        solve(net)


def test_non_convergence_reports_residual(geom, vtopo, db):
    net = build_network(geom, vtopo, db["Hiperco 50"], 0.0,
                        phase_currents(geom, -200.0, 200.0, 0.0))
    with pytest.raises(SolverError, match="residual"):
        solve(net, max_iter=1)


@settings(max_examples=40, deadline=None)
@given(st.floats(0.005, 0.06), st.floats(0.0, 0.03), st.floats(0.005, 0.1),
       st.floats(0.005, 0.06), st.floats(-0.2, 0.2))
def test_overlap_matches_quadrature(t_half, t_taper, s_half, s_taper, shift):
    t_taper = max(t_taper, 1e-3)
    tp, tw = _trapezoid_knots(-t_half, t_half, t_taper)
    sp, sw = _trapezoid_knots(-s_half, s_half, s_taper)
    val, der = _overlap(tp[None], tw[None], sp[None], sw[None], np.array([shift]))
    ref = overlap_by_quadrature(t_half, t_taper, s_half, s_taper, shift)
    assert val[0] == pytest.approx(ref, rel=1e-7, abs=1e-12)
    h = 1e-7
    fd = (overlap_by_quadrature(t_half, t_taper, s_half, s_taper, shift + h)
          - overlap_by_quadrature(t_half, t_taper, s_half, s_taper, shift - h)) / (2 * h)
    assert der[0] == pytest.approx(fd, rel=1e-4, abs=1e-7)


def test_coenergy_difference_matches_airgap_torque(geom, vtopo, db):
    mat = db["Hiperco 50"]
    cur = phase_currents(geom, -100.0, 200.0, 2.0)
    torque = airgap_torque(build_network(geom, vtopo, mat, 2.0, cur),
                           solve(build_network(geom, vtopo, mat, 2.0, cur)))
    d = 0.01
    w = []
    for s in (-1, 1):
        net = build_network(geom, vtopo, mat, 2.0 + s * d, cur)
        w.append(coenergy(net, solve(net)))
    fd = (w[1] - w[0]) / math.radians(2 * d)
    assert fd == pytest.approx(torque, rel=0.02, abs=0.5)


def _linear_fixture(geom, vtopo):
    net = build_network(geom, vtopo, None, 1.3, phase_currents(geom, -80.0, 120.0, 1.3))
    return net


@settings(max_examples=20, deadline=None)
@given(st.floats(0.1, 10.0))
def test_linear_torque_scaling(c):
    geom, topo = MotorGeometry(), __import__("ipm_softmag.geometry").geometry.v_type()
    net = _linear_fixture(geom, topo)
    base = airgap_torque(net, solve(net))
    scaled = net.replace(permeance=net.permeance / c, dpermeance=net.dpermeance / c,
                         source=net.source * c)
    assert airgap_torque(scaled, solve(scaled)) == pytest.approx(c * base, rel=1e-9)
    same = net.replace(permeance=net.permeance / c, dpermeance=net.dpermeance / c,
                       source=net.source * math.sqrt(c))
    assert airgap_torque(same, solve(same)) == pytest.approx(base, rel=1e-9)


def test_airgap_permeance_periodic_over_cogging_period(geom, vtopo):
    a = build_network(geom, vtopo, None, 0.7)
    b = build_network(geom, vtopo, None, 0.7 + cogging_period(geom))
    ag_a = np.sort(a.permeance[a.group == "airgap"])
    ag_b = np.sort(b.permeance[b.group == "airgap"])
    assert np.allclose(ag_a, ag_b, rtol=1e-12, atol=1e-20)
    assert coenergy(a, solve(a)) == pytest.approx(coenergy(b, solve(b)), rel=1e-10)


def test_delta_has_more_magnets_than_v(geom, vtopo, dtopo):
    assert (build_network(geom, vtopo, None, 0.0).count("magnet")
            < build_network(geom, dtopo, None, 0.0).count("magnet"))


def test_metrics_constant_profile():
    m = metrics(TorqueProfile(np.arange(10.0), np.full(10, 100.0)))
    assert (m.t_avg, m.t_max, m.ripple_pct) == (100.0, 100.0, 0.0)


def test_metrics_single_sinusoid():
    theta = np.arange(360.0)
    m = metrics(TorqueProfile(theta, 100 + 5 * np.sin(np.radians(theta))))
    assert m.t_avg == pytest.approx(100.0, abs=1e-12)
    assert m.t_max == pytest.approx(105.0, abs=1e-12)
    assert m.ripple_pct == pytest.approx(10.0, abs=1e-12)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(-500, 500), min_size=2, max_size=60))
def test_metrics_invariants(values):
    m = metrics(TorqueProfile(np.arange(len(values), dtype=float), np.array(values)))
    assert m.t_max >= m.t_avg
    assert m.ripple_pct >= 0


def test_dq_transform_round_trip(geom):
    for theta in (0.0, 3.3, 41.0):
        i_d, i_q = dq_components(geom, phase_currents(geom, -70.0, 180.0, theta), theta)
        assert (i_d, i_q) == pytest.approx((-70.0, 180.0), abs=1e-10)


def test_demagnetized_cogging_is_zero(geom, vtopo, db):
    prof = cogging_profile(geom, vtopo, db["Hiperco 50"], 6, remanence_scale=0.0)
    assert not np.any(prof.torque)


def test_zero_current_zero_remanence_profile(geom, vtopo, db):
    op = OperatingPoint(3000.0, 0.0, 0.0)
    prof = torque_profile(geom, vtopo, db["Hiperco 50"], op, 6, remanence_scale=0.0)
    assert not np.any(prof.torque)


def test_cogging_dominant_period_is_slot_pitch(geom, vtopo, db, calib):
    prof = cogging_profile(geom, vtopo, db["Hiperco 50"], 30,
                           remanence_scale=calib.remanence_scale, window=45.0, start=0.0)
    assert dominant_order(prof) == pytest.approx(48.0)
    assert abs(np.mean(prof.torque)) <= 0.01 * np.ptp(prof.torque)


def test_ring_rotor_has_no_cogging(geom, db):
    prof = cogging_profile(geom, uniform_ring(), db["M800-50A"], 8)
    assert np.allclose(prof.torque, 0.0, atol=1e-9)


def test_higher_bh_curve_does_not_lower_torque(geom, vtopo, db, calib):
    mat = db["M800-50A"]
    h, b = np.array(mat.bh.h), np.array(mat.bh.b)
    stronger = mat.with_(bh=BHCurve(tuple(h), tuple(b * 1.05)))
    op = OperatingPoint(3000.0, 300.0, 40.0)
    t0 = metrics(torque_profile(geom, vtopo, mat, op, 12,
                                remanence_scale=calib.remanence_scale)).t_avg
    t1 = metrics(torque_profile(geom, vtopo, stronger, op, 12,
                                remanence_scale=calib.remanence_scale)).t_avg
    assert t1 >= t0


def test_vacuum_slope_constant_is_consistent():
    assert MU0 == pytest.approx(4e-7 * math.pi)
