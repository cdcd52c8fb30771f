"""Nonlinear magnetic equivalent circuit of the IPM machine.

The network is written in flux/MMF form: each branch carries flux
``phi = g(F)`` where ``F`` is the potential drop across it plus any MMF
source. Air gap and magnet branches are linear, lamination branches follow
the material B-H curve. Node potentials are found by Newton iteration on the
nodal flux balance; because every branch characteristic is monotone the
Jacobian is symmetric positive definite.

Torque is the rotor-angle derivative of the network coenergy at fixed
currents, taken by central differences of re-solved networks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
import scipy.linalg
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from .geometry import (MM, MotorGeometry, RotorTopology, TopologyKind, cogging_period,
                       skew_factor)
from .materials import MU0, SoftMagneticMaterial, SteelCurve

FRINGING = 1.05
ROTOR_TAPER = math.radians(3.5)  # effective fringing width at rotor barrier ends


class SolverError(RuntimeError):
    """Newton iteration did not converge."""


class NetworkStructureError(RuntimeError):
    """Disconnected network or singular Jacobian."""


# -- winding -------------------------------------------------------------------

@dataclass(frozen=True)
class Winding:
    turns: np.ndarray  # (slots, phases): tooth MMF per ampere of phase current
    axes: np.ndarray  # electrical angle [rad] of each phase's MMF fundamental


@lru_cache(maxsize=32)
def winding(geom: MotorGeometry) -> Winding:
    """Single-layer integral-slot winding with 60-degree phase belts."""
    if geom.phases != 3:
        raise ValueError("only three-phase windings are supported")
    q = geom.slots // (geom.poles * geom.phases)
    if q * geom.poles * geom.phases != geom.slots:
        raise ValueError("slots per pole per phase must be an integer")
    belts = [(0, 1), (2, -1), (1, 1), (0, -1), (2, 1), (1, -1)]
    per_conductor = geom.conductors_per_slot / geom.parallel_paths
    slot_current = np.zeros((geom.slots, 3))
    for s in range(geom.slots):
        ph, sign = belts[(s // q) % 6]
        slot_current[s, ph] = sign * per_conductor
    # tooth k sits between slots k-1 and k; Ampere's law around each slot
    turns = np.vstack([np.zeros((1, 3)), np.cumsum(slot_current, axis=0)[:-1]])
    turns -= turns.mean(axis=0)
    theta = 2 * np.pi * np.arange(geom.slots) / geom.slots
    fundamental = turns.T @ np.exp(-1j * geom.pole_pairs * theta)
    axes = -np.angle(fundamental)
    return Winding(turns, axes)


def d_axis_angle(geom: MotorGeometry, rotor_angle: float) -> float:
    """Electrical angle [rad] of the magnetizing d-axis in the stator MMF frame.

    Stator MMF is counted positive when it drives flux from yoke toward the
    gap, so the frame direction aiding a north pole at ``rotor_angle`` points
    half a period away.
    """
    return geom.pole_pairs * math.radians(rotor_angle) + math.pi


def phase_currents(geom: MotorGeometry, i_d: float, i_q: float, rotor_angle: float) -> np.ndarray:
    w = winding(geom)
    vec = complex(i_d, i_q) * np.exp(1j * d_axis_angle(geom, rotor_angle))
    return np.real(vec * np.exp(-1j * w.axes))


def dq_components(geom: MotorGeometry, abc, rotor_angle: float) -> tuple[float, float]:
    """Project phase quantities (currents or flux linkages) on the dq frame."""
    w = winding(geom)
    vec = (2.0 / 3.0) * np.sum(np.asarray(abc) * np.exp(1j * w.axes))
    dq = vec * np.exp(-1j * d_axis_angle(geom, rotor_angle))
    return float(dq.real), float(dq.imag)


# -- network -------------------------------------------------------------------

@dataclass
class ReluctanceNetwork:
    labels: tuple[str, ...]
    frm: np.ndarray
    to: np.ndarray
    linear: np.ndarray  # bool
    permeance: np.ndarray  # Wb/A, linear branches
    area: np.ndarray  # m^2
    length: np.ndarray  # m
    source: np.ndarray  # A-turns, drives flux frm -> to
    group: np.ndarray  # str labels
    steel: SteelCurve | None
    dpermeance: np.ndarray  # dP/d(rotor angle) [Wb/A/rad], air gap only
    tooth_branches: np.ndarray
    rotor_angle: float = 0.0
    reference: int = 0

    @property
    def n_nodes(self) -> int:
        return len(self.labels)

    @property
    def n_branches(self) -> int:
        return len(self.frm)

    def count(self, group: str) -> int:
        return int(np.sum(self.group == group))

    def replace(self, **changes) -> ReluctanceNetwork:
        from dataclasses import replace
        return replace(self, **changes)


class _Branches:
    def __init__(self):
        self.rows: list[tuple] = []

    def linear(self, a, b, permeance, group, source=0.0, area=0.0, length=0.0):
        self.rows.append((a, b, True, permeance, area, length, source, group))

    def steel(self, a, b, area, length, group, source=0.0):
        self.rows.append((a, b, False, 0.0, area, length, source, group))

    def arrays(self) -> dict:
        if not self.rows:
            cols = [[]] * 8
        else:
            cols = list(zip(*self.rows))
        return dict(
            frm=np.array(cols[0], dtype=int),
            to=np.array(cols[1], dtype=int),
            linear=np.array(cols[2], dtype=bool),
            permeance=np.array(cols[3], dtype=float),
            area=np.array(cols[4], dtype=float),
            length=np.array(cols[5], dtype=float),
            source=np.array(cols[6], dtype=float),
            group=np.array(cols[7], dtype=object),
        )


@dataclass(frozen=True)
class _Static:
    labels: tuple[str, ...]
    branches: dict
    segments: tuple[tuple[int, float, float], ...]  # (node, lo_deg, hi_deg) rotor frame
    tooth_branches: np.ndarray


@lru_cache(maxsize=64)
def _static_network(geom: MotorGeometry, topo: RotorTopology, remanence_scale: float) -> _Static:
    ns = geom.slots
    L = geom.stack_length * MM
    labels = [f"tip{k}" for k in range(ns)] + [f"yoke{k}" for k in range(ns)]
    tip = lambda k: k % ns  # noqa: E731
    yoke = lambda k: ns + k % ns  # noqa: E731
    br = _Branches()

    r_in = geom.stator_inner_diameter / 2
    r_yoke_mid = geom.stator_outer_diameter / 2 - geom.yoke_thickness / 2
    tooth_idx = []
    for k in range(ns):
        tooth_idx.append(len(br.rows))
        br.steel(yoke(k), tip(k), geom.tooth_width * geom.stack_length * MM**2,
                 geom.slot_depth * MM, "tooth")
    for k in range(ns):
        br.steel(yoke(k), yoke(k + 1), geom.yoke_thickness * geom.stack_length * MM**2,
                 2 * math.pi * r_yoke_mid / ns * MM, "yoke")
    slot_pitch_mm = 2 * math.pi * r_in / ns
    slot_width = math.pi * (2 * r_in + geom.slot_depth) / ns - geom.tooth_width
    leak = MU0 * L * (geom.tooth_tip_height / geom.slot_opening
                      + (geom.slot_depth - geom.tooth_tip_height) / (3 * slot_width))
    for k in range(ns):
        br.linear(tip(k), tip(k + 1), leak, "slot_leak",
                  area=geom.tooth_tip_height * geom.stack_length * MM**2,
                  length=geom.slot_opening * MM)
    del slot_pitch_mm

    segments: list[tuple[int, float, float]] = []
    p = geom.poles
    pitch = 360.0 / p
    r_o = geom.rotor_outer_radius
    mag = geom.magnet
    hc = mag.coercivity * remanence_scale
    t_m = geom.magnet_width * MM

    def add(name):
        labels.append(name)
        return len(labels) - 1

    def magnet_branch(a, b, length_mm, polarity):
        perm = MU0 * mag.relative_permeability * length_mm * MM * L / t_m
        br.linear(a, b, perm, "magnet", source=polarity * hc * t_m,
                  area=length_mm * MM * L, length=t_m)

    rib_area = topo.rib_width * MM * L
    if topo.kind is TopologyKind.RING:
        n_seg = ns
        seg = 360.0 / n_seg
        depth = 20.0
        nodes = [add(f"ring{i}") for i in range(n_seg)]
        for i in range(n_seg):
            br.steel(nodes[i], nodes[(i + 1) % n_seg], depth * MM * L,
                     2 * math.pi * (r_o - depth / 2) / n_seg * MM, "rotor_ring")
            segments.append((nodes[i], i * seg - seg / 2, i * seg + seg / 2))
    else:
        q_arc = topo.q_arc(p)
        if q_arc <= 0:
            raise ValueError("rotor arcs exceed the pole pitch")
        P = [add(f"pole{j}") for j in range(p)]
        M = [add(f"mid{j}") for j in range(p)] if topo.kind is TopologyKind.DELTA else None
        Q = [add(f"q{j}") for j in range(p)]
        C = [add(f"core{j}") for j in range(p)]
        r_s = geom.shaft_diameter / 2
        core_depth = max(topo.magnet_center_radius - 12.0 - r_s, 5.0)
        r_core_mid = r_s + core_depth / 2
        q_width = r_o * math.radians(q_arc)
        q_len = max(r_o - topo.magnet_center_radius, 5.0)
        half_v = math.radians(topo.v_angle / 2)
        for j in range(p):
            pol = 1.0 if j % 2 == 0 else -1.0
            centre = j * pitch
            nxt, prv = (j + 1) % p, (j - 1) % p
            if topo.kind is TopologyKind.V:
                for lm in topo.magnet_lengths:
                    magnet_branch(C[j], P[j], lm, pol)
                post_len = topo.magnet_lengths[0] * math.cos(half_v)
                br.steel(C[j], P[j], rib_area, post_len * MM, "post")
                br.steel(P[j], Q[j], rib_area, topo.bridge_length * MM, "bridge")
                br.steel(P[j], Q[prv], rib_area, topo.bridge_length * MM, "bridge")
            else:
                *inner, outer = topo.magnet_lengths
                for lm in inner:
                    magnet_branch(C[j], M[j], lm, pol)
                magnet_branch(M[j], P[j], outer, pol)
                br.steel(P[j], M[j], rib_area, topo.bridge_length * MM, "bridge")
                br.steel(P[j], M[j], rib_area, topo.bridge_length * MM, "bridge")
                br.steel(M[j], Q[j], rib_area, topo.bridge_length * MM, "bridge")
                br.steel(M[j], Q[prv], rib_area, topo.bridge_length * MM, "bridge")
                a0 = topo.pole_arc / 2 + topo.barrier_arc
                segments.append((M[j], centre + a0, centre + a0 + topo.side_arc))
                segments.append((M[j], centre - a0 - topo.side_arc, centre - a0))
            br.steel(Q[j], C[j], q_width / 2 * MM * L, q_len * MM, "qpath")
            br.steel(Q[j], C[nxt], q_width / 2 * MM * L, q_len * MM, "qpath")
            br.steel(C[j], C[nxt], core_depth * MM * L,
                     2 * math.pi * r_core_mid / p * MM, "core")
            segments.append((P[j], centre - topo.pole_arc / 2, centre + topo.pole_arc / 2))
            qc = centre + pitch / 2
            segments.append((Q[j], qc - q_arc / 2, qc + q_arc / 2))
    return _Static(tuple(labels), br.arrays(), tuple(segments), np.array(tooth_idx))


def _trapezoid_knots(lo, hi, taper):
    """Second-derivative knots of the box [lo, hi] averaged over a window of width taper.

    This is the unit trapezoid with half-height edges lo, hi whenever the
    taper is narrower than the box.
    """
    half = taper / 2
    pos = np.stack([lo - half, lo + half, hi - half, hi + half], axis=-1)
    w = np.array([1.0, -1.0, -1.0, 1.0]) / taper
    return pos, np.broadcast_to(w, pos.shape)


def _overlap(t_pos, t_w, s_pos, s_w, shift):
    """Correlation integral of tooth and segment trapezoids and its derivative.

    P(shift) = integral of tooth(x) * segment(x - shift) dx, evaluated in closed
    form from the trapezoids' second-derivative knots (cubic B-spline-like sum).
    """
    x = (shift[..., None, None] - t_pos[..., :, None] + s_pos[..., None, :])
    wts = t_w[..., :, None] * s_w[..., None, :]
    xp = np.maximum(-x, 0.0)
    # the support is bounded, so the mirrored truncated powers give P and dP/dshift
    val = np.sum(wts * xp**3, axis=(-1, -2)) / 6.0
    der = -np.sum(wts * xp**2, axis=(-1, -2)) / 2.0
    return val, der


def _tooth_profile(geom: MotorGeometry) -> tuple[float, float]:
    """Half-height half-width and taper [rad] of a tooth's gap permeance trapezoid.

    Neighbouring trapezoids overlap over the slot opening so that their sum
    dips by the relative-permeance depth of a slotted gap, and the area lost
    in the dip equals the Carter-coefficient gap extension.
    """
    g, b0 = geom.air_gap, geom.slot_opening
    r = b0 / g
    lost = g * r**2 / (5 + r)  # Carter: effective width removed per slot [mm]
    u = b0 / (2 * g) + math.sqrt(1 + (b0 / (2 * g)) ** 2)
    depth = min((1 + u**2 - 2 * u) / (1 + u**2), 1.0)
    d = lost / 2
    r_in = geom.stator_inner_diameter / 2
    pitch = 2 * math.pi / geom.slots
    return pitch / 2 - d / r_in, 2 * d / depth / r_in


def _airgap(geom: MotorGeometry, static: _Static, rotor_angle: float, fringing: float):
    ns = geom.slots
    pitch = 2 * math.pi / ns
    half_t, taper = _tooth_profile(geom)
    seg = np.array(static.segments, dtype=float)
    nodes = seg[:, 0].astype(int)
    s_mid = np.radians((seg[:, 1] + seg[:, 2]) / 2 + rotor_angle)
    s_half = np.radians(seg[:, 2] - seg[:, 1]) / 2
    centres = np.arange(ns) * pitch
    d = (s_mid[None, :] - centres[:, None] + np.pi) % (2 * np.pi) - np.pi
    # candidates: segment within reach of the tooth (trapezoid supports overlap)
    reach = half_t + taper / 2 + s_half[None, :] + ROTOR_TAPER / 2
    k, s = np.nonzero(np.abs(d) < reach)
    t_pos, t_w = _trapezoid_knots(np.full(len(k), -half_t), np.full(len(k), half_t), taper)
    s_pos, s_w = _trapezoid_knots(-s_half[s], s_half[s], ROTOR_TAPER)
    val, der = _overlap(t_pos, t_w, s_pos, s_w, d[k, s])
    # truncated-power sums cancel to round-off noise outside the support
    keep = val > 1e-9 * val.max()
    coeff = fringing * MU0 * geom.stack_length * MM * geom.gap_radius * MM / (geom.air_gap * MM)
    return k[keep], nodes[s[keep]], coeff * val[keep], coeff * der[keep]


def build_network(geom: MotorGeometry, topo: RotorTopology, mat: SoftMagneticMaterial | None,
                  rotor_angle: float, phase_currents=(0.0, 0.0, 0.0), *,
                  remanence_scale: float = 1.0, fringing: float = FRINGING) -> ReluctanceNetwork:
    """Assemble the network at ``rotor_angle`` [mech deg] with the given phase currents [A].

    ``mat=None`` builds a network whose lamination branches are ideal (linear,
    mu_r = 1000), which serves as a linear test fixture.
    """
    if not math.isfinite(rotor_angle):
        raise ValueError("rotor_angle must be finite")
    currents = np.asarray(phase_currents, dtype=float)
    if currents.shape != (geom.phases,) or not np.all(np.isfinite(currents)):
        raise ValueError("phase_currents must be finite, one per phase")
    static = _static_network(geom, topo, float(remanence_scale))
    b = static.branches
    k, rnode, perm, dperm = _airgap(geom, static, rotor_angle, fringing)
    n_ag = len(k)
    source = b["source"].copy()
    source[static.tooth_branches] += winding(geom).turns @ currents
    linear = b["linear"].copy()
    permeance = b["permeance"].copy()
    steel = None
    if mat is None:
        ideal = ~linear
        permeance[ideal] = 1000 * MU0 * b["area"][ideal] / b["length"][ideal]
        linear[:] = True
    else:
        steel = mat.steel
    area_ag = perm * geom.air_gap * MM / MU0
    net = ReluctanceNetwork(
        labels=static.labels,
        frm=np.concatenate([b["frm"], k]),
        to=np.concatenate([b["to"], rnode]),
        linear=np.concatenate([linear, np.ones(n_ag, bool)]),
        permeance=np.concatenate([permeance, perm]),
        area=np.concatenate([b["area"], area_ag]),
        length=np.concatenate([b["length"], np.full(n_ag, geom.air_gap * MM)]),
        source=np.concatenate([source, np.zeros(n_ag)]),
        group=np.concatenate([b["group"], np.full(n_ag, "airgap", dtype=object)]),
        steel=steel,
        dpermeance=np.concatenate([np.zeros(len(source)), dperm]),
        tooth_branches=static.tooth_branches,
        rotor_angle=float(rotor_angle),
    )
    return net


def check_network(net: ReluctanceNetwork) -> None:
    lin = net.linear
    if np.any(net.permeance[lin] <= 0):
        raise NetworkStructureError("linear branch with non-positive permeance")
    if np.any(net.area[~lin] <= 0) or np.any(net.length[~lin] <= 0):
        raise NetworkStructureError("lamination branch with non-positive area or length")
    if np.any(~lin) and net.steel is None:
        raise NetworkStructureError("nonlinear branches need a material curve")
    n = net.n_nodes
    adj = coo_matrix((np.ones(net.n_branches), (net.frm, net.to)), shape=(n, n))
    n_comp, _ = connected_components(adj, directed=False)
    if n_comp != 1:
        raise NetworkStructureError(f"network has {n_comp} disconnected parts")


# -- solution ------------------------------------------------------------------

@dataclass
class FluxSolution:
    node_potentials: np.ndarray
    branch_fluxes: np.ndarray
    branch_mmf: np.ndarray  # potential drop plus source, across each element
    iterations: int
    residual: float

    def flux_density(self, net: ReluctanceNetwork) -> np.ndarray:
        return self.branch_fluxes / net.area

    def node_imbalance(self, net: ReluctanceNetwork) -> np.ndarray:
        n = net.n_nodes
        return (np.bincount(net.frm, self.branch_fluxes, n)
                - np.bincount(net.to, self.branch_fluxes, n))


def branch_characteristic(net: ReluctanceNetwork, mmf: np.ndarray):
    """Branch flux and differential permeance for element MMFs ``mmf``."""
    phi = net.permeance * mmf
    g = net.permeance.copy()
    nl = ~net.linear
    if np.any(nl):
        h = mmf[nl] / net.length[nl]
        b, mu = net.steel.evaluate(h)
        phi[nl] = b * net.area[nl]
        g[nl] = mu * net.area[nl] / net.length[nl]
    return phi, g


def _residual(net, u):
    mmf = u[net.frm] - u[net.to] + net.source
    phi, g = branch_characteristic(net, mmf)
    n = net.n_nodes
    r = np.bincount(net.frm, phi, n) - np.bincount(net.to, phi, n)
    return mmf, phi, g, r


def _relative(r, phi) -> float:
    scale = np.max(np.abs(phi)) if phi.size else 0.0
    peak = np.max(np.abs(r)) if r.size else 0.0
    if scale == 0.0:
        return 0.0 if peak == 0.0 else math.inf
    return peak / scale


def solve(net: ReluctanceNetwork, u0: np.ndarray | None = None, *, tol: float = 1e-9,
          max_iter: int = 50, check: bool = True) -> FluxSolution:
    """Newton-Raphson on nodal flux balance with step halving on residual growth."""
    if check:
        check_network(net)
    n = net.n_nodes
    free = np.ones(n, bool)
    free[net.reference] = False
    u = np.zeros(n) if u0 is None else np.array(u0, dtype=float)
    u[net.reference] = 0.0
    f, t = net.frm, net.to
    mmf, phi, g, r = _residual(net, u)
    rel = _relative(r, phi)
    it = 0
    while rel > tol:
        if it >= max_iter:
            raise SolverError(f"no convergence after {max_iter} iterations "
                              f"(relative residual {rel:.3e})")
        it += 1
        jac = (np.bincount(f * n + f, g, n * n) + np.bincount(t * n + t, g, n * n)
               - np.bincount(f * n + t, g, n * n) - np.bincount(t * n + f, g, n * n))
        jac = jac.reshape(n, n)[np.ix_(free, free)]
        try:
            step = scipy.linalg.solve(jac, -r[free], assume_a="pos", check_finite=False)
        except (np.linalg.LinAlgError, scipy.linalg.LinAlgError) as exc:
            raise NetworkStructureError(f"singular Jacobian: {exc}") from None
        norm0 = np.linalg.norm(r[free])
        alpha = 1.0
        while True:
            trial = u.copy()
            trial[free] += alpha * step
            t_mmf, t_phi, t_g, t_r = _residual(net, trial)
            if np.linalg.norm(t_r[free]) <= norm0 or alpha < 1e-3:
                break
            alpha *= 0.5
        u, mmf, phi, g, r = trial, t_mmf, t_phi, t_g, t_r
        rel = _relative(r, phi)
    return FluxSolution(u, phi, mmf, it, rel)


def coenergy(net: ReluctanceNetwork, sol: FluxSolution) -> float:
    """Magnetic coenergy [J] of the solved network at fixed sources."""
    mmf = sol.branch_mmf
    lin = net.linear
    w = 0.5 * np.sum(net.permeance[lin] * mmf[lin] ** 2)
    nl = ~lin
    if np.any(nl):
        vol = net.area[nl] * net.length[nl]
        w += np.sum(vol * net.steel.coenergy_density(mmf[nl] / net.length[nl]))
    return float(w)


def airgap_torque(net: ReluctanceNetwork, sol: FluxSolution) -> float:
    """Torque from the permeance derivative at the solved potentials [N m]."""
    return float(0.5 * np.sum(net.dpermeance * sol.branch_mmf ** 2))


def flux_linkage(geom: MotorGeometry, net: ReluctanceNetwork, sol: FluxSolution) -> np.ndarray:
    """Phase flux linkages [Wb-turn] from the tooth fluxes."""
    return winding(geom).turns.T @ sol.branch_fluxes[net.tooth_branches]


# -- torque --------------------------------------------------------------------

@dataclass
class TorqueProfile:
    angles: np.ndarray  # mechanical degrees, uniform
    torque: np.ndarray  # N m
    kind: str = "load"
    raw_torque: np.ndarray | None = None  # before skew attenuation
    iterations_max: int = 0
    residual_max: float = 0.0
    flux_densities: list = field(default_factory=list, repr=False)
    network_groups: np.ndarray | None = field(default=None, repr=False)
    network_volumes: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self) -> None:
        self.angles = np.asarray(self.angles, dtype=float)
        self.torque = np.asarray(self.torque, dtype=float)
        if self.angles.shape != self.torque.shape:
            raise ValueError("angles and torque must have the same length")

    @property
    def step(self) -> float:
        return float(self.angles[1] - self.angles[0]) if len(self.angles) > 1 else 0.0

    @property
    def window(self) -> float:
        return self.step * len(self.angles)


@dataclass(frozen=True)
class TorqueMetrics:
    t_avg: float
    t_max: float
    ripple_pct: float
    cogging_pp: float | None = None
    degenerate: bool = False


def metrics(profile: TorqueProfile) -> TorqueMetrics:
    """Average, maximum and peak-to-peak ripple of a torque profile."""
    t = np.asarray(profile.torque, dtype=float)
    if t.size == 0:
        raise ValueError("empty torque profile")
    mean = float(np.mean(t))
    t_max = float(np.max(t))
    spread = float(np.max(t) - np.min(t))
    degenerate = mean == 0.0
    ripple = 0.0 if degenerate else 100.0 * spread / abs(mean)
    cog = spread if profile.kind == "cogging" else None
    return TorqueMetrics(mean, max(t_max, mean), ripple, cog, degenerate)


def apply_skew(geom: MotorGeometry, torque: np.ndarray, window: float) -> np.ndarray:
    """Attenuate each harmonic of a periodic profile by the skew factor."""
    n = len(torque)
    spectrum = np.fft.rfft(torque)
    orders = np.arange(len(spectrum)) * 360.0 / window
    spectrum *= skew_factor(geom, orders)
    return np.fft.irfft(spectrum, n)


@dataclass(frozen=True)
class OperatingPoint:
    speed: float  # rpm
    current_peak: float  # A
    gamma: float  # current advance angle, deg (0 = pure q-axis)

    def __post_init__(self) -> None:
        if not 0.0 <= self.gamma < 90.0:
            raise ValueError(f"gamma={self.gamma} outside [0, 90)")
        if self.current_peak < 0:
            raise ValueError("current_peak must be >= 0")

    def dq_currents(self) -> tuple[float, float]:
        g = math.radians(self.gamma)
        return -self.current_peak * math.sin(g), self.current_peak * math.cos(g)


def _profile(geom, topo, mat, i_d, i_q, n_steps, window, start, remanence_scale, kind,
             keep_flux):
    if n_steps < 2:
        raise ValueError("n_steps must be >= 2")
    step = window / n_steps
    delta = step / 2
    angles = start + step * np.arange(n_steps)
    raw = np.empty(n_steps)
    u_prev = None
    it_max, res_max = 0, 0.0
    fluxes = []
    net = None
    for i, theta in enumerate(angles):
        cur = phase_currents(geom, i_d, i_q, theta)
        w = []
        for sgn in (-1.0, 1.0):
            net = build_network(geom, topo, mat, theta + sgn * delta, cur,
                                remanence_scale=remanence_scale)
            try:
                sol = solve(net, u_prev, check=(i == 0))
            except (SolverError, NetworkStructureError) as exc:
                raise type(exc)(f"at rotor angle {theta + sgn * delta:.4f} deg: {exc}") from None
            u_prev = sol.node_potentials
            it_max = max(it_max, sol.iterations)
            res_max = max(res_max, sol.residual)
            w.append(coenergy(net, sol))
        raw[i] = (w[1] - w[0]) / math.radians(2 * delta)
        if keep_flux:
            fluxes.append(sol.flux_density(net))
    torque = apply_skew(geom, raw, window)
    prof = TorqueProfile(angles, torque, kind, raw, it_max, res_max)
    if keep_flux and net is not None:
        n_static = len(_static_network(geom, topo, float(remanence_scale)).branches["frm"])
        prof.flux_densities = [b[:n_static] for b in fluxes]
        prof.network_groups = net.group[:n_static]
        prof.network_volumes = (net.area * net.length)[:n_static]
    return prof


def torque_profile(geom: MotorGeometry, topo: RotorTopology, mat: SoftMagneticMaterial,
                   op: OperatingPoint, n_steps: int = 90, *, remanence_scale: float = 1.0,
                   window: float | None = None, start: float = 0.0,
                   keep_flux: bool = False) -> TorqueProfile:
    """Synchronous torque over ``window`` mechanical degrees (default: one pole pitch)."""
    if window is None:
        window = 360.0 / geom.poles
    i_d, i_q = op.dq_currents()
    return _profile(geom, topo, mat, i_d, i_q, n_steps, window, start, remanence_scale,
                    "load", keep_flux)


def cogging_profile(geom: MotorGeometry, topo: RotorTopology, mat: SoftMagneticMaterial,
                    n_steps: int = 30, *, remanence_scale: float = 1.0,
                    window: float | None = None, start: float = 0.0) -> TorqueProfile:
    """Zero-current torque (default window: one cogging period)."""
    if window is None:
        window = cogging_period(geom)
    return _profile(geom, topo, mat, 0.0, 0.0, n_steps, window, start, remanence_scale,
                    "cogging", False)


def dominant_order(profile: TorqueProfile) -> float:
    """Mechanical order (cycles/rev) of the largest non-DC harmonic."""
    spectrum = np.abs(np.fft.rfft(profile.torque))
    spectrum[0] = 0.0
    k = int(np.argmax(spectrum))
    return k * 360.0 / profile.window


def export_profile(profile: TorqueProfile, path) -> None:
    from pathlib import Path
    lines = ["# angle_deg torque_Nm"]
    lines += [f"{a!r} {t!r}" for a, t in zip(profile.angles.tolist(), profile.torque.tolist())]
    Path(path).write_text("\n".join(lines) + "\n")
