"""dq-axis machine parameters and maximum-torque-per-ampere current angle."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .geometry import MotorGeometry, RotorTopology
from .magnetics import (OperatingPoint, build_network, dq_components, flux_linkage,
                        phase_currents, solve)
from .materials import SoftMagneticMaterial

SMALL_SIGNAL_FRACTION = 0.1

__all__ = ["DqParams", "OperatingPoint", "estimate_dq_params", "mtpa_gamma", "dq_torque",
           "check_operating_point", "mtpa_operating_point"]


@dataclass(frozen=True)
class DqParams:
    l_d: float  # H
    l_q: float  # H
    psi_m: float  # Wb
    pole_pairs: int

    def __post_init__(self) -> None:
        if not (self.l_d > 0 and self.l_q > 0):
            raise ValueError(f"inductances must be positive (l_d={self.l_d}, l_q={self.l_q})")
        if self.psi_m < 0:
            raise ValueError("psi_m must be >= 0")
        if self.pole_pairs < 1:
            raise ValueError("pole_pairs must be >= 1")

    @property
    def saliency(self) -> float:
        return self.l_q / self.l_d


def check_operating_point(geom: MotorGeometry, op: OperatingPoint) -> None:
    if op.current_peak > geom.line_peak_current:
        raise ValueError(f"current_peak {op.current_peak} A exceeds the "
                         f"{geom.line_peak_current} A rating")


def _dq_linkage(geom, topo, mat, i_d, i_q, angle, remanence_scale):
    cur = phase_currents(geom, i_d, i_q, angle)
    net = build_network(geom, topo, mat, angle, cur, remanence_scale=remanence_scale)
    sol = solve(net)
    return dq_components(geom, flux_linkage(geom, net, sol), angle)


def estimate_dq_params(geom: MotorGeometry, topo: RotorTopology, mat: SoftMagneticMaterial,
                       *, current: float | None = None, remanence_scale: float = 1.0,
                       positions: int = 4) -> DqParams:
    """dq inductances and magnet flux linkage of the MEC.

    Inductances are flux-linkage/current ratios for excitation on one axis at
    a time, at ``current`` [A] (default: a small-signal tenth of the rated peak,
    so the result reflects the magnet-biased operating point rather than
    full-load saturation). Each quantity is averaged over ``positions`` rotor
    angles spread across one slot pitch so that slotting does not bias it.
    """
    if current is None:
        current = SMALL_SIGNAL_FRACTION * geom.line_peak_current
    if current <= 0:
        raise ValueError("current must be > 0")
    angles = np.arange(positions) * geom.slot_pitch_deg / positions
    psi, ld, lq = [], [], []
    for a in angles:
        psi_d0, _ = _dq_linkage(geom, topo, mat, 0.0, 0.0, a, remanence_scale)
        psi_d, _ = _dq_linkage(geom, topo, mat, -current, 0.0, a, remanence_scale)
        _, psi_q = _dq_linkage(geom, topo, mat, 0.0, current, a, remanence_scale)
        psi.append(psi_d0)
        ld.append((psi_d - psi_d0) / -current)
        lq.append(psi_q / current)
    psi_m = max(float(np.mean(psi)), 0.0)
    return DqParams(float(np.mean(ld)), float(np.mean(lq)), psi_m, geom.pole_pairs)


def _currents(gamma: float, i_peak: float) -> tuple[float, float]:
    if gamma == 90.0:
        return -i_peak, 0.0
    g = math.radians(gamma)
    return -i_peak * math.sin(g), i_peak * math.cos(g)


def dq_torque(dq: DqParams, gamma: float, i_peak: float) -> float:
    """Electromagnetic torque [N m] of the constant-parameter dq model."""
    i_d, i_q = _currents(gamma, i_peak)
    return 1.5 * dq.pole_pairs * (dq.psi_m * i_q + (dq.l_d - dq.l_q) * i_d * i_q)


def mtpa_gamma(dq: DqParams, i_peak: float) -> float:
    """Current advance angle [deg] maximising ``dq_torque`` at ``i_peak``."""
    if i_peak <= 0:
        raise ValueError("i_peak must be > 0")
    dl = dq.l_q - dq.l_d
    if dl <= 0:
        return 0.0
    if dq.psi_m == 0:
        return 45.0
    # rationalised closed form; avoids cancellation when saliency is weak
    s = 2 * dl * i_peak / (dq.psi_m + math.sqrt(dq.psi_m**2 + 8 * (dl * i_peak) ** 2))
    return math.degrees(math.asin(s))


def mtpa_operating_point(geom: MotorGeometry, dq: DqParams, current: float | None = None,
                         speed: float | None = None) -> OperatingPoint:
    current = geom.line_peak_current if current is None else current
    speed = geom.rated_speed if speed is None else speed
    op = OperatingPoint(speed, current, mtpa_gamma(dq, current))
    check_operating_point(geom, op)
    return op
