"""Rated-point evaluation of one (material, topology) cell."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import TYPE_CHECKING

from . import drive, losses, magnetics, mechanics
from .geometry import MotorGeometry, RotorTopology, magnet_volume
from .materials import SoftMagneticMaterial

if TYPE_CHECKING:
    from .calibration import Calibration


@dataclass(frozen=True)
class AnalysisSettings:
    n_steps: int = 90  # torque samples over one pole pitch
    cogging_steps: int = 30  # samples over one cogging period
    current: float | None = None  # A peak; default rated
    speed: float | None = None  # rpm; default rated
    harmonics: int = mechanics.DEFAULT_HARMONICS

    def __post_init__(self) -> None:
        if self.n_steps < 2 or self.cogging_steps < 2:
            raise ValueError("profiles need at least two steps")
        if self.harmonics < 1:
            raise ValueError("harmonics must be >= 1")


@dataclass
class ElectricalResult:
    dq: drive.DqParams
    op: magnetics.OperatingPoint
    metrics: magnetics.TorqueMetrics
    cogging_pp: float
    losses: losses.LossBreakdown
    efficiency: float
    profile: magnetics.TorqueProfile = field(repr=False)
    cogging: magnetics.TorqueProfile = field(repr=False)
    iterations_max: int = 0
    residual_max: float = 0.0


def rated_torque(geom: MotorGeometry, topo: RotorTopology, mat: SoftMagneticMaterial,
                 remanence_scale: float, settings: AnalysisSettings = AnalysisSettings(),
                 keep_flux: bool = False):
    """MTPA operating point and its torque profile."""
    current = geom.line_peak_current if settings.current is None else settings.current
    dq = drive.estimate_dq_params(geom, topo, mat, remanence_scale=remanence_scale)
    op = drive.mtpa_operating_point(geom, dq, current, settings.speed)
    prof = magnetics.torque_profile(geom, topo, mat, op, settings.n_steps,
                                    remanence_scale=remanence_scale, keep_flux=keep_flux)
    return dq, op, prof


def electrical(geom: MotorGeometry, topo: RotorTopology, mat: SoftMagneticMaterial,
               calib: Calibration, settings: AnalysisSettings = AnalysisSettings(),
               *, with_cogging: bool = True) -> ElectricalResult:
    s = calib.remanence_scale
    dq, op, prof = rated_torque(geom, topo, mat, s, settings, keep_flux=True)
    m = magnetics.metrics(prof)
    if with_cogging:
        cog = magnetics.cogging_profile(geom, topo, mat, settings.cogging_steps, remanence_scale=s)
    else:
        cog = magnetics.TorqueProfile([0.0], [0.0], "cogging")
    cog_pp = magnetics.metrics(cog).cogging_pp
    omega = 2 * math.pi * op.speed / 60.0
    regions = losses.core_loss(geom, topo, mat, prof, op.speed)
    lb = losses.LossBreakdown(
        p_core=sum(regions.values()),
        p_copper=losses.copper_loss(op.current_peak / math.sqrt(2), calib.r_phase),
        p_magnet=losses.magnet_loss(op, magnet_volume(geom, topo), pole_pairs=geom.pole_pairs,
                                    k_pm=calib.k_pm),
        p_out=max(m.t_avg, 0.0) * omega,
        core_regions=regions,
    )
    eff = losses.efficiency(lb)
    return ElectricalResult(dq, op, m, cog_pp, lb, eff, prof, cog,
                            max(prof.iterations_max, cog.iterations_max),
                            max(prof.residual_max, cog.residual_max))


def mechanical(geom: MotorGeometry, topo: RotorTopology, mat: SoftMagneticMaterial,
               calib: Calibration, t_avg: float, ripple_pct: float,
               settings: AnalysisSettings = AnalysisSettings()) -> mechanics.MechanicalResult:
    return mechanics.analyze_mechanics(
        geom, topo, mat, t_avg=t_avg, ripple_pct=ripple_pct, speed=settings.speed,
        eccentricity=calib.eccentricity, stiffness_coefficient=calib.stiffness_coefficient,
        ripple_force_coefficient=calib.ripple_force_coefficient,
        mode_factors=calib.mode_factors, harmonics=settings.harmonics)
