"""Loss decomposition and efficiency at an operating point."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .geometry import MM, MotorGeometry, RotorTopology, lamination_volume
from .magnetics import OperatingPoint, TorqueProfile
from .materials import SoftMagneticMaterial, core_loss_density

COPPER_RESISTIVITY = 1.72e-8  # ohm m at 20 C
COPPER_TEMP_COEFF = 0.00393  # 1/K
DEFAULT_K_PM = 30.0  # W / (Hz^2 m^3)

STATOR_REGIONS = ("tooth", "yoke")
ROTOR_GROUPS = ("post", "bridge", "qpath", "core", "rotor_ring")


class UndefinedEfficiencyError(ValueError):
    """Output power and every loss are zero."""


@dataclass(frozen=True)
class LossBreakdown:
    p_core: float  # W
    p_copper: float  # W
    p_magnet: float  # W
    p_out: float  # W
    core_regions: dict = field(default_factory=dict, compare=False)

    def __post_init__(self) -> None:
        for name in ("p_core", "p_copper", "p_magnet", "p_out"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v >= 0):
                raise ValueError(f"{name} must be finite and >= 0, got {v}")

    @property
    def p_in(self) -> float:
        return self.p_out + self.p_core + self.p_copper + self.p_magnet

    @property
    def p_loss(self) -> float:
        return self.p_core + self.p_copper + self.p_magnet


def efficiency(lb: LossBreakdown) -> float:
    """Output over output-plus-losses."""
    denom = lb.p_out + lb.p_core + lb.p_copper + lb.p_magnet
    if denom == 0:
        raise UndefinedEfficiencyError("efficiency is undefined when all powers are zero")
    return lb.p_out / denom


def copper_loss(i_rms: float, r_phase: float) -> float:
    if i_rms < 0 or r_phase < 0:
        raise ValueError("i_rms and r_phase must be >= 0")
    return 3 * i_rms**2 * r_phase


def series_turns(geom: MotorGeometry) -> float:
    """Series turns per phase per parallel path."""
    conductors = geom.slots * geom.conductors_per_slot / geom.phases
    return conductors / (2 * geom.parallel_paths)


def phase_resistance(geom: MotorGeometry, *, fill_factor: float = 0.45,
                     temperature: float = 20.0) -> float:
    """DC phase resistance [ohm] from slot fill, turns, stack and end-turn length.

    End turns are semicircles spanning one pole pitch at mid-slot radius.
    """
    if not 0 < fill_factor <= 1:
        raise ValueError("fill_factor must be in (0, 1]")
    r_mid = geom.stator_inner_diameter / 2 + geom.slot_depth / 2
    coil_span = 2 * math.pi * r_mid / geom.poles
    conductor_len = (geom.stack_length + math.pi * coil_span / 2) * MM
    conductor_area = fill_factor * geom.slot_area / geom.conductors_per_slot * MM**2
    rho = COPPER_RESISTIVITY * (1 + COPPER_TEMP_COEFF * (temperature - 20.0))
    path = rho * 2 * series_turns(geom) * conductor_len / conductor_area
    return path / geom.parallel_paths


def magnet_loss(op: OperatingPoint, magnet_volume: float, *, pole_pairs: int,
                k_pm: float = DEFAULT_K_PM) -> float:
    """Eddy-current proxy k_pm * f^2 * V at the electrical frequency."""
    if magnet_volume < 0 or k_pm < 0:
        raise ValueError("magnet_volume and k_pm must be >= 0")
    f = pole_pairs * op.speed / 60.0
    return k_pm * f**2 * magnet_volume


def _region_loss(mat, b, volumes, f, mass):
    if b.size == 0 or mass == 0:
        return 0.0
    density = core_loss_density(mat, b, f)  # W/kg
    return float(np.sum(density * volumes) / np.sum(volumes)) * mass


def core_loss(geom: MotorGeometry, topo: RotorTopology, mat: SoftMagneticMaterial,
              profile: TorqueProfile, speed: float | None = None) -> dict[str, float]:
    """Steinmetz core loss [W] per region from the branch flux densities of a profile.

    The profile must span half an electrical period (one pole pitch) and carry
    per-step flux densities. Stator regions use the peak |B| at the electrical
    frequency; rotor regions see only slotting ripple, so they use the
    half-range of B at the slot-passing frequency.
    """
    if not profile.flux_densities:
        raise ValueError("profile carries no flux densities (run with keep_flux=True)")
    speed = geom.rated_speed if speed is None else speed
    b = np.abs(np.array(profile.flux_densities))
    groups = profile.network_groups
    vols = profile.network_volumes
    f_e = geom.pole_pairs * speed / 60.0
    f_slot = geom.slots * speed / 60.0
    rho = mat.density
    masses = {k: v * rho for k, v in geom.stator_volumes().items()}
    out = {}
    for region in STATOR_REGIONS:
        sel = groups == region
        out[region] = _region_loss(mat, b[:, sel].max(axis=0), vols[sel], f_e, masses[region])
    sel = np.isin(groups, ROTOR_GROUPS)
    signed = np.array(profile.flux_densities)[:, sel]
    swing = (signed.max(axis=0) - signed.min(axis=0)) / 2
    out["rotor"] = _region_loss(mat, swing, vols[sel], f_slot,
                                lamination_volume(geom, topo) * rho)
    return out
