"""Rotor unbalance force, lamination stress, lateral vibration and stator natural frequencies."""

from __future__ import annotations

import math
from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.linalg

from .geometry import MotorGeometry, RotorTopology, lamination_volume, rib_section_area, rotor_mass
from .materials import SoftMagneticMaterial

MODES = tuple(range(2, 11))
DEFAULT_ECCENTRICITY = 0.05e-3  # m
DEFAULT_RIPPLE_FORCE_COEFFICIENT = 0.01  # per %: ripple force = peak-to-peak tangential force
DEFAULT_HARMONICS = 5
RESONANCE_BAND = 0.01
MARGIN_FLAG = 0.1


class ResonanceError(ValueError):
    """A forcing frequency sits on an undamped natural frequency."""


class CalibrationMissingError(ValueError):
    """Natural-frequency mode factors are not available."""


# -- force and stress ----------------------------------------------------------

def unbalance_force(m: float, e: float, omega: float) -> float:
    """Rotating unbalance force m*e*omega^2 [N]."""
    if not m > 0:
        raise ValueError("mass must be > 0")
    if e < 0:
        raise ValueError("eccentricity must be >= 0")
    return m * e * omega**2


def ripple_force(ripple_pct: float, t_avg: float, rotor_radius: float,
                 coefficient: float = DEFAULT_RIPPLE_FORCE_COEFFICIENT) -> float:
    """Tangential force component from torque ripple [N]."""
    if ripple_pct < 0 or rotor_radius <= 0 or coefficient < 0:
        raise ValueError("ripple_pct, coefficient must be >= 0 and rotor_radius > 0")
    return coefficient * ripple_pct * abs(t_avg) / rotor_radius


def lamination_stress(f_total: float, area: float) -> float:
    """Average stress F/A [Pa]."""
    if not area > 0:
        raise ValueError(f"stress area must be > 0, got {area}")
    return f_total / area


@dataclass(frozen=True)
class StrainCheck:
    strain: float
    within_yield: bool


def strain_check(stress: float, mat: SoftMagneticMaterial) -> StrainCheck:
    if stress < 0:
        raise ValueError("stress must be >= 0")
    return StrainCheck(stress / mat.young_modulus, stress < mat.yield_stress)


@dataclass(frozen=True)
class RotorDynamicsInput:
    mass: float  # kg
    eccentricity: float  # m
    angular_velocity: float  # rad/s
    rib_area: float  # m^2
    ripple_force_coefficient: float = DEFAULT_RIPPLE_FORCE_COEFFICIENT

    def __post_init__(self) -> None:
        if not self.mass > 0:
            raise ValueError("mass must be > 0")
        if self.eccentricity < 0:
            raise ValueError("eccentricity must be >= 0")
        if not self.rib_area > 0:
            raise ValueError("rib_area must be > 0")
        if self.ripple_force_coefficient < 0:
            raise ValueError("ripple_force_coefficient must be >= 0")

    def unbalance(self) -> float:
        return unbalance_force(self.mass, self.eccentricity, self.angular_velocity)


# -- lateral vibration ----------------------------------------------------------

@dataclass(frozen=True)
class Harmonic:
    amplitude: float  # N, rotating force magnitude
    frequency: float  # rad/s
    phase: float = 0.0  # rad


def _check_spd(name: str, a: np.ndarray) -> None:
    if a.shape != (2, 2):
        raise ValueError(f"{name} must be 2x2")
    if not np.allclose(a, a.T, rtol=1e-12, atol=0.0):
        raise ValueError(f"{name} must be symmetric")
    try:
        np.linalg.cholesky(a)
    except np.linalg.LinAlgError:
        raise ValueError(f"{name} must be positive definite") from None


@dataclass(frozen=True)
class LateralModel:
    """Undamped two-degree-of-freedom lateral model M x'' + K x = F(t).

    Each harmonic is a force of constant magnitude rotating with the rotor:
    (A cos(w t + p), A sin(w t + p)).
    """

    mass_matrix: np.ndarray
    stiffness_matrix: np.ndarray
    harmonics: tuple[Harmonic, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "mass_matrix", np.asarray(self.mass_matrix, dtype=float))
        object.__setattr__(self, "stiffness_matrix", np.asarray(self.stiffness_matrix, dtype=float))
        object.__setattr__(self, "harmonics", tuple(self.harmonics))
        _check_spd("mass_matrix", self.mass_matrix)
        _check_spd("stiffness_matrix", self.stiffness_matrix)

    def natural_frequencies(self) -> np.ndarray:
        """Undamped natural angular frequencies [rad/s], ascending."""
        lam = scipy.linalg.eigh(self.stiffness_matrix, self.mass_matrix, eigvals_only=True)
        return np.sqrt(lam)

    def forcing(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        fx = sum(h.amplitude * np.cos(h.frequency * t + h.phase) for h in self.harmonics)
        fy = sum(h.amplitude * np.sin(h.frequency * t + h.phase) for h in self.harmonics)
        return np.array([fx + 0 * t, fy + 0 * t])


@dataclass(frozen=True)
class LateralResponse:
    displacement_x: float  # m, root-sum-square of harmonic amplitudes
    displacement_y: float
    harmonic_x: tuple[float, ...] = ()
    harmonic_y: tuple[float, ...] = ()

    @property
    def amplitude(self) -> float:
        return max(self.displacement_x, self.displacement_y)


def harmonic_phasors(model: LateralModel) -> list[np.ndarray]:
    """Complex steady-state displacement phasors per harmonic."""
    wn = model.natural_frequencies()
    out = []
    for h in model.harmonics:
        if h.amplitude == 0:
            out.append(np.zeros(2, complex))
            continue
        near = np.abs(abs(h.frequency) - wn) / wn
        if np.any(near < RESONANCE_BAND):
            raise ResonanceError(f"forcing at {h.frequency:.6g} rad/s is within "
                                 f"{RESONANCE_BAND:.0%} of a natural frequency {wn.tolist()}")
        f = h.amplitude * np.exp(1j * h.phase) * np.array([1.0, -1.0j])
        dyn = model.stiffness_matrix - h.frequency**2 * model.mass_matrix
        out.append(np.linalg.solve(dyn.astype(complex), f))
    return out


def lateral_response(model: LateralModel) -> LateralResponse:
    """Steady-state displacement amplitudes by frequency-domain solve."""
    ph = harmonic_phasors(model)
    ax = tuple(float(abs(p[0])) for p in ph)
    ay = tuple(float(abs(p[1])) for p in ph)
    return LateralResponse(math.sqrt(sum(a * a for a in ax)), math.sqrt(sum(a * a for a in ay)),
                           ax, ay)


def forcing_harmonics(f_unbalance: float, f_ripple: float, omega: float,
                      count: int = DEFAULT_HARMONICS) -> tuple[Harmonic, ...]:
    """Fundamental carries the unbalance; harmonics 2..count share the ripple force as 1/k."""
    if count < 1:
        raise ValueError("count must be >= 1")
    harmonics = [Harmonic(f_unbalance, omega)]
    orders = np.arange(2, count + 1)
    if orders.size:
        w = (1.0 / orders) / np.sum(1.0 / orders)
        harmonics += [Harmonic(float(f_ripple * wk), float(k * omega)) for k, wk in zip(orders, w)]
    return tuple(harmonics)


def lateral_stiffness(geom: MotorGeometry, topo: RotorTopology, mat: SoftMagneticMaterial,
                      coefficient: float) -> float:
    """Effective support stiffness c_k * E * A / L [N/m] of the rotor lamination stack."""
    if coefficient <= 0:
        raise ValueError("stiffness coefficient must be > 0")
    length = geom.stack_length * 1e-3
    area = lamination_volume(geom, topo) / length
    return coefficient * mat.young_modulus * area / length


# -- natural frequencies --------------------------------------------------------

def wave_speed(mat: SoftMagneticMaterial) -> float:
    """sqrt(E/rho) [m/s]."""
    return math.sqrt(mat.young_modulus / mat.density)


def fit_mode_factors(mat: SoftMagneticMaterial, frequencies: Mapping[int, float]) -> dict[int, float]:
    """Geometric mode factors C_mode = f_mode / sqrt(E/rho) from one material's frequencies."""
    c = wave_speed(mat)
    return {int(mode): float(f) / c for mode, f in frequencies.items()}


def natural_frequencies(mat: SoftMagneticMaterial,
                        mode_factors: Mapping[int, float] | None) -> dict[int, float]:
    """Stator lateral natural frequencies [Hz] for modes 2..10."""
    if not mode_factors:
        raise CalibrationMissingError("natural-frequency mode factors are not calibrated")
    missing = [m for m in MODES if m not in mode_factors]
    if missing:
        raise CalibrationMissingError(f"mode factors missing for modes {missing}")
    c = wave_speed(mat)
    return {m: mode_factors[m] * c for m in MODES}


@dataclass(frozen=True)
class ModeMargin:
    mode: int
    margin: float  # min |f_exc - f_n| / f_n
    excitation: float  # Hz, the closest excitation
    flagged: bool


def excitation_frequencies(geom: MotorGeometry, speed: float | None = None,
                           switching: float | None = None) -> list[float]:
    """Rotation, slot-passing and optional switching frequency [Hz]."""
    speed = geom.rated_speed if speed is None else speed
    out = [speed / 60.0, geom.slots * speed / 60.0]
    if switching:
        out.append(float(switching))
    return out


def resonance_margin(f_n: Mapping[int, float], excitations: Sequence[float]) -> dict[int, ModeMargin]:
    if len(excitations) == 0:
        raise ValueError("excitation list must not be empty")
    exc = np.asarray(excitations, dtype=float)
    out = {}
    for mode, fn in f_n.items():
        rel = np.abs(exc - fn) / fn
        i = int(np.argmin(rel))
        out[mode] = ModeMargin(mode, float(rel[i]), float(exc[i]), bool(rel[i] < MARGIN_FLAG))
    return out


def export_natural_frequencies(table: Mapping[str, Mapping[int, float]], path,
                               delimiter: str = ",") -> None:
    """Rows = modes 2..10, columns = materials."""
    names = list(table)
    lines = [delimiter.join(["mode", *names])]
    for m in MODES:
        lines.append(delimiter.join([str(m), *(f"{table[n][m]:.6g}" for n in names)]))
    Path(path).write_text("\n".join(lines) + "\n")


# -- assembled analysis ---------------------------------------------------------

@dataclass(frozen=True)
class MechanicalResult:
    rotor_mass: float  # kg
    force: float  # N, unbalance + ripple component
    stress_avg: float  # Pa
    strain: float
    within_yield: bool
    displacement_x: float  # m
    displacement_y: float  # m
    natural_frequencies: dict = field(default_factory=dict)
    margins: dict = field(default_factory=dict, repr=False)


def analyze_mechanics(geom: MotorGeometry, topo: RotorTopology, mat: SoftMagneticMaterial, *,
                      t_avg: float, ripple_pct: float, speed: float | None = None,
                      eccentricity: float = DEFAULT_ECCENTRICITY,
                      stiffness_coefficient: float,
                      ripple_force_coefficient: float = DEFAULT_RIPPLE_FORCE_COEFFICIENT,
                      mode_factors: Mapping[int, float] | None = None,
                      harmonics: int = DEFAULT_HARMONICS) -> MechanicalResult:
    speed = geom.rated_speed if speed is None else speed
    omega = 2 * math.pi * speed / 60.0
    inp = RotorDynamicsInput(rotor_mass(geom, topo, mat.density), eccentricity, omega,
                             rib_section_area(topo, geom), ripple_force_coefficient)
    f_unb = inp.unbalance()
    f_rip = ripple_force(ripple_pct, t_avg, geom.rotor_outer_radius * 1e-3,
                         ripple_force_coefficient)
    stress = lamination_stress(f_unb + f_rip, inp.rib_area)
    check = strain_check(stress, mat)
    k = lateral_stiffness(geom, topo, mat, stiffness_coefficient)
    model = LateralModel(np.eye(2) * inp.mass, np.eye(2) * k,
                         forcing_harmonics(f_unb, f_rip, omega, harmonics))
    resp = lateral_response(model)
    fn = natural_frequencies(mat, mode_factors) if mode_factors else {}
    margins = resonance_margin(fn, excitation_frequencies(geom, speed)) if fn else {}
    return MechanicalResult(inp.mass, f_unb + f_rip, stress, check.strain, check.within_yield,
                            resp.displacement_x, resp.displacement_y, fn, margins)
