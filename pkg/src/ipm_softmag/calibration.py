"""One-time calibration of the lumped models against the reference machine.

Every factor is fitted on the Hiperco 50 V-type cell only (natural-frequency
factors on the Hiperco 50 column); all other cells are predictions.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import scipy.optimize

from . import analysis, mechanics, reference
from .geometry import MotorGeometry, RotorTopology, v_type
from .losses import DEFAULT_K_PM, phase_resistance
from .materials import MaterialDB, load_material_db

DEFAULT_PATH = Path(__file__).with_name("data") / "calibration.json"
ANCHOR_MATERIAL = "Hiperco 50"
ANCHOR_TOPOLOGY = "v"


class CalibrationError(RuntimeError):
    pass


@dataclass(frozen=True)
class Calibration:
    remanence_scale: float = 1.0
    r_phase: float = field(default_factory=lambda: phase_resistance(MotorGeometry()))
    eccentricity: float = mechanics.DEFAULT_ECCENTRICITY  # m
    stiffness_coefficient: float = 0.2
    ripple_force_coefficient: float = mechanics.DEFAULT_RIPPLE_FORCE_COEFFICIENT
    k_pm: float = DEFAULT_K_PM
    mode_factors: dict = field(default_factory=dict)
    targets: dict = field(default_factory=dict, compare=False)

    def __post_init__(self) -> None:
        if not self.remanence_scale > 0:
            raise ValueError("remanence_scale must be > 0")
        if self.r_phase < 0 or self.eccentricity < 0 or self.k_pm < 0:
            raise ValueError("r_phase, eccentricity and k_pm must be >= 0")
        if not self.stiffness_coefficient > 0:
            raise ValueError("stiffness_coefficient must be > 0")
        object.__setattr__(self, "mode_factors",
                           {int(k): float(v) for k, v in self.mode_factors.items()})

    def to_dict(self) -> dict:
        d = asdict(self)
        d["mode_factors"] = {str(k): v for k, v in sorted(self.mode_factors.items())}
        return d

    @classmethod
    def from_dict(cls, d: dict) -> Calibration:
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(d) - known - {"schema_version"}
        if unknown:
            raise ValueError(f"unknown calibration fields: {sorted(unknown)}")
        return cls(**{k: v for k, v in d.items() if k in known})


def load_calibration(path: str | Path | None = None) -> Calibration:
    path = DEFAULT_PATH if path is None else Path(path)
    return Calibration.from_dict(json.loads(Path(path).read_text()))


def save_calibration(calib: Calibration, path: str | Path) -> None:
    doc = {"schema_version": 1, **calib.to_dict()}
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")


def _fit_remanence(geom, topo, mat, target, settings, bracket=(0.6, 1.6)) -> float:
    def f(s):
        _, _, prof = analysis.rated_torque(geom, topo, mat, s, settings)
        return prof.torque.mean() - target

    lo, hi = bracket
    f_lo, f_hi = f(lo), f(hi)
    if f_lo * f_hi > 0:
        raise CalibrationError(f"remanence scale outside {bracket}: T_avg error "
                               f"{f_lo:.2f} / {f_hi:.2f} Nm at the ends")
    return scipy.optimize.brentq(f, lo, hi, xtol=1e-7, rtol=1e-10)


def _fit_stiffness(geom, topo, mat, calib, t_avg, ripple, target, settings) -> float:
    def f(log_c):
        c = replace(calib, stiffness_coefficient=math.exp(log_c))
        res = analysis.mechanical(geom, topo, mat, c, t_avg, ripple, settings)
        return math.log(res.displacement_x / target)

    return math.exp(scipy.optimize.brentq(f, math.log(1e-4), math.log(1e3), xtol=1e-12))


def calibrate(db: MaterialDB | None = None, geom: MotorGeometry | None = None,
              topo: RotorTopology | None = None,
              settings: analysis.AnalysisSettings = analysis.AnalysisSettings(),
              base: Calibration | None = None) -> Calibration:
    """Fit remanence scale, phase resistance, eccentricity, stiffness and mode factors."""
    db = load_material_db() if db is None else db
    geom = MotorGeometry() if geom is None else geom
    topo = v_type() if topo is None else topo
    base = Calibration() if base is None else base
    mat = db[ANCHOR_MATERIAL]
    el_ref = reference.ELECTRICAL[(ANCHOR_MATERIAL, ANCHOR_TOPOLOGY)]
    mech_ref = reference.MECHANICAL[(ANCHOR_MATERIAL, ANCHOR_TOPOLOGY)]

    scale = _fit_remanence(geom, topo, mat, el_ref["t_avg"], settings)
    calib = replace(base, remanence_scale=scale)

    el = analysis.electrical(geom, topo, mat, calib, settings, with_cogging=False)
    lb = el.losses
    eta = el_ref["efficiency_pct"] / 100.0
    i_rms = el.op.current_peak / math.sqrt(2)
    r_phase = (lb.p_out / eta - lb.p_out - lb.p_core - lb.p_magnet) / (3 * i_rms**2)
    if r_phase <= 0:
        raise CalibrationError("core and magnet losses alone exceed the efficiency target")
    calib = replace(calib, r_phase=r_phase)

    t_avg, ripple = el.metrics.t_avg, el.metrics.ripple_pct
    omega = 2 * math.pi * el.op.speed / 60.0
    probe = analysis.mechanical(geom, topo, mat, replace(calib, eccentricity=0.0),
                                t_avg, ripple, settings)
    area = probe.force / probe.stress_avg if probe.stress_avg else None
    if area is None:
        raise CalibrationError("ripple force is zero; stress cannot be calibrated")
    ecc = (mech_ref["stress_mpa"] * 1e6 * area - probe.force) / (probe.rotor_mass * omega**2)
    if ecc < 0:
        raise CalibrationError("ripple force alone exceeds the stress target")
    calib = replace(calib, eccentricity=ecc)

    c_k = _fit_stiffness(geom, topo, mat, calib, t_avg, ripple,
                         mech_ref["displacement_mm"] * 1e-3, settings)
    calib = replace(calib, stiffness_coefficient=c_k)

    factors = mechanics.fit_mode_factors(mat, reference.natural_frequency_table(ANCHOR_MATERIAL))
    targets = {
        "material": ANCHOR_MATERIAL, "topology": ANCHOR_TOPOLOGY,
        "t_avg": el_ref["t_avg"], "efficiency": eta,
        "stress_pa": mech_ref["stress_mpa"] * 1e6, "displacement_m": mech_ref["displacement_mm"] * 1e-3,
        "gamma_deg": el.op.gamma, "ripple_pct": ripple,
    }
    return replace(calib, mode_factors=factors, targets=targets)
