"""Soft-magnetic lamination data: B-H curves, over-flux extension, Steinmetz loss.

B-H curves are anhysteretic and single valued. Between samples they are
interpolated with a monotone piecewise cubic, so dB/dH is continuous for the
Newton solves in :mod:`ipm_softmag.magnetics`. Beyond the last measured
sample a curve can be extended with a two-exponential approach to the vacuum
slope (``extrapolate_overflux``).
"""

from __future__ import annotations

import dataclasses
import json
import math
import os
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Iterable, Mapping

import numpy as np
from scipy.interpolate import CubicHermiteSpline, PchipInterpolator

MU0 = 4e-7 * math.pi  # vacuum permeability [H/m]

SCHEMA_VERSION = 1
DB_ENV_VAR = "IPM_SOFTMAG_DB"
DEFAULT_DB_PATH = Path(__file__).parent / "data" / "materials.json"

# solver-side extension limit; beyond it B continues at exactly MU0 slope
SOLVER_H_LIMIT = 2.0e6


class MaterialError(ValueError):
    """Invalid material data (raised on construction and on DB load)."""


class DomainError(ValueError):
    """Field strength outside the curve's (possibly extended) domain."""


@dataclass(frozen=True)
class OverfluxTail:
    """Analytic over-flux region appended after the last measured sample.

    dB/dH = MU0 + sum_i a_i * exp(-(H - h0) / tau_i) for h0 <= H <= h_end.
    """

    h0: float
    b0: float
    amplitudes: tuple[float, ...]
    decay_lengths: tuple[float, ...]
    h_end: float

    def b(self, h: np.ndarray) -> np.ndarray:
        x = np.asarray(h, dtype=float) - self.h0
        out = self.b0 + MU0 * x
        for a, tau in zip(self.amplitudes, self.decay_lengths):
            out = out + a * tau * -np.expm1(-x / tau)
        return out

    def slope(self, h: np.ndarray) -> np.ndarray:
        x = np.asarray(h, dtype=float) - self.h0
        out = np.full_like(x, MU0)
        for a, tau in zip(self.amplitudes, self.decay_lengths):
            out = out + a * np.exp(-x / tau)
        return out

    def integral(self, h: np.ndarray) -> np.ndarray:
        """Integral of B dH from h0 to h."""
        x = np.asarray(h, dtype=float) - self.h0
        out = self.b0 * x + 0.5 * MU0 * x * x
        for a, tau in zip(self.amplitudes, self.decay_lengths):
            out = out + a * tau * (x + tau * np.expm1(-x / tau))
        return out

    @property
    def saturation_offset(self) -> float:
        """B_s_eff of the asymptote B = B_s_eff + MU0*H."""
        return self.b0 - MU0 * self.h0 + sum(
            a * t for a, t in zip(self.amplitudes, self.decay_lengths)
        )


@dataclass(frozen=True)
class BHCurve:
    """Monotone magnetization curve through (H [A/m], B [T]) samples."""

    h: tuple[float, ...]
    b: tuple[float, ...]
    tail: OverfluxTail | None = None

    def __post_init__(self) -> None:
        h = np.asarray(self.h, dtype=float)
        b = np.asarray(self.b, dtype=float)
        if h.ndim != 1 or h.shape != b.shape or h.size < 2:
            raise MaterialError("bh_samples: need at least two (H, B) pairs")
        if not (np.all(np.isfinite(h)) and np.all(np.isfinite(b))):
            raise MaterialError("bh_samples: non-finite value")
        if h[0] != 0.0 or b[0] != 0.0:
            raise MaterialError("bh_samples: first sample must be the origin (0, 0)")
        if np.any(np.diff(h) <= 0):
            raise MaterialError("bh_samples: H must be strictly increasing")
        if np.any(np.diff(b) <= 0):
            raise MaterialError("bh_samples: B must be strictly increasing (monotonicity)")
        slopes = np.diff(b) / np.diff(h)
        if np.any(slopes < MU0 * (1 - 1e-9)):
            raise MaterialError("bh_samples: incremental slope below vacuum permeability")

    @classmethod
    def from_samples(cls, samples: Iterable[Iterable[float]]) -> BHCurve:
        pairs = [tuple(map(float, s)) for s in samples]
        if any(len(p) != 2 for p in pairs):
            raise MaterialError("bh_samples: every sample must be an [H, B] pair")
        return cls(tuple(p[0] for p in pairs), tuple(p[1] for p in pairs))

    @property
    def h_last(self) -> float:
        return self.h[-1]

    @property
    def h_max(self) -> float:
        return self.tail.h_end if self.tail is not None else self.h[-1]

    @cached_property
    def _spline(self) -> CubicHermiteSpline:
        h = np.asarray(self.h)
        b = np.asarray(self.b)
        d = PchipInterpolator(h, b).derivative()(h)
        # end slope kept >= MU0 so the over-flux tail starts with non-negative excess
        last_secant = (b[-1] - b[-2]) / (h[-1] - h[-2])
        d[-1] = min(max(d[-1], MU0), 3.0 * last_secant)
        return CubicHermiteSpline(h, b, d)

    @cached_property
    def _spline_slope(self):
        return self._spline.derivative()

    @cached_property
    def _spline_integral(self):
        return self._spline.antiderivative()

    def end_slope(self) -> float:
        return float(self._spline_slope(self.h[-1]))

    def __call__(self, h) -> np.ndarray:
        return b_at(self, h)

    def dense_samples(self, n_tail: int = 40) -> list[tuple[float, float]]:
        """Samples plus points on the analytic tail, for plotting/export."""
        pts = list(zip(self.h, self.b))
        if self.tail is not None:
            hs = np.geomspace(self.h[-1], self.tail.h_end, n_tail + 1)[1:]
            pts += list(zip(hs.tolist(), self.tail.b(hs).tolist()))
        return pts


def b_at(curve: BHCurve, h) -> np.ndarray | float:
    """Flux density [T] at field strength ``h`` [A/m] (scalar or array)."""
    arr = np.asarray(h, dtype=float)
    if np.any(arr < 0) or not np.all(np.isfinite(arr)):
        raise ValueError("b_at: h must be finite and >= 0")
    if np.any(arr > curve.h_max):
        raise DomainError(
            f"h={arr.max():g} A/m beyond curve domain {curve.h_max:g} A/m; "
            "call extrapolate_overflux first"
        )
    out = np.asarray(curve._spline(np.minimum(arr, curve.h_last)), dtype=float)
    if curve.tail is not None:
        beyond = arr > curve.h_last
        if np.any(beyond):
            out = np.where(beyond, curve.tail.b(np.maximum(arr, curve.h_last)), out)
    # exact pass-through at sample abscissae
    idx = np.searchsorted(curve.h, arr)
    hit = (idx < len(curve.h)) & (np.asarray(curve.h)[np.minimum(idx, len(curve.h) - 1)] == arr)
    if np.any(hit):
        out = np.where(hit, np.asarray(curve.b)[np.minimum(idx, len(curve.b) - 1)], out)
    return float(out) if out.ndim == 0 else out


def slope_at(curve: BHCurve, h) -> np.ndarray | float:
    """Differential permeability dB/dH at ``h``."""
    arr = np.asarray(h, dtype=float)
    if np.any(arr > curve.h_max) or np.any(arr < 0):
        raise DomainError(f"h outside [0, {curve.h_max:g}]")
    out = np.asarray(curve._spline_slope(np.minimum(arr, curve.h_last)), dtype=float)
    if curve.tail is not None:
        out = np.where(arr > curve.h_last, curve.tail.slope(np.maximum(arr, curve.h_last)), out)
    return float(out) if out.ndim == 0 else out


def _decay_length(a: float, tau: float, h_check: float, x_check: float) -> float:
    # keep a*exp(-x/tau) below 1e-3*MU0 at x_check so the asymptote is reached
    if a <= 1e-3 * MU0:
        return tau
    return min(tau, x_check / math.log(a / (1e-3 * MU0)))


def extrapolate_overflux(curve: BHCurve, h_target: float) -> BHCurve:
    """Extend ``curve`` into the over-fluxed region up to ``h_target``.

    The excess slope dB/dH - MU0 decays as a sum of two exponentials: a slow
    term whose decay length comes from the last three samples, and a fast term
    that absorbs the mismatch with the interpolant's end slope so the junction
    is C1. Returns the input unchanged when ``h_target`` is inside the domain.
    """
    if h_target <= curve.h_max:
        return curve
    h = np.asarray(curve.h)
    b = np.asarray(curve.b)
    h_last = h[-1]
    if len(h) >= 3:
        s = np.diff(b[-3:]) / np.diff(h[-3:]) - MU0
        mids = 0.5 * (h[-3:-1] + h[-2:])
        if s[0] > s[1] > 0:
            tau_slow = (mids[1] - mids[0]) / math.log(s[0] / s[1])
            a_slow = s[1] * math.exp(-(h_last - mids[1]) / tau_slow)
        else:
            tau_slow = h_last
            a_slow = max(s[1], 0.0)
        tau_fast = min(tau_slow, 0.5 * (h[-1] - h[-2]))
    else:
        tau_slow = tau_fast = h_last
        a_slow = 0.0
    excess = curve.end_slope() - MU0
    a_fast = excess - a_slow
    if a_fast < 0:
        a_slow, a_fast = excess, 0.0
    x_check = 9.0 * h_last
    tau_slow = _decay_length(a_slow, tau_slow, h_last, x_check)
    tau_fast = _decay_length(a_fast, tau_fast, h_last, x_check)
    tail = OverfluxTail(
        h0=float(h_last),
        b0=float(b[-1]),
        amplitudes=(float(a_slow), float(a_fast)),
        decay_lengths=(float(tau_slow), float(tau_fast)),
        h_end=float(h_target),
    )
    return BHCurve(curve.h, curve.b, tail)


class SteelCurve:
    """Odd-symmetric, unbounded B(H) used inside the magnetic solver.

    Wraps an extended :class:`BHCurve`; past its domain B grows at MU0.
    """

    def __init__(self, curve: BHCurve, h_limit: float = SOLVER_H_LIMIT):
        self.curve = extrapolate_overflux(curve, max(h_limit, curve.h_max))
        self.h_end = self.curve.h_max
        self.b_end = float(b_at(self.curve, self.h_end))
        self.w_end = float(self._integral_pos(np.array([self.h_end]))[0])

    def _integral_pos(self, ha: np.ndarray) -> np.ndarray:
        c = self.curve
        inner = np.asarray(c._spline_integral(np.minimum(ha, c.h_last)), dtype=float)
        inner = inner - float(c._spline_integral(0.0))
        if c.tail is not None:
            inner = inner + np.where(
                ha > c.h_last, c.tail.integral(np.clip(ha, c.h_last, c.h_max)), 0.0
            )
        return inner

    def evaluate(self, h: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Return (B, dB/dH) for field strengths ``h`` of any sign."""
        c = self.curve
        ha = np.abs(h)
        hs = np.minimum(ha, c.h_last)
        b = c._spline(hs)
        mu = c._spline_slope(hs)
        in_tail = ha > c.h_last
        if np.any(in_tail):
            ht = np.clip(ha, c.h_last, self.h_end)
            b = np.where(in_tail, c.tail.b(ht), b)
            mu = np.where(in_tail, c.tail.slope(ht), mu)
        over = ha > self.h_end
        if np.any(over):
            b = np.where(over, self.b_end + MU0 * (ha - self.h_end), b)
            mu = np.where(over, MU0, mu)
        return np.sign(h) * b, mu

    def coenergy_density(self, h: np.ndarray) -> np.ndarray:
        """Integral of B dH from 0 to |h| [J/m^3]."""
        ha = np.abs(np.asarray(h, dtype=float))
        w = self._integral_pos(np.minimum(ha, self.h_end))
        over = ha > self.h_end
        if np.any(over):
            x = ha - self.h_end
            w = np.where(over, self.w_end + self.b_end * x + 0.5 * MU0 * x * x, w)
        return w

    def secant_permeability(self, h: float = 300.0) -> float:
        return float(b_at(self.curve, h)) / h


@dataclass(frozen=True)
class LossCoefficients:
    """Two-term Steinmetz coefficients (per kg)."""

    k_h: float
    beta: float
    k_e: float

    def __post_init__(self) -> None:
        if self.k_h < 0 or self.k_e < 0:
            raise MaterialError("loss coefficients must be >= 0")
        if not 1.5 <= self.beta <= 2.5:
            raise MaterialError(f"beta={self.beta} outside [1.5, 2.5]")


@dataclass(frozen=True)
class SoftMagneticMaterial:
    name: str
    bh: BHCurve
    loss: LossCoefficients
    young_modulus: float  # Pa
    density: float  # kg/m^3
    yield_stress: float  # Pa
    lamination_thickness: float  # m
    cost_tier: int

    def __post_init__(self) -> None:
        for fname in ("young_modulus", "density", "yield_stress", "lamination_thickness"):
            value = getattr(self, fname)
            if not (value > 0 and math.isfinite(value)):
                raise MaterialError(f"{self.name}: {fname} must be > 0, got {value!r}")
        if self.cost_tier not in (1, 2, 3, 4):
            raise MaterialError(f"{self.name}: cost_tier must be in 1..4")

    @cached_property
    def steel(self) -> SteelCurve:
        return SteelCurve(self.bh)

    def with_(self, **changes) -> SoftMagneticMaterial:
        return dataclasses.replace(self, **changes)


def core_loss_density(mat: SoftMagneticMaterial, b_peak, f) -> np.ndarray | float:
    """Core loss [W/kg]: k_h*f*B^beta + k_e*f^2*B^2."""
    b_peak = np.asarray(b_peak, dtype=float)
    f = np.asarray(f, dtype=float)
    c = mat.loss
    p = c.k_h * f * np.power(b_peak, c.beta) + c.k_e * f * f * b_peak * b_peak
    return float(p) if p.ndim == 0 else p


# -- database -----------------------------------------------------------------

_FIELDS = ("name", "bh_samples", "k_h", "beta", "k_e", "E_pa", "rho_kg_m3",
           "yield_pa", "thickness_m", "cost_tier")


def material_from_record(rec: Mapping) -> SoftMagneticMaterial:
    name = rec.get("name", "<unnamed>")
    for key in _FIELDS:
        if key not in rec:
            raise MaterialError(f"material {name!r}: missing field {key!r}")
    try:
        bh = BHCurve.from_samples(rec["bh_samples"])
    except MaterialError as exc:
        raise MaterialError(f"material {name!r}: field 'bh_samples': {exc}") from None
    try:
        return SoftMagneticMaterial(
            name=str(name),
            bh=bh,
            loss=LossCoefficients(float(rec["k_h"]), float(rec["beta"]), float(rec["k_e"])),
            young_modulus=float(rec["E_pa"]),
            density=float(rec["rho_kg_m3"]),
            yield_stress=float(rec["yield_pa"]),
            lamination_thickness=float(rec["thickness_m"]),
            cost_tier=int(rec["cost_tier"]),
        )
    except MaterialError as exc:
        msg = str(exc)
        if not msg.startswith(str(name)):
            msg = f"material {name!r}: {msg}"
        raise MaterialError(msg) from None


def material_to_record(mat: SoftMagneticMaterial) -> dict:
    return {
        "name": mat.name,
        "bh_samples": [[h, b] for h, b in zip(mat.bh.h, mat.bh.b)],
        "k_h": mat.loss.k_h,
        "beta": mat.loss.beta,
        "k_e": mat.loss.k_e,
        "E_pa": mat.young_modulus,
        "rho_kg_m3": mat.density,
        "yield_pa": mat.yield_stress,
        "thickness_m": mat.lamination_thickness,
        "cost_tier": mat.cost_tier,
    }


@dataclass
class MaterialDB:
    """Registry keyed by name, in file order. ``errors`` holds records that
    failed validation when loaded with ``strict=False``."""

    materials: dict[str, SoftMagneticMaterial] = field(default_factory=dict)
    errors: dict[str, str] = field(default_factory=dict)

    def __getitem__(self, name: str) -> SoftMagneticMaterial:
        try:
            return self.materials[name]
        except KeyError:
            if name in self.errors:
                raise MaterialError(self.errors[name]) from None
            raise KeyError(f"unknown material {name!r}") from None

    def __contains__(self, name: str) -> bool:
        return name in self.materials or name in self.errors

    def __len__(self) -> int:
        return len(self.materials)

    def __iter__(self):
        return iter(self.materials)

    def names(self) -> list[str]:
        """All names in file order, including invalid records."""
        return list(self._order)

    _order: list[str] = field(default_factory=list, repr=False)


def default_db_path() -> Path:
    return Path(os.environ.get(DB_ENV_VAR, DEFAULT_DB_PATH))


def load_material_db(source: str | os.PathLike | None = None, strict: bool = True) -> MaterialDB:
    """Load a material database file (or a directory of one-material files).

    An empty file yields an empty registry. With ``strict=False``, invalid
    material records are collected in ``db.errors`` instead of raising.
    """
    path = Path(source) if source is not None else default_db_path()
    records: list[Mapping] = []
    if path.is_dir():
        for p in sorted(path.glob("*.json")):
            records.extend(_read_records(p))
    else:
        records = _read_records(path)
    db = MaterialDB()
    for rec in records:
        name = str(rec.get("name", "<unnamed>"))
        try:
            mat = material_from_record(rec)
        except MaterialError as exc:
            if strict:
                raise
            db.errors[name] = str(exc)
        else:
            if name in db.materials:
                raise MaterialError(f"material {name!r}: duplicate entry")
            db.materials[name] = mat
        db._order.append(name)
    return db


def _read_records(path: Path) -> list[Mapping]:
    text = path.read_text()
    if not text.strip():
        return []
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise MaterialError(f"{path}: not valid JSON ({exc})") from None
    version = doc.get("schema_version")
    if version != SCHEMA_VERSION:
        raise MaterialError(f"{path}: unknown schema_version {version!r} (expected {SCHEMA_VERSION})")
    if "materials" in doc:
        return list(doc["materials"])
    return [doc]


def save_material_db(materials: Iterable[SoftMagneticMaterial], path: str | os.PathLike) -> None:
    doc = {"schema_version": SCHEMA_VERSION,
           "materials": [material_to_record(m) for m in materials]}
    Path(path).write_text(json.dumps(doc, indent=1) + "\n")


def export_curve(curve: BHCurve, path: str | os.PathLike) -> None:
    """Two-column (H, B) text dump for plotting."""
    lines = ["# H_A_per_m B_T"]
    lines += [f"{h!r} {b!r}" for h, b in curve.dense_samples()]
    Path(path).write_text("\n".join(lines) + "\n")
