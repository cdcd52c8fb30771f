"""Machine dimensions, rotor topologies and derived geometric quantities.

All user-facing lengths are in millimetres (as in the design data table);
functions that return SI quantities say so.
"""

from __future__ import annotations

import dataclasses
import enum
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

MM = 1e-3


class GeometryError(ValueError):
    pass


@dataclass(frozen=True)
class MagnetGrade:
    name: str
    remanence: float  # T at 20 C
    relative_permeability: float
    density: float  # kg/m^3

    @property
    def coercivity(self) -> float:
        """Linear-recoil coercive field Br/(mu0*mu_r) [A/m]."""
        return self.remanence / (4e-7 * math.pi * self.relative_permeability)


MAGNET_GRADES = {
    "N30UH": MagnetGrade("N30UH", remanence=1.10, relative_permeability=1.05, density=7500.0),
}


@dataclass(frozen=True)
class MotorGeometry:
    phases: int = 3
    poles: int = 8
    slots: int = 48
    rated_speed: float = 3000.0  # rpm
    line_peak_current: float = 300.0  # A
    winding_layers: int = 1
    parallel_paths: int = 2
    stator_outer_diameter: float = 193.42
    stator_inner_diameter: float = 132.4
    slot_depth: float = 23.2
    tooth_width: float = 3.32
    stack_length: float = 160.0
    air_gap: float = 0.48
    magnet_width: float = 3.0
    magnet_grade: str = "N30UH"
    skew_fraction: float = 0.05
    # not in the design table; chosen defaults
    slot_opening: float = 2.0
    tooth_tip_height: float = 1.0
    conductors_per_slot: int = 4
    shaft_diameter: float = 40.0
    shaft_density: float = 7850.0

    def __post_init__(self) -> None:
        if self.poles <= 0 or self.poles % 2:
            raise GeometryError(f"poles must be positive and even, got {self.poles}")
        if self.slots <= 0 or self.phases <= 0:
            raise GeometryError("slots and phases must be positive")
        for name in ("stator_outer_diameter", "stator_inner_diameter", "slot_depth",
                     "tooth_width", "stack_length", "air_gap", "magnet_width",
                     "slot_opening", "tooth_tip_height", "shaft_diameter"):
            if not getattr(self, name) > 0:
                raise GeometryError(f"{name} must be > 0")
        if self.air_gap >= self.stator_inner_diameter / 10:
            raise GeometryError("air_gap must be < stator_inner_diameter/10")
        if self.yoke_thickness <= 0:
            raise GeometryError("slot_depth leaves no stator yoke")
        if not 0 <= self.skew_fraction < 1:
            raise GeometryError("skew_fraction must be in [0, 1)")
        if self.magnet_grade not in MAGNET_GRADES:
            raise GeometryError(f"unknown magnet grade {self.magnet_grade!r}")

    @property
    def pole_pairs(self) -> int:
        return self.poles // 2

    @property
    def rotor_outer_radius(self) -> float:
        return self.stator_inner_diameter / 2 - self.air_gap

    @property
    def gap_radius(self) -> float:
        return self.stator_inner_diameter / 2 - self.air_gap / 2

    @property
    def yoke_thickness(self) -> float:
        return (self.stator_outer_diameter - self.stator_inner_diameter) / 2 - self.slot_depth

    @property
    def slot_pitch_deg(self) -> float:
        return 360.0 / self.slots

    @property
    def magnet(self) -> MagnetGrade:
        return MAGNET_GRADES[self.magnet_grade]

    @property
    def electrical_frequency(self) -> float:
        return self.pole_pairs * self.rated_speed / 60.0

    @property
    def slot_area(self) -> float:
        """Area of one slot [mm^2] for parallel-sided teeth."""
        r_in = self.stator_inner_diameter / 2
        r_out = r_in + self.slot_depth
        annulus = math.pi * (r_out**2 - r_in**2)
        return (annulus - self.slots * self.tooth_width * self.slot_depth) / self.slots

    def stator_volumes(self) -> dict[str, float]:
        """Tooth and yoke steel volumes [m^3]."""
        r_so = self.stator_outer_diameter / 2
        r_y = r_so - self.yoke_thickness
        yoke = math.pi * (r_so**2 - r_y**2) * self.stack_length
        teeth = self.slots * self.tooth_width * self.slot_depth * self.stack_length
        return {"tooth": teeth * MM**3, "yoke": yoke * MM**3}


class TopologyKind(str, enum.Enum):
    V = "v"
    DELTA = "delta"
    RING = "ring"  # magnet-free uniform rotor; symmetry fixture only


@dataclass(frozen=True)
class RotorTopology:
    """Magnet arrangement and rotor-internal dimensions (mm / mechanical degrees).

    ``magnet_lengths`` lists each magnet of one pole; for the Delta type the
    first two form the inner V layer and the last one the outer flat layer.
    """

    kind: TopologyKind
    magnet_layers: int
    v_angle: float
    rib_width: float
    magnet_center_radius: float
    magnet_lengths: tuple[float, ...]
    ribs_per_pole: int
    pole_arc: float
    barrier_arc: float
    side_arc: float = 0.0
    inner_barrier_arc: float = 0.0
    bridge_length: float = 3.0
    pocket_factor: float = 1.5
    hole_count: int = 8
    hole_diameter: float = 19.0

    def __post_init__(self) -> None:
        if self.rib_width <= 0:
            raise GeometryError("rib_width must be > 0")
        if self.kind is TopologyKind.V and self.magnet_layers != 1:
            raise GeometryError("V-type rotor has exactly one magnet layer")
        if self.kind is TopologyKind.DELTA and self.magnet_layers != 2:
            raise GeometryError("Delta-type rotor has exactly two magnet layers")

    @property
    def magnets_per_pole(self) -> int:
        return len(self.magnet_lengths)

    def q_arc(self, poles: int) -> float:
        used = self.pole_arc + 2 * (self.barrier_arc + self.side_arc + self.inner_barrier_arc)
        return 360.0 / poles - used

    def with_(self, **changes) -> RotorTopology:
        return dataclasses.replace(self, **changes)


def v_type(**overrides) -> RotorTopology:
    base = dict(kind=TopologyKind.V, magnet_layers=1, v_angle=120.0, rib_width=1.5,
                magnet_center_radius=52.0, magnet_lengths=(17.0, 17.0), ribs_per_pole=3,
                pole_arc=32.0, barrier_arc=2.0)
    base.update(overrides)
    return RotorTopology(**base)


def delta_type(**overrides) -> RotorTopology:
    base = dict(kind=TopologyKind.DELTA, magnet_layers=2, v_angle=120.0, rib_width=1.5,
                magnet_center_radius=50.0, magnet_lengths=(14.0, 14.0, 18.0), ribs_per_pole=4,
                pole_arc=20.0, barrier_arc=2.0, side_arc=3.0, inner_barrier_arc=3.0)
    base.update(overrides)
    return RotorTopology(**base)


def uniform_ring(**overrides) -> RotorTopology:
    base = dict(kind=TopologyKind.RING, magnet_layers=0, v_angle=0.0, rib_width=1.5,
                magnet_center_radius=50.0, magnet_lengths=(), ribs_per_pole=0,
                pole_arc=0.0, barrier_arc=0.0, hole_count=0)
    base.update(overrides)
    return RotorTopology(**base)


TOPOLOGIES = {"v": v_type, "delta": delta_type}


def topology(name: str | TopologyKind) -> RotorTopology:
    key = name.value if isinstance(name, TopologyKind) else str(name).lower()
    if key in ("v-type", "vtype"):
        key = "v"
    if key in ("delta-type", "deltatype"):
        key = "delta"
    try:
        return TOPOLOGIES[key]()
    except KeyError:
        raise GeometryError(f"unknown topology {name!r}") from None


# -- derived quantities -------------------------------------------------------

def cogging_period(geom: MotorGeometry) -> float:
    """Cogging period [mechanical degrees] = 360 / lcm(slots, poles)."""
    return 360.0 / math.lcm(geom.slots, geom.poles)


def skew_angle(geom: MotorGeometry) -> float:
    """Skew angle [mechanical rad] as a fraction of the slot pitch."""
    return geom.skew_fraction * 2 * math.pi / geom.slots


def skew_factor(geom: MotorGeometry, harmonic) -> float:
    """Attenuation sin(n*g/2)/(n*g/2) of mechanical order ``harmonic``."""
    import numpy as np

    n = np.asarray(harmonic, dtype=float)
    x = n * skew_angle(geom) / 2
    out = np.sinc(x / np.pi)
    return float(out) if out.ndim == 0 else out


def magnet_volume(geom: MotorGeometry, topo: RotorTopology) -> float:
    """Total magnet volume [m^3]."""
    area = sum(topo.magnet_lengths) * geom.magnet_width * geom.poles
    return area * geom.stack_length * MM**3


def lamination_volume(geom: MotorGeometry, topo: RotorTopology) -> float:
    """Rotor lamination volume [m^3] net of magnet pockets, holes and shaft bore."""
    r_o = geom.rotor_outer_radius
    r_s = geom.shaft_diameter / 2
    gross = math.pi * (r_o**2 - r_s**2)
    pockets = sum(topo.magnet_lengths) * geom.magnet_width * geom.poles * topo.pocket_factor
    holes = topo.hole_count * math.pi * topo.hole_diameter**2 / 4
    net = gross - pockets - holes
    if net <= 0:
        raise GeometryError(f"rotor lamination area {net:.1f} mm^2 is not positive")
    return net * geom.stack_length * MM**3


def shaft_volume(geom: MotorGeometry) -> float:
    return math.pi * (geom.shaft_diameter / 2) ** 2 * geom.stack_length * MM**3


def rotor_mass(geom: MotorGeometry, topo: RotorTopology, lamination_density: float,
               magnet_density: float | None = None, shaft_density: float | None = None) -> float:
    """Rotor mass [kg]: laminations + magnets + shaft within the stack."""
    if magnet_density is None:
        magnet_density = geom.magnet.density
    if shaft_density is None:
        shaft_density = geom.shaft_density
    if min(lamination_density, magnet_density, shaft_density) < 0:
        raise GeometryError("densities must be non-negative")
    return (lamination_volume(geom, topo) * lamination_density
            + magnet_volume(geom, topo) * magnet_density
            + shaft_volume(geom) * shaft_density)


def rib_section_area(topo: RotorTopology, geom: MotorGeometry) -> float:
    """Rib cross-section [m^2] carrying a radial rotor load.

    A rotating load is taken by the ribs of the pole piece it points at, so
    the section is that of one pole's ribs.
    """
    if topo.ribs_per_pole <= 0:
        raise GeometryError("topology has no load-bearing ribs")
    return topo.rib_width * geom.stack_length * topo.ribs_per_pole * MM**2


# -- machine definition file ---------------------------------------------------

@dataclass(frozen=True)
class MachineDefinition:
    geometry: MotorGeometry = field(default_factory=MotorGeometry)
    topologies: dict = field(default_factory=lambda: {"v": v_type(), "delta": delta_type()})


def machine_from_dict(doc: dict) -> MachineDefinition:
    """Build a machine definition from a mapping.

    Top-level keys mirror :class:`MotorGeometry` fields; an optional
    ``topology`` block maps ``v``/``delta`` to field overrides.
    """
    geom_fields = {f.name for f in dataclasses.fields(MotorGeometry)}
    unknown = set(doc) - geom_fields - {"topology", "operating_point", "schema_version"}
    if unknown:
        raise GeometryError(f"unknown machine fields: {sorted(unknown)}")
    try:
        geom = MotorGeometry(**{k: v for k, v in doc.items() if k in geom_fields})
    except TypeError as exc:
        raise GeometryError(str(exc)) from None
    topos = {"v": v_type(), "delta": delta_type()}
    topo_fields = {f.name for f in dataclasses.fields(RotorTopology)} - {"kind"}
    for key, overrides in (doc.get("topology") or {}).items():
        base = topology(key)
        bad = set(overrides) - topo_fields
        if bad:
            raise GeometryError(f"unknown topology fields for {key!r}: {sorted(bad)}")
        if "magnet_lengths" in overrides:
            overrides = dict(overrides, magnet_lengths=tuple(overrides["magnet_lengths"]))
        topos[base.kind.value] = base.with_(**overrides)
    return MachineDefinition(geom, topos)


def load_machine(path: str | Path | None) -> MachineDefinition:
    """Read a machine definition JSON file (see :func:`machine_from_dict`)."""
    if path is None:
        return MachineDefinition()
    try:
        doc = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise GeometryError(f"cannot read machine definition {path}: {exc}") from None
    if not isinstance(doc, dict):
        raise GeometryError("machine definition must be a JSON object")
    return machine_from_dict(doc)
