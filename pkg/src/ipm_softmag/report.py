"""Material x topology sweeps, multi-criteria ranking and artifact emission."""

from __future__ import annotations

import csv
import dataclasses
import hashlib
import io
import json
import math
import re
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from . import analysis
from .calibration import Calibration, load_calibration
from .geometry import GeometryError, MachineDefinition, load_machine, machine_from_dict
from .magnetics import export_profile
from .materials import MaterialError, export_curve, load_material_db
from .mechanics import MODES, export_natural_frequencies

# (criterion, row attribute, +1 = higher is better)
CRITERIA = (
    ("t_avg", "t_avg", +1),
    ("ripple", "ripple_pct", -1),
    ("efficiency", "efficiency", +1),
    ("stress", "stress_avg", -1),
    ("displacement", "displacement", -1),
    ("mode2_frequency", "mode2_frequency", +1),
    ("cost", "cost_tier", -1),
)
CRITERION_NAMES = tuple(c[0] for c in CRITERIA)
TOPOLOGY_ORDER = ("v", "delta")
FORMATS = ("delimited", "structured")

SUMMARY_COLUMNS = (
    "material", "topology", "status",
    "t_avg_nm", "t_max_nm", "ripple_pct", "cogging_pp_nm", "gamma_deg",
    "efficiency_pct", "p_out_w", "p_core_w", "p_copper_w", "p_magnet_w",
    "rotor_mass_kg", "stress_avg_mpa", "displacement_mm",
    *(f"f{m}_hz" for m in MODES),
    "cost_tier", "score", "rank", "error",
)


class ConfigError(ValueError):
    """Invalid sweep configuration, machine definition or material database."""


class EmitError(OSError):
    pass


@dataclass(frozen=True)
class SweepConfig:
    materials: tuple[str, ...] | None = None  # None: every material in the DB
    topologies: tuple[str, ...] = TOPOLOGY_ORDER
    machine: MachineDefinition = field(default_factory=MachineDefinition)
    db_path: str | None = None
    calibration: Calibration | None = None  # None: shipped calibration
    current: float | None = None
    speed: float | None = None
    eccentricity: float | None = None  # overrides the calibrated value
    harmonics: int = 5
    n_steps: int = 90
    cogging_steps: int = 30
    weights: dict | None = None
    out_dir: str | None = None
    formats: tuple[str, ...] = FORMATS
    jobs: int = 1

    def __post_init__(self) -> None:
        if self.materials is not None:
            object.__setattr__(self, "materials", tuple(self.materials))
            if not self.materials:
                raise ConfigError("material list is empty")
        topos = tuple(str(t).lower() for t in self.topologies)
        if not topos:
            raise ConfigError("topology list is empty")
        bad = [t for t in topos if t not in self.machine.topologies]
        if bad:
            raise ConfigError(f"unknown topologies {bad}")
        object.__setattr__(self, "topologies", topos)
        fmts = tuple(self.formats)
        if any(f not in FORMATS for f in fmts):
            raise ConfigError(f"formats must be among {FORMATS}, got {fmts}")
        object.__setattr__(self, "formats", fmts)
        if self.jobs < 1:
            raise ConfigError("jobs must be >= 1")
        if self.weights is not None:
            _check_weights(self.weights)
        try:
            self.settings()
        except ValueError as exc:
            raise ConfigError(str(exc)) from None

    def settings(self) -> analysis.AnalysisSettings:
        return analysis.AnalysisSettings(self.n_steps, self.cogging_steps, self.current,
                                         self.speed, self.harmonics)

    @classmethod
    def from_dict(cls, doc: dict, base_dir: Path | None = None) -> SweepConfig:
        """Build from a JSON-style mapping; relative paths resolve against ``base_dir``."""
        doc = dict(doc)
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(doc) - known - {"operating_point", "mechanics", "schema_version"}
        if unknown:
            raise ConfigError(f"unknown config fields: {sorted(unknown)}")

        def resolve(p):
            p = Path(p)
            return p if p.is_absolute() or base_dir is None else base_dir / p

        try:
            machine = doc.pop("machine", None)
            if isinstance(machine, str):
                doc["machine"] = load_machine(resolve(machine))
            elif isinstance(machine, dict):
                doc["machine"] = machine_from_dict(machine)
            op = doc.pop("operating_point", None) or {}
            doc.setdefault("current", op.get("current_peak"))
            doc.setdefault("speed", op.get("speed"))
            mech = doc.pop("mechanics", None) or {}
            doc.setdefault("eccentricity", mech.get("eccentricity"))
            if "harmonics" in mech:
                doc.setdefault("harmonics", mech["harmonics"])
            calib = doc.pop("calibration", None)
            if calib is not None:
                doc["calibration"] = (load_calibration(resolve(calib)) if isinstance(calib, str)
                                      else Calibration.from_dict(calib))
            if doc.get("db_path"):
                doc["db_path"] = str(resolve(doc["db_path"]))
            for key in ("materials", "topologies", "formats"):
                if key in doc and doc[key] is not None:
                    doc[key] = tuple(doc[key])
            return cls(**doc)
        except ConfigError:
            raise
        except (GeometryError, OSError, TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from None

    @classmethod
    def from_file(cls, path: str | Path) -> SweepConfig:
        path = Path(path)
        try:
            doc = json.loads(path.read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        if not isinstance(doc, dict):
            raise ConfigError("config must be a JSON object")
        return cls.from_dict(doc, path.parent)


@dataclass(frozen=True)
class ResultRow:
    material: str
    topology: str
    status: str = "ok"  # "ok" or "failed"
    error: str | None = None
    t_avg: float | None = None
    t_max: float | None = None
    ripple_pct: float | None = None
    cogging_pp: float | None = None
    gamma_deg: float | None = None
    l_d: float | None = None
    l_q: float | None = None
    psi_m: float | None = None
    efficiency: float | None = None
    p_core: float | None = None
    p_copper: float | None = None
    p_magnet: float | None = None
    p_out: float | None = None
    core_regions: dict = field(default_factory=dict)
    rotor_mass: float | None = None
    force: float | None = None
    stress_avg: float | None = None
    strain: float | None = None
    within_yield: bool | None = None
    displacement: float | None = None  # m amplitude
    natural_frequencies: dict = field(default_factory=dict)
    resonance_flags: dict = field(default_factory=dict)
    cost_tier: int | None = None
    iterations_max: int | None = None
    residual_max: float | None = None
    scores: dict = field(default_factory=dict)
    score: float | None = None
    rank: int | None = None
    profile: tuple = field(default=(), repr=False)  # ((angles...), (torque...))
    cogging: tuple = field(default=(), repr=False)

    @property
    def ok(self) -> bool:
        return self.status == "ok"

    @property
    def p_in(self) -> float | None:
        if not self.ok:
            return None
        return self.p_out + self.p_core + self.p_copper + self.p_magnet

    @property
    def mode2_frequency(self) -> float | None:
        return self.natural_frequencies.get(2)

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        del d["profile"], d["cogging"]
        d["natural_frequencies"] = {str(k): v for k, v in sorted(self.natural_frequencies.items())}
        d["resonance_flags"] = {str(k): v for k, v in sorted(self.resonance_flags.items())}
        d["p_in"] = self.p_in
        return d


# -- one cell ------------------------------------------------------------------

def analyze(geom, topo, mat, calib: Calibration,
            settings: analysis.AnalysisSettings = analysis.AnalysisSettings()) -> ResultRow:
    """Full electrical and mechanical evaluation of one (material, topology) cell."""
    el = analysis.electrical(geom, topo, mat, calib, settings)
    mech = analysis.mechanical(geom, topo, mat, calib, el.metrics.t_avg, el.metrics.ripple_pct,
                               settings)
    lb = el.losses
    return ResultRow(
        material=mat.name, topology=topo.kind.value,
        t_avg=el.metrics.t_avg, t_max=el.metrics.t_max, ripple_pct=el.metrics.ripple_pct,
        cogging_pp=el.cogging_pp, gamma_deg=el.op.gamma,
        l_d=el.dq.l_d, l_q=el.dq.l_q, psi_m=el.dq.psi_m,
        efficiency=el.efficiency, p_core=lb.p_core, p_copper=lb.p_copper,
        p_magnet=lb.p_magnet, p_out=lb.p_out, core_regions=dict(lb.core_regions),
        rotor_mass=mech.rotor_mass, force=mech.force, stress_avg=mech.stress_avg,
        strain=mech.strain, within_yield=mech.within_yield,
        displacement=max(mech.displacement_x, mech.displacement_y),
        natural_frequencies=dict(mech.natural_frequencies),
        resonance_flags={m: mm.flagged for m, mm in mech.margins.items()},
        cost_tier=mat.cost_tier, iterations_max=el.iterations_max, residual_max=el.residual_max,
        profile=(tuple(el.profile.angles.tolist()), tuple(el.profile.torque.tolist())),
        cogging=(tuple(el.cogging.angles.tolist()), tuple(el.cogging.torque.tolist())),
    )


def _run_cell(task) -> ResultRow:
    name, topo_key, geom, topo, mat, load_error, calib, settings = task
    if load_error is not None:
        return ResultRow(name, topo_key, status="failed", error=load_error)
    try:
        return analyze(geom, topo, mat, calib, settings)
    except Exception as exc:  # per-row isolation: one bad cell must not abort the sweep
        return ResultRow(name, topo_key, status="failed", error=f"{type(exc).__name__}: {exc}")


def _tasks(cfg: SweepConfig):
    try:
        db = load_material_db(cfg.db_path, strict=False)
    except (MaterialError, OSError) as exc:
        raise ConfigError(f"material database: {exc}") from None
    try:
        calib = cfg.calibration if cfg.calibration is not None else load_calibration()
    except (OSError, ValueError, TypeError) as exc:
        raise ConfigError(f"calibration: {exc}") from None
    if cfg.eccentricity is not None:
        calib = dataclasses.replace(calib, eccentricity=cfg.eccentricity)
    names = list(db.names()) if cfg.materials is None else list(cfg.materials)
    missing = [n for n in names if n not in db]
    if missing:
        raise ConfigError(f"materials not in database: {missing}")
    if not names:
        raise ConfigError("material database is empty")
    order = {n: i for i, n in enumerate(db.names())}
    names.sort(key=order.__getitem__)
    topos = [t for t in TOPOLOGY_ORDER if t in cfg.topologies]
    topos += [t for t in cfg.topologies if t not in topos]
    geom = cfg.machine.geometry
    settings = cfg.settings()
    tasks = []
    for name in names:
        mat = db.materials.get(name)
        err = None if mat is not None else f"MaterialError: {db.errors[name]}"
        for t in topos:
            tasks.append((name, t, geom, cfg.machine.topologies[t], mat, err, calib, settings))
    return tasks


def run_sweep(cfg: SweepConfig) -> list[ResultRow]:
    """Analyze every (material, topology) pair; rows come back in DB x topology order."""
    tasks = _tasks(cfg)
    if cfg.jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=min(cfg.jobs, len(tasks))) as pool:
            rows = list(pool.map(_run_cell, tasks))
    else:
        rows = [_run_cell(t) for t in tasks]
    scored = {(r.material, r.topology): r for r in rank(rows, cfg.weights)}
    return [scored[(r.material, r.topology)] for r in rows]


# -- ranking -------------------------------------------------------------------

def _check_weights(weights: dict) -> dict:
    unknown = set(weights) - set(CRITERION_NAMES)
    if unknown:
        raise ConfigError(f"unknown ranking criteria {sorted(unknown)}; "
                          f"expected among {list(CRITERION_NAMES)}")
    if any(not (w >= 0) for w in weights.values()):
        raise ConfigError("criterion weights must be >= 0")
    if not any(w > 0 for w in weights.values()):
        raise ConfigError("at least one criterion weight must be > 0")
    return weights


def rank(rows: list[ResultRow], weights: dict | None = None) -> list[ResultRow]:
    """Min-max normalise each criterion to [0, 1] (1 = best) and order by weighted score.

    Ties are broken by material name, then topology. Failed rows keep no
    score and follow the ranked rows in their original order.
    """
    if not rows:
        raise ValueError("rank needs at least one row")
    weights = _check_weights(dict(weights)) if weights else dict.fromkeys(CRITERION_NAMES, 1.0)
    ok = [r for r in rows if r.ok]
    if not ok:
        return list(rows)
    norm ={r_id: {} for r_id in range(len(ok))}
    for name, attr, sense in CRITERIA:
        vals = [getattr(r, attr) for r in ok]
        if any(v is None for v in vals):
            for i in norm:
                norm[i][name] = 1.0
            continue
        lo, hi = min(vals), max(vals)
        span = hi - lo
        for i, v in enumerate(vals):
            if span == 0:
                norm[i][name] = 1.0
            elif sense > 0:
                norm[i][name] = (v - lo) / span
            else:
                norm[i][name] = (hi - v) / span
    total = sum(weights.get(n, 0.0) for n in CRITERION_NAMES)
    scored = []
    for i, r in enumerate(ok):
        s = sum(weights.get(n, 0.0) * norm[i][n] for n in CRITERION_NAMES) / total
        scored.append(dataclasses.replace(r, scores=norm[i], score=s))
    scored.sort(key=lambda r: (-r.score, r.material, r.topology))
    out = [dataclasses.replace(r, rank=k + 1) for k, r in enumerate(scored)]
    return out + [r for r in rows if not r.ok]


# -- emission ------------------------------------------------------------------

def _slug(name: str) -> str:
    return re.sub(r"[^A-Za-z0-9._-]+", "_", name).strip("_")


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return str(v).lower()
    if isinstance(v, float):
        return "" if math.isnan(v) else format(v, ".10g")
    return str(v)


def _summary_record(r: ResultRow) -> list[str]:
    def scaled(v, k):
        return None if v is None else v * k

    rec = [r.material, r.topology, r.status,
           r.t_avg, r.t_max, r.ripple_pct, r.cogging_pp, r.gamma_deg,
           scaled(r.efficiency, 100.0), r.p_out, r.p_core, r.p_copper, r.p_magnet,
           r.rotor_mass, scaled(r.stress_avg, 1e-6), scaled(r.displacement, 1e3),
           *(r.natural_frequencies.get(m) for m in MODES),
           r.cost_tier, r.score, r.rank, r.error]
    return [_fmt(v) for v in rec]


def summary_table(rows: list[ResultRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SUMMARY_COLUMNS)
    for r in rows:
        w.writerow(_summary_record(r))
    return buf.getvalue()


def _write(path: Path, text: str) -> None:
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text)
    except OSError as exc:
        raise EmitError(f"cannot write {path}: {exc.strerror or exc}") from None


def emit(rows: list[ResultRow], formats, out_dir: str | Path, db_path: str | None = None) -> list[Path]:
    """Write tables, per-cell plot data and a checksummed index; returns written paths."""
    out = Path(out_dir)
    if isinstance(formats, str):
        formats = FORMATS if formats == "both" else (formats,)
    if any(f not in FORMATS for f in formats):
        raise ValueError(f"formats must be among {FORMATS}")
    written: list[Path] = []

    def put(rel: str, text: str) -> None:
        p = out / rel
        _write(p, text)
        written.append(p)

    if "delimited" in formats:
        put("summary.csv", summary_table(rows))
    if "structured" in formats:
        doc = {"schema_version": 1, "columns": list(SUMMARY_COLUMNS),
               "rows": [r.to_dict() for r in rows]}
        put("results.json", json.dumps(doc, indent=1, sort_keys=True, allow_nan=False) + "\n")

    for r in rows:
        if r.ok and r.profile:
            p = out / "profiles" / f"{_slug(r.material)}__{r.topology}.txt"
            _safe(export_profile_rows, r.profile, p)
            written.append(p)
            if r.cogging:
                p = out / "cogging" / f"{_slug(r.material)}__{r.topology}.txt"
                _safe(export_profile_rows, r.cogging, p)
                written.append(p)

    materials = []
    for r in rows:
        if r.ok and r.material not in materials:
            materials.append(r.material)
    if materials:
        db = load_material_db(db_path, strict=False)
        for name in materials:
            if name in db.materials:
                p = out / "bh" / f"{_slug(name)}.txt"
                _safe(export_curve, db.materials[name].bh, p)
                written.append(p)
        table = {}
        for name in materials:
            fn = next((r.natural_frequencies for r in rows
                       if r.ok and r.material == name and r.natural_frequencies), None)
            if fn:
                table[name] = fn
        if table:
            p = out / "natural_frequencies.csv"
            _safe(export_natural_frequencies, table, p)
            written.append(p)

    index = []
    for p in sorted(written, key=lambda q: q.relative_to(out).as_posix()):
        data = p.read_bytes()
        index.append({"path": p.relative_to(out).as_posix(),
                      "sha256": hashlib.sha256(data).hexdigest(), "bytes": len(data)})
    put("index.json", json.dumps({"artifacts": index}, indent=1, sort_keys=True) + "\n")
    return written


def export_profile_rows(profile: tuple, path: Path) -> None:
    from .magnetics import TorqueProfile
    export_profile(TorqueProfile(profile[0], profile[1]), path)


def _safe(fn, obj, path: Path) -> None:
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        fn(obj, path)
    except OSError as exc:
        raise EmitError(f"cannot write {path}: {exc.strerror or exc}") from None
