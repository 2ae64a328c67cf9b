"""Named scenario presets, sweep engine and CSV/JSON output.

A scenario configuration is a JSON document in laboratory units (MHz, kHz,
mm, cm^-3, mV/cm). Presets hold every default; a user document may only
override keys that exist in its preset.
"""
from __future__ import annotations

import copy
import csv
import hashlib
import io
import json
import math
import os
import tempfile
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .core import DephasingBudget
from .dephasing import CS_MASS, assemble_budget, collisional_rate, cs_density
from .errors import ConfigError, NoPeakError, SolverError, UnresolvedSplittingError
from .presets import CS_D1_DIPOLE, cs_four_level, cs_three_level, cs_three_photon
from .sensing import (
    RfTransition,
    at_splitting_to_field,
    field_to_at_splitting,
    field_to_rabi,
    rabi_to_field,
    slope_at_zero,
    weak_field_curve,
)
from .spectroscopy import (
    CellConditions,
    VelocityGrid,
    at_peaks_of,
    doppler_averaged_trace,
    fwhm,
    make_velocity_grid,
)

TWO_PI = 2 * math.pi
MHZ = TWO_PI * 1e6
KHZ = TWO_PI * 1e3
V_PER_M_PER_MV_CM = 0.1


# ---------------------------------------------------------------- presets

def _numerics(velocity_points=4001, detuning_points=401, detuning_span_MHz=10.0):
    return {
        "velocity_points": velocity_points,
        "velocity_span": 4.0,
        "detuning_points": detuning_points,
        "detuning_span_MHz": detuning_span_MHz,
        "doppler_free": False,
    }


def _conditions(coupling_diameter_mm=0.10, probe_diameter_mm=1.36):
    # density None: saturated vapor density at temperature_K
    return {
        "temperature_K": 294.0,
        "density_cm3": None,
        "length_cm": 4.0,
        "probe_diameter_mm": probe_diameter_mm,
        "coupling_diameter_mm": coupling_diameter_mm,
    }


def _budget(transit=None, collisional=None, laser=70.0, magnetic=50.0):
    # None: derived from the cell conditions
    return {
        "transit_kHz": transit,
        "collisional_kHz": collisional,
        "laser_kHz": laser,
        "magnetic_kHz": magnetic,
        "rydberg_rydberg_kHz": 0.0,
    }


def _ladder(probe, coupling):
    return {
        "probe_rabi_MHz": probe,
        "coupling_rabi_MHz": coupling,
        "probe_detuning_MHz": 0.0,
        "coupling_detuning_MHz": 0.0,
        "rf_detuning_MHz": 0.0,
    }


_RF = {"dipole_moment_ea0": 1745.0, "frequency_GHz": 5.047}
_WEAK_FIELDS = {"start": 0.0, "stop": 1.0, "points": 21}

PRESETS = {
    "fig2b_at": {
        "description": "Autler-Townes doublets of the 4-level ladder at mV/cm fields",
        "scheme": _ladder(1.8, 0.5),
        "budget": _budget(),
        "conditions": _conditions(),
        "numerics": _numerics(),
        "rf": dict(_RF),
        "fields_mV_cm": [1.0, 2.0, 3.0, 4.0, 5.0],
    },
    "fig3_power": {
        "description": "On-resonance transmission change vs weak RF field for several Rabi pairs",
        "scheme": _ladder(1.0, 3.3),
        "budget": _budget(transit=300.0, collisional=6.0),
        "conditions": _conditions(),
        "numerics": _numerics(),
        "rf": dict(_RF),
        "field_grid_mV_cm": dict(_WEAK_FIELDS),
        "series": [
            {"label": "black", "scheme": {"probe_rabi_MHz": 8.0, "coupling_rabi_MHz": 3.3}},
            {"label": "red", "scheme": {"probe_rabi_MHz": 10.0, "coupling_rabi_MHz": 3.3}},
            {"label": "green", "scheme": {"probe_rabi_MHz": 0.5, "coupling_rabi_MHz": 2.7}},
            {"label": "blue", "scheme": {"probe_rabi_MHz": 0.75, "coupling_rabi_MHz": 2.7}},
            {"label": "magenta", "scheme": {"probe_rabi_MHz": 1.0, "coupling_rabi_MHz": 2.7}},
        ],
    },
    "fig4a_fwhm_vs_density": {
        "description": "EIT linewidth vs ground-state density (collisional broadening)",
        "scheme": _ladder(1.3, 0.8),
        "budget": _budget(),
        "conditions": _conditions(coupling_diameter_mm=0.50),
        "numerics": _numerics(detuning_points=201, detuning_span_MHz=8.0),
        "sweep": {"parameter": "conditions.density_cm3", "start": 1e10, "stop": 2e11, "points": 10},
    },
    "fig4b_density_response": {
        "description": "Weak-field response at several cell temperatures (densities)",
        "scheme": _ladder(1.3, 0.8),
        "budget": _budget(),
        "conditions": _conditions(coupling_diameter_mm=0.50),
        "numerics": _numerics(),
        "rf": dict(_RF),
        "field_grid_mV_cm": dict(_WEAK_FIELDS),
        "series": [
            {"label": f"{t:g} K", "conditions": {"temperature_K": float(t)}} for t in (294, 306, 318, 330)
        ],
    },
    "fig5_transit": {
        "description": "Weak-field response for three coupling beam sizes (transit broadening)",
        "scheme": _ladder(1.7, 0.7),
        "budget": _budget(),
        "conditions": _conditions(coupling_diameter_mm=0.50),
        "numerics": _numerics(),
        "rf": dict(_RF),
        "field_grid_mV_cm": dict(_WEAK_FIELDS),
        "series": [
            {"label": f"{d:g} mm", "conditions": {"coupling_diameter_mm": d}} for d in (0.32, 0.5, 1.1)
        ],
    },
    "fig6_three_photon": {
        "description": "Three-photon 6S-6P1/2-9S-53P readout with RF on 53P-52D",
        "scheme": {
            "probe_rabi_MHz": 1.8,
            "dressing_rabi_MHz": 1.8,
            "coupling_rabi_MHz": 0.05,
            "probe_detuning_MHz": 500.0,
            "dressing_detuning_MHz": -500.0,
            "coupling_detuning_MHz": 0.005,
            "rf_detuning_MHz": 0.005,
        },
        "budget": _budget(laser=0.0, magnetic=0.0),
        "conditions": _conditions(coupling_diameter_mm=5.0, probe_diameter_mm=5.0),
        "numerics": _numerics(detuning_points=121, detuning_span_MHz=0.3),
        "rf": dict(_RF),
        "trace_rf_rabi_kHz": [0.0, 50.0, 100.0, 150.0, 200.0],
        "response_rf_rabi_kHz": [0.0, 0.5, 1.0, 2.0, 5.0, 10.0, 20.0],
    },
    "custom": {
        "description": "On-resonance probe transmission of the 4-level ladder along one parameter sweep",
        "scheme": dict(_ladder(1.0, 1.0), rf_rabi_MHz=0.0),
        "budget": _budget(),
        "conditions": _conditions(),
        "numerics": _numerics(),
        "sweep": {"parameter": "scheme.rf_rabi_MHz", "start": 0.0, "stop": 1.0, "points": 5},
    },
}

SCENARIOS = tuple(PRESETS)


# ---------------------------------------------------------------- config

def _is_number(v):
    return isinstance(v, (int, float)) and not isinstance(v, bool) and math.isfinite(v)


def _merge(base, override, where):
    """Merge ``override`` into a copy of ``base``; unknown keys are errors."""
    if not isinstance(override, dict):
        raise ConfigError(f"{where or 'config'} must be an object")
    out = copy.deepcopy(base)
    for key, value in override.items():
        path = f"{where}.{key}" if where else key
        if key not in base:
            raise ConfigError(f"unknown key {path!r}")
        ref = base[key]
        if isinstance(ref, dict) and key != "sweep":
            out[key] = _merge(ref, value, path)
        elif isinstance(ref, list) or key == "sweep":
            out[key] = copy.deepcopy(value)
        else:
            if value is not None and not _is_number(value) and not isinstance(value, (str, bool)):
                raise ConfigError(f"{path} must be a scalar")
            out[key] = value
    return out


_NULLABLE = {("conditions", "density_cm3"), ("budget", "transit_kHz"), ("budget", "collisional_kHz")}


def _check_section(cfg, section):
    for key, value in cfg[section].items():
        if section == "numerics" and key == "doppler_free":
            if not isinstance(value, bool):
                raise ConfigError("numerics.doppler_free must be true or false")
            continue
        if value is None and (section, key) in _NULLABLE:
            continue
        if not _is_number(value):
            raise ConfigError(f"{section}.{key} must be a finite number")
        if section in ("conditions", "rf") and value <= 0:
            raise ConfigError(f"{section}.{key} must be > 0")
        if section == "budget" and value < 0:
            raise ConfigError(f"{section}.{key} must be >= 0")
        if section == "scheme" and key.endswith("rabi_MHz") and value < 0:
            raise ConfigError(f"{section}.{key} must be >= 0")


def _validate(cfg):
    name = cfg["scenario"]
    for section in ("scheme", "budget", "conditions", "numerics", "rf"):
        if section in cfg:
            _check_section(cfg, section)
    num = cfg["numerics"]
    vp = num["velocity_points"]
    if not (float(vp).is_integer() and vp >= 3 and int(vp) % 2 == 1):
        raise ConfigError("numerics.velocity_points must be an odd integer >= 3")
    if num["velocity_span"] < 3:
        raise ConfigError("numerics.velocity_span must be >= 3")
    if not (float(num["detuning_points"]).is_integer() and num["detuning_points"] >= 5):
        raise ConfigError("numerics.detuning_points must be an integer >= 5")
    if num["detuning_span_MHz"] <= 0:
        raise ConfigError("numerics.detuning_span_MHz must be > 0")
    if name in ("fig4a_fwhm_vs_density", "custom"):
        _validate_sweep(cfg)
    for key in ("fields_mV_cm", "trace_rf_rabi_kHz", "response_rf_rabi_kHz"):
        if key in cfg:
            vals = cfg[key]
            if not isinstance(vals, list) or not vals or not all(_is_number(v) and v >= 0 for v in vals):
                raise ConfigError(f"{key} must be a nonempty list of numbers >= 0")
    if "field_grid_mV_cm" in cfg:
        g = cfg["field_grid_mV_cm"]
        if not (_is_number(g["start"]) and _is_number(g["stop"]) and 0 <= g["start"] <= g["stop"]):
            raise ConfigError("field_grid_mV_cm needs 0 <= start <= stop")
        if not (float(g["points"]).is_integer() and g["points"] >= 3):
            raise ConfigError("field_grid_mV_cm.points must be an integer >= 3")
    if "series" in cfg:
        _validate_series(cfg)


def _validate_sweep(cfg):
    sw = cfg["sweep"]
    if not isinstance(sw, dict) or set(sw) != {"parameter", "start", "stop", "points"}:
        raise ConfigError("sweep needs exactly parameter, start, stop, points")
    if not (_is_number(sw["start"]) and _is_number(sw["stop"])):
        raise ConfigError("sweep start/stop must be numbers")
    if not (_is_number(sw["points"]) and float(sw["points"]).is_integer() and sw["points"] >= 2):
        raise ConfigError("sweep.points must be an integer >= 2")
    parts = str(sw["parameter"]).split(".")
    if len(parts) != 2 or parts[0] not in ("scheme", "budget", "conditions") or parts[1] not in cfg[parts[0]]:
        raise ConfigError(f"sweep.parameter {sw['parameter']!r} is not a scheme/budget/conditions key")
    probe = copy.deepcopy(cfg)
    for v in (sw["start"], sw["stop"]):
        probe[parts[0]][parts[1]] = v
        _check_section(probe, parts[0])


def _validate_series(cfg):
    series = cfg["series"]
    if not isinstance(series, list) or not series:
        raise ConfigError("series must be a nonempty list")
    for i, entry in enumerate(series):
        if not isinstance(entry, dict):
            raise ConfigError(f"series[{i}] must be an object")
        for key in entry:
            if key not in ("label", "scheme", "budget", "conditions"):
                raise ConfigError(f"unknown key series[{i}].{key}")
        probe = copy.deepcopy(cfg)
        for section in ("scheme", "budget", "conditions"):
            if section in entry:
                probe[section] = _merge(cfg[section], entry[section], f"series[{i}].{section}")
                _check_section(probe, section)


def resolve_config(document: dict | None = None, scenario: str | None = None, doppler_free: bool | None = None) -> dict:
    """Expand a (possibly partial) scenario document against its preset."""
    doc = copy.deepcopy(document or {})
    if not isinstance(doc, dict):
        raise ConfigError("config must be a JSON object")
    name = doc.pop("scenario", scenario)
    if name is None:
        raise ConfigError("config must name a scenario")
    if name not in PRESETS:
        raise ConfigError(f"unknown scenario {name!r}; choose from {', '.join(SCENARIOS)}")
    preset = {k: v for k, v in PRESETS[name].items() if k != "description"}
    cfg = _merge(preset, doc, "")
    cfg = {"scenario": name, **cfg}
    if doppler_free is not None:
        cfg["numerics"]["doppler_free"] = bool(doppler_free)
    _validate(cfg)
    return cfg


def load_config(path, doppler_free: bool | None = None) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    return resolve_config(doc, doppler_free=doppler_free)


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), allow_nan=False)


def config_hash(cfg: dict) -> str:
    return hashlib.sha256(canonical_json(cfg).encode("utf-8")).hexdigest()


# ---------------------------------------------------------------- physics setup

def _conditions_of(cfg) -> CellConditions:
    c = cfg["conditions"]
    density = c["density_cm3"] * 1e6 if c["density_cm3"] is not None else cs_density(c["temperature_K"])
    return CellConditions(
        temperature=c["temperature_K"],
        density=density,
        length=c["length_cm"] * 1e-2,
        probe_diameter=c["probe_diameter_mm"] * 1e-3,
        coupling_diameter=c["coupling_diameter_mm"] * 1e-3,
    )


def _budget_of(cfg, conditions) -> DephasingBudget:
    if cfg["numerics"]["doppler_free"]:
        # dressed-state oracle: v = 0 and natural decays only
        return DephasingBudget(0.0, 0.0, 0.0, 0.0, 0.0)
    b = cfg["budget"]
    overrides = {
        "laser": b["laser_kHz"] * KHZ,
        "magnetic": b["magnetic_kHz"] * KHZ,
        "rydberg_rydberg": b["rydberg_rydberg_kHz"] * KHZ,
    }
    if b["transit_kHz"] is not None:
        overrides["transit"] = b["transit_kHz"] * KHZ
    if b["collisional_kHz"] is not None:
        overrides["collisional"] = b["collisional_kHz"] * KHZ
    return assemble_budget(conditions, overrides=overrides)


def _grid_of(cfg, conditions) -> VelocityGrid:
    num = cfg["numerics"]
    if num["doppler_free"]:
        return VelocityGrid.doppler_free()
    return make_velocity_grid(conditions.temperature, CS_MASS, int(num["velocity_points"]), num["velocity_span"])


def _detunings(cfg, center=0.0):
    num = cfg["numerics"]
    span = num["detuning_span_MHz"] * MHZ
    return center + np.linspace(-span, span, int(num["detuning_points"]))


def _transition(cfg) -> RfTransition:
    return RfTransition(cfg["rf"]["dipole_moment_ea0"], cfg["rf"]["frequency_GHz"] * 1e9)


def _ladder_scheme(s, rf_rabi=None):
    if rf_rabi is None and "rf_rabi_MHz" not in s:
        return cs_three_level(s["probe_rabi_MHz"] * MHZ, s["coupling_rabi_MHz"] * MHZ,
                              s["probe_detuning_MHz"] * MHZ, s["coupling_detuning_MHz"] * MHZ)
    rabi = rf_rabi if rf_rabi is not None else s["rf_rabi_MHz"] * MHZ
    return cs_four_level(s["probe_rabi_MHz"] * MHZ, s["coupling_rabi_MHz"] * MHZ, rabi,
                         s["probe_detuning_MHz"] * MHZ, s["coupling_detuning_MHz"] * MHZ,
                         s["rf_detuning_MHz"] * MHZ)


def _three_photon_scheme(s, rf_rabi=0.0, coupling=True):
    return cs_three_photon(
        s["probe_rabi_MHz"] * MHZ, s["dressing_rabi_MHz"] * MHZ,
        s["coupling_rabi_MHz"] * MHZ if coupling else 0.0, rf_rabi,
        s["probe_detuning_MHz"] * MHZ, s["dressing_detuning_MHz"] * MHZ,
        s["coupling_detuning_MHz"] * MHZ, s["rf_detuning_MHz"] * MHZ,
    )


def _field_grid(cfg):
    g = cfg["field_grid_mV_cm"]
    return np.linspace(g["start"], g["stop"], int(g["points"]))


def _series_config(cfg, entry):
    sub = copy.deepcopy(cfg)
    for section in ("scheme", "budget", "conditions"):
        if section in entry:
            sub[section] = _merge(cfg[section], entry[section], section)
    return sub


def _pmap(fn, items, threads):
    items = list(items)
    if threads > 1 and len(items) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(fn, items))
    return [fn(x) for x in items]


# ---------------------------------------------------------------- results

@dataclass
class Table:
    """Rows of scalars with ``columns`` given as ``(name, unit)`` pairs."""

    name: str
    columns: tuple
    rows: list = field(default_factory=list)


@dataclass
class ScenarioResult:
    scenario: str
    config: dict
    config_hash: str
    tables: list
    summary: dict = field(default_factory=dict)

    @property
    def primary(self) -> Table:
        return self.tables[0]

    def table(self, name) -> Table:
        for t in self.tables:
            if t.name == name:
                return t
        raise KeyError(name)

    def column(self, name, table=None):
        t = self.primary if table is None else self.table(table)
        names = [c[0] for c in t.columns]
        i = names.index(name)
        return [row[i] for row in t.rows]


def _fmt(v):
    if isinstance(v, str):
        return v
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


def csv_text(table: Table, scenario: str, digest: str) -> str:
    if not table.rows:
        raise ValueError("table is empty")
    buf = io.StringIO()
    buf.write(f"# rydsense scenario={scenario} version={__version__} config_hash={digest}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow([f"{n} ({u})" for n, u in table.columns])
    for row in table.rows:
        if len(row) != len(table.columns):
            raise ValueError("row width does not match the header")
        w.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def _atomic_write(path: Path, text: str):
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent if str(path.parent) else ".", prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def emit_csv(table: Table, path, scenario: str = "custom", digest: str = "") -> Path:
    """Write ``table`` as UTF-8 CSV with the two-line header, atomically."""
    text = csv_text(table, scenario, digest)
    path = Path(path)
    if not path.parent.is_dir():
        raise OSError(f"directory does not exist: {path.parent}")
    _atomic_write(path, text)
    return path


def _json_safe(obj):
    if isinstance(obj, dict):
        return {k: _json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_safe(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        f = float(obj)
        return f if math.isfinite(f) else None
    if isinstance(obj, np.integer):
        return int(obj)
    return obj


def write_outputs(result: ScenarioResult, out) -> list:
    """Primary table to ``out``, extra tables beside it, JSON sidecar ``<stem>.json``."""
    out = Path(out)
    written = [emit_csv(result.primary, out, result.scenario, result.config_hash)]
    for t in result.tables[1:]:
        written.append(emit_csv(t, out.with_name(f"{out.stem}.{t.name}{out.suffix or '.csv'}"),
                                result.scenario, result.config_hash))
    sidecar = {
        "scenario": result.scenario,
        "version": __version__,
        "config_hash": result.config_hash,
        "config": result.config,
        "summary": _json_safe(result.summary),
        "tables": [t.name for t in result.tables],
    }
    side = out.with_name(out.stem + ".json")
    _atomic_write(side, json.dumps(sidecar, sort_keys=True, indent=2) + "\n")
    written.append(side)
    return written


# ---------------------------------------------------------------- runners

def _located(exc: SolverError, where: str) -> SolverError:
    """Prefix a solver failure with the sweep point it happened at."""
    out = SolverError(f"{where}: {exc}")
    out.detuning, out.velocity = exc.detuning, exc.velocity
    return out


def _solver_context(label):
    def wrap(fn):
        def inner(*args, **kwargs):
            try:
                return fn(*args, **kwargs)
            except SolverError as exc:
                raise _located(exc, f"{label(*args)}") from exc
        return inner
    return wrap


def _linear_fit(x, y):
    x, y = np.asarray(x, float), np.asarray(y, float)
    ok = np.isfinite(y)
    if ok.sum() < 2:
        return float("nan")
    return float(np.polyfit(x[ok], y[ok], 1)[0])


def _run_fig2b(cfg, threads):
    cond = _conditions_of(cfg)
    budget = _budget_of(cfg, cond)
    grid = _grid_of(cfg, cond)
    det = _detunings(cfg)
    tr = _transition(cfg)
    quantity = "absorbance" if cfg["numerics"]["doppler_free"] else "transmission"
    fields = cfg["fields_mV_cm"]

    @_solver_context(lambda e: f"field {e} mV/cm")
    def one(e):
        rabi = field_to_rabi(e * V_PER_M_PER_MV_CM, tr)
        trace = doppler_averaged_trace(_ladder_scheme(cfg["scheme"], rabi), budget, cond, grid, det)
        try:
            split = at_peaks_of(trace.detunings, trace.signal(quantity)).splitting
        except UnresolvedSplittingError:
            split = float("nan")
        return trace, split

    results = _pmap(one, fields, threads)
    splits = Table("splitting", (("field", "mV/cm"), ("rf_rabi", "MHz"), ("splitting", "MHz"),
                                 ("field_from_splitting", "mV/cm")))
    traces = Table("traces", (("field", "mV/cm"), ("detuning", "MHz"), ("transmission", "1"),
                              ("optical_depth", "1"), ("phase", "rad")))
    for e, (trace, split) in zip(fields, results):
        expected = field_to_at_splitting(e * V_PER_M_PER_MV_CM, tr)
        back = at_splitting_to_field(split, tr) / V_PER_M_PER_MV_CM if math.isfinite(split) else split
        splits.rows.append((float(e), expected / 1e6, split / 1e6, back))
        for d, t, od, ph in zip(trace.detunings, trace.transmission, trace.optical_depth, trace.phase):
            traces.rows.append((float(e), d / MHZ, t, od, ph))
    summary = {"splitting_MHz": [r[2] for r in splits.rows], "quantity": quantity}
    return [splits, traces], summary


def _weak_field_series(cfg, threads, extra_columns):
    fields = _field_grid(cfg)
    tr = _transition(cfg)

    def one(entry):
        sub = _series_config(cfg, entry)
        cond = _conditions_of(sub)
        budget = _budget_of(sub, cond)
        grid = _grid_of(sub, cond)
        scheme = _ladder_scheme(sub["scheme"], 0.0)
        try:
            curve = weak_field_curve(scheme, budget, cond, fields * V_PER_M_PER_MV_CM, grid, tr,
                                     probe_detuning=sub["scheme"]["probe_detuning_MHz"] * MHZ)
        except SolverError as exc:
            raise _located(exc, f"series {entry.get('label', '?')}") from exc
        return sub, cond, budget, curve

    results = _pmap(one, cfg["series"], threads)
    cols = (("series", "label"),) + tuple(c for c, _ in extra_columns) + (("field", "mV/cm"), ("delta_T", "%"))
    table = Table("response", cols)
    slopes = {}
    for entry, (sub, cond, budget, curve) in zip(cfg["series"], results):
        label = entry.get("label", "")
        extras = tuple(fn(sub, cond, budget) for _, fn in extra_columns)
        for e, p in zip(fields, curve.percent_change):
            table.rows.append((label,) + extras + (float(e), float(p)))
        # % per (mV/cm)
        slopes[label] = slope_at_zero(curve) * V_PER_M_PER_MV_CM
    return [table], {"slope_at_zero_percent_per_mV_cm": slopes, "series": [e.get("label", "") for e in cfg["series"]]}


def _run_fig3(cfg, threads):
    extras = (
        (("probe_rabi", "MHz"), lambda s, c, b: s["scheme"]["probe_rabi_MHz"]),
        (("coupling_rabi", "MHz"), lambda s, c, b: s["scheme"]["coupling_rabi_MHz"]),
    )
    return _weak_field_series(cfg, threads, extras)


def _run_fig4b(cfg, threads):
    extras = (
        (("temperature", "K"), lambda s, c, b: c.temperature),
        (("density", "cm^-3"), lambda s, c, b: c.density * 1e-6),
        (("collisional", "kHz"), lambda s, c, b: b.collisional / KHZ),
    )
    return _weak_field_series(cfg, threads, extras)


def _run_fig5(cfg, threads):
    extras = (
        (("coupling_diameter", "mm"), lambda s, c, b: c.coupling_diameter * 1e3),
        (("transit", "kHz"), lambda s, c, b: b.transit / KHZ),
    )
    return _weak_field_series(cfg, threads, extras)


def _sweep_values(cfg):
    sw = cfg["sweep"]
    section, key = sw["parameter"].split(".")
    return section, key, np.linspace(sw["start"], sw["stop"], int(sw["points"]))


def _run_fig4a(cfg, threads):
    section, key, values = _sweep_values(cfg)
    det = _detunings(cfg)

    def one(v):
        sub = copy.deepcopy(cfg)
        sub[section][key] = float(v)
        cond = _conditions_of(sub)
        budget = _budget_of(sub, cond)
        grid = _grid_of(sub, cond)
        try:
            trace = doppler_averaged_trace(_ladder_scheme(sub["scheme"]), budget, cond, grid, det)
        except SolverError as exc:
            raise _located(exc, f"{sw_name}={float(v)!r}") from exc
        out = []
        for q in ("transmission", "absorbance"):
            try:
                out.append(fwhm(trace, q) / 1e6)
            except NoPeakError:
                out.append(float("nan"))
        return cond, budget, out

    sw_name = cfg["sweep"]["parameter"]
    results = _pmap(one, values, threads)
    table = Table("fwhm", (("density", "cm^-3"), ("collisional", "kHz"), ("fwhm", "MHz"),
                           ("absorbance_fwhm", "MHz")))
    for cond, budget, (f_t, f_a) in results:
        table.rows.append((cond.density * 1e-6, budget.collisional / KHZ, f_t, f_a))
    dens = [r[0] for r in table.rows]
    summary = {
        "fwhm_slope_cm3_MHz": _linear_fit(dens, [r[2] for r in table.rows]),
        "absorbance_fwhm_slope_cm3_MHz": _linear_fit(dens, [r[3] for r in table.rows]),
        "collisional_coefficient_cm3_MHz": float(collisional_rate(1e6, temperature=cfg["conditions"]["temperature_K"]) / TWO_PI / 1e6),
    }
    return [table], summary


def _run_custom(cfg, threads):
    section, key, values = _sweep_values(cfg)

    def one(v):
        sub = copy.deepcopy(cfg)
        sub[section][key] = float(v)
        cond = _conditions_of(sub)
        budget = _budget_of(sub, cond)
        grid = _grid_of(sub, cond)
        s = sub["scheme"]
        try:
            trace = doppler_averaged_trace(_ladder_scheme(s), budget, cond, grid, [s["probe_detuning_MHz"] * MHZ])
        except SolverError as exc:
            raise _located(exc, f"{cfg['sweep']['parameter']}={float(v)!r}") from exc
        return trace

    results = _pmap(one, values, threads)
    table = Table("sweep", ((cfg["sweep"]["parameter"], _unit_of(key)), ("transmission", "1"),
                            ("optical_depth", "1"), ("phase", "rad")))
    for v, tr in zip(values, results):
        table.rows.append((float(v), tr.transmission[0], tr.optical_depth[0], tr.phase[0]))
    return [table], {}


def _unit_of(key):
    for suffix, unit in (("_MHz", "MHz"), ("_kHz", "kHz"), ("_mm", "mm"), ("_cm3", "cm^-3"), ("_cm", "cm"), ("_K", "K")):
        if key.endswith(suffix):
            return unit
    return "1"


def run_three_photon(cfg: dict, threads: int = 1) -> ScenarioResult:
    """Five-level three-photon readout: traces, splitting and weak-field response.

    The detected quantity is the coupling-induced change of the probe
    transmission (coupling on minus coupling off), which is what a lock-in
    on the modulated coupling beam records. The far-detuned probe otherwise
    sees only the Doppler-wing background.
    """
    cfg = cfg if _is_resolved(cfg) else resolve_config(cfg, "fig6_three_photon")
    if cfg["scenario"] != "fig6_three_photon":
        raise ConfigError("run_three_photon needs the fig6_three_photon scenario")
    tables, summary = _run_fig6(cfg, threads)
    return ScenarioResult(cfg["scenario"], cfg, config_hash(cfg), tables, summary)


def _run_fig6(cfg, threads):
    s = cfg["scheme"]
    cond = _conditions_of(cfg)
    budget = _budget_of(cfg, cond)
    grid = _grid_of(cfg, cond)
    tr = _transition(cfg)
    resonance = -(s["dressing_detuning_MHz"] + s["coupling_detuning_MHz"]) * MHZ
    det = _detunings(cfg, resonance)
    quantity = "absorbance" if cfg["numerics"]["doppler_free"] else "transmission"

    def trace_for(rf_rabi, coupling=True, grid_=det):
        try:
            return doppler_averaged_trace(_three_photon_scheme(s, rf_rabi, coupling), budget, cond, grid,
                                          grid_, CS_D1_DIPOLE)
        except SolverError as exc:
            raise _located(exc, f"rf_rabi={rf_rabi / KHZ!r} kHz") from exc

    background = trace_for(0.0, coupling=False)
    rabis = [r * KHZ for r in cfg["trace_rf_rabi_kHz"]]
    traces = _pmap(trace_for, rabis, threads)

    trace_table = Table("traces", (("rf_rabi", "kHz"), ("detuning", "MHz"), ("transmission", "1"),
                                   ("signal", "1")))
    split_table = Table("splitting", (("rf_rabi", "kHz"), ("field", "nV/cm"), ("splitting", "kHz"),
                                      ("field_from_splitting", "nV/cm")))
    for rabi, t in zip(rabis, traces):
        sig = t.signal(quantity) - background.signal(quantity)
        for d, tt, ss in zip(t.detunings, t.transmission, sig):
            trace_table.rows.append((rabi / KHZ, (d - resonance) / MHZ, tt, ss))
        try:
            split = at_peaks_of(t.detunings, sig).splitting
        except UnresolvedSplittingError:
            split = float("nan")
        field_v_m = rabi_to_field(rabi, tr)
        back = at_splitting_to_field(split, tr) if math.isfinite(split) else split
        split_table.rows.append((rabi / KHZ, field_v_m * 1e7, split / 1e3, back * 1e7))

    on_res = [resonance]
    resp_rabis = [r * KHZ for r in cfg["response_rf_rabi_kHz"]]
    bg0 = trace_for(0.0, coupling=False, grid_=on_res)
    ref = trace_for(0.0, grid_=on_res)
    s_ref = float(ref.signal(quantity)[0] - bg0.signal(quantity)[0])
    t_ref = float(ref.transmission[0])

    def response(rabi):
        return ref if rabi == 0 else trace_for(rabi, grid_=on_res)

    resp = _pmap(response, resp_rabis, threads)
    resp_table = Table("response", (("rf_rabi", "kHz"), ("field", "nV/cm"), ("delta_T", "%"),
                                    ("delta_signal", "%")))
    for rabi, t in zip(resp_rabis, resp):
        sig = float(t.signal(quantity)[0] - bg0.signal(quantity)[0])
        field_v_m = rabi_to_field(rabi, tr)
        resp_table.rows.append((rabi / KHZ, field_v_m * 1e7, 100 * (float(t.transmission[0]) - t_ref) / t_ref,
                                100 * (sig - s_ref) / s_ref))

    summary = {
        "splitting_kHz": [r[2] for r in split_table.rows],
        "rf_rabi_kHz": [r[0] for r in split_table.rows],
        "field_at_1kHz_nV_cm": rabi_to_field(KHZ, tr) * 1e7,
        "three_photon_resonance_MHz": resonance / MHZ,
    }
    return [split_table, trace_table, resp_table], summary


_RUNNERS = {
    "fig2b_at": _run_fig2b,
    "fig3_power": _run_fig3,
    "fig4a_fwhm_vs_density": _run_fig4a,
    "fig4b_density_response": _run_fig4b,
    "fig5_transit": _run_fig5,
    "fig6_three_photon": _run_fig6,
    "custom": _run_custom,
}


def run_scenario(config: dict, threads: int = 1) -> ScenarioResult:
    """Run a scenario from a resolved (or partial) configuration."""
    cfg = config if _is_resolved(config) else resolve_config(config)
    tables, summary = _RUNNERS[cfg["scenario"]](cfg, max(1, int(threads)))
    return ScenarioResult(cfg["scenario"], cfg, config_hash(cfg), tables, summary)


def _is_resolved(cfg):
    try:
        return cfg == resolve_config(cfg)
    except ConfigError:
        return False
