"""Run configuration: TOML file with unit-suffixed values, resolved to SI objects.

See ``data/er_yso_example.toml`` for an annotated example covering every key.
All problems found while resolving a file are collected and raised together
as one :class:`ConfigError` with line references.
"""

from __future__ import annotations

import copy
import math
import re
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover
    import tomli as tomllib

from .dipolar import DEFAULT_MIN_SEPARATION
from .ensemble.lattice import Lattice, LatticeError, load_lattice, site_density
from .ensemble.spec import BathSpecies, EnsembleSpec
from .sequence import SEQUENCE_KINDS, SequenceError, standard_sequence
from .units import UnitError, parse_quantity
from .zeeman import GTensor, diagonalize_g_matrix

__all__ = [
    "ConfigError",
    "RunConfig",
    "SequenceSpec",
    "FidelityCase",
    "OracleSpec",
    "NoiseSpec",
    "load_config",
    "parse_config",
    "direction_path",
]


class ConfigError(ValueError):
    def __init__(self, problems):
        self.problems = list(problems)
        super().__init__("invalid configuration:\n" + "\n".join(f"  {p}" for p in self.problems))


@dataclass(frozen=True)
class SequenceSpec:
    label: str
    kind: str
    spacing: float
    pulse_duration: float = 0.0
    half_pi_duration: Optional[float] = None
    n_repeats: int = 1
    c_target: float = 1.0 / 3.0
    finite_pulses: bool = False

    def build(self):
        return standard_sequence(
            self.kind, spacing=self.spacing, n_repeats=self.n_repeats,
            pulse_duration=self.pulse_duration, half_pi_duration=self.half_pi_duration,
            c_target=self.c_target,
        )


@dataclass(frozen=True)
class FidelityCase:
    label: str
    rabi: float  # rad/s
    linewidth: float  # Hz
    t_p: float  # s


@dataclass(frozen=True)
class OracleSpec:
    n_spins: int = 3
    n_clusters: int = 4
    density: float = 1e24  # m^-3, sets the cluster radius
    spacings: tuple = (1e-9,)
    sequences: tuple = ("hahn_echo", "xy4", "droid60")
    hahn_coupling: float = 1e5  # Hz, J_I / h of the closed-form pair
    hahn_taus: tuple = (1e-6, 2e-6, 3e-6)


@dataclass(frozen=True)
class NoiseSpec:
    amplitude: float  # rad/s
    correlation_time: float
    n_pi: tuple = (4, 8, 16, 32, 64)
    trajectories: int = 2000
    n_points: int = 24


@dataclass
class RunConfig:
    raw: dict
    source: str
    seed: int = 0
    realizations: int = 2000
    out: str = "out"
    workers: int = 1
    g: Optional[GTensor] = None
    rotation: Optional[np.ndarray] = None
    directions: dict = field(default_factory=dict)
    sweep: Optional[dict] = None
    predict_direction: Optional[np.ndarray] = None
    ensemble: Optional[EnsembleSpec] = None
    eta_source: Optional[str] = None
    inhomogeneous_linewidth: Optional[float] = None
    n_target: float = 400
    lattice: Optional[Lattice] = None
    centre_label: Optional[str] = None
    sequences: tuple = ()
    fidelity: tuple = ()
    oracle: Optional[OracleSpec] = None
    noise: Optional[NoiseSpec] = None

    def sweep_points(self):
        """``(angle_rad, lab_unit_vector)`` along the configured great circle."""
        if self.sweep is None:
            return []
        return direction_path(self.sweep["from"], self.sweep["to"], self.sweep["start"],
                              self.sweep["span"], self.sweep["steps"])

    def lab_to_eigen(self, v) -> np.ndarray:
        v = np.asarray(v, dtype=float)
        return v if self.rotation is None else self.rotation @ v

    def resolved(self) -> dict:
        """The raw config with CLI overrides applied (for output headers)."""
        out = copy.deepcopy(self.raw)
        run = out.setdefault("run", {})
        run["seed"] = self.seed
        run["realizations"] = self.realizations
        # output location and parallelism do not change results
        run.pop("out", None)
        run.pop("workers", None)
        if self.eta_source is None and self.ensemble is not None:
            out.setdefault("ensemble", {})["eta"] = self.ensemble.eta
        return out


def direction_path(start_vec, toward_vec, start: float, span: float, steps: int):
    u = np.asarray(start_vec, dtype=float)
    u = u / np.linalg.norm(u)
    w = np.asarray(toward_vec, dtype=float)
    w = w - (w @ u) * u
    nw = np.linalg.norm(w)
    if nw < 1e-12:
        raise ValueError("sweep directions are parallel; the great circle is undefined")
    w = w / nw
    angles = [start + (span * k / (steps - 1) if steps > 1 else 0.0) for k in range(steps)]
    return [(a, math.cos(a) * u + math.sin(a) * w) for a in angles]


# --- line references --------------------------------------------------------

_HEADER = re.compile(r"^\s*(\[\[?)\s*([A-Za-z0-9_.\-]+)\s*\]\]?")
_KEY = re.compile(r"^\s*([A-Za-z0-9_\-]+)\s*=")


def _key_lines(text: str) -> dict:
    lines = {}
    table = ""
    counts = {}
    for no, line in enumerate(text.splitlines(), 1):
        h = _HEADER.match(line)
        if h:
            name = h.group(2)
            if h.group(1) == "[[":
                counts[name] = counts.get(name, -1) + 1
                table = f"{name}[{counts[name]}]"
            else:
                table = name
            lines.setdefault(table, no)
            continue
        k = _KEY.match(line)
        if k:
            path = f"{table}.{k.group(1)}" if table else k.group(1)
            lines.setdefault(path, no)
    return lines


class _Collector:
    def __init__(self, lines: dict, source: str):
        self.lines = lines
        self.source = source
        self.problems = []

    def add(self, path: str, msg: str):
        no = self.lines.get(path)
        if no is None:
            # fall back to the enclosing table
            parent = path.rsplit(".", 1)[0]
            no = self.lines.get(parent)
        where = f"{self.source}:{no}" if no else self.source
        self.problems.append(f"{where}: {path}: {msg}")

    def q(self, table: dict, path: str, key: str, kind: str, default=None, required=False):
        if key not in table:
            if required:
                self.add(f"{path}.{key}", "missing")
            return default
        try:
            return parse_quantity(table[key], kind)
        except UnitError as e:
            self.add(f"{path}.{key}", str(e))
            return default

    def num(self, table, path, key, typ=float, default=None, required=False, lo=None, hi=None):
        if key not in table:
            if required:
                self.add(f"{path}.{key}", "missing")
            return default
        v = table[key]
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            self.add(f"{path}.{key}", f"expected a number, got {v!r}")
            return default
        if typ is int and int(v) != v:
            self.add(f"{path}.{key}", f"expected an integer, got {v!r}")
            return default
        v = typ(v)
        if (lo is not None and v < lo) or (hi is not None and v > hi):
            self.add(f"{path}.{key}", f"value {v!r} outside [{lo}, {hi}]")
            return default
        return v


def _matrix(col, table, path, key, shape=(3, 3)):
    try:
        m = np.asarray(table[key], dtype=float)
        if m.shape != shape:
            raise ValueError
        return m
    except (ValueError, TypeError):
        col.add(f"{path}.{key}", f"expected a {shape} numeric array")
        return None


def _g_from_table(col, t, path):
    """``(GTensor, rotation)`` from ``matrix`` or ``principal`` (+ ``rotation``)."""
    try:
        if "matrix" in t:
            m = _matrix(col, t, path, "matrix")
            return (None, None) if m is None else diagonalize_g_matrix(m)
        if "principal" in t:
            p = _matrix(col, t, path, "principal", (3,))
            if p is None:
                return None, None
            R = _matrix(col, t, path, "rotation") if "rotation" in t else None
            if R is not None and not np.allclose(R @ R.T, np.eye(3), atol=1e-8):
                col.add(f"{path}.rotation", "rotation must be orthogonal")
                R = None
            return GTensor(*p), R
    except ValueError as e:
        col.add(path, str(e))
        return None, None
    col.add(path, "give either 'matrix' (lab frame) or 'principal' values")
    return None, None


def _direction(col, spec, path, directions):
    if isinstance(spec, str):
        if spec not in directions:
            col.add(path, f"unknown direction {spec!r}; known: {sorted(directions)}")
            return None
        return directions[spec]
    if isinstance(spec, list):
        try:
            v = np.asarray(spec, dtype=float)
            if v.shape != (3,) or np.linalg.norm(v) == 0:
                raise ValueError
            return v / np.linalg.norm(v)
        except (ValueError, TypeError):
            col.add(path, "expected a non-zero 3-vector")
            return None
    if isinstance(spec, dict):
        a = _direction(col, spec.get("from"), path + ".from", directions)
        b = _direction(col, spec.get("to"), path + ".to", directions)
        ang = col.q(spec, path, "angle", "angle", required=True)
        if a is None or b is None or ang is None:
            return None
        try:
            return direction_path(a, b, ang, 0.0, 1)[0][1]
        except ValueError as e:
            col.add(path, str(e))
            return None
    col.add(path, "expected a direction name, vector or {from, to, angle} table")
    return None


def parse_config(text: str, source: str = "<config>", base_dir: Optional[Path] = None,
                 overrides: Optional[dict] = None) -> RunConfig:
    """Parse and resolve a config document; raises :class:`ConfigError`."""
    try:
        raw = tomllib.loads(text)
    except tomllib.TOMLDecodeError as e:
        raise ConfigError([f"{source}: {e}"]) from None
    base_dir = Path(base_dir) if base_dir is not None else Path.cwd()
    overrides = overrides or {}
    col = _Collector(_key_lines(text), source)
    cfg = RunConfig(raw=raw, source=source)

    run = raw.get("run", {})
    cfg.seed = col.num(run, "run", "seed", int, 0, lo=0)
    cfg.realizations = col.num(run, "run", "realizations", int, 2000, lo=1)
    cfg.out = run.get("out", "out")
    cfg.workers = col.num(run, "run", "workers", int, 1, lo=1)
    for k in ("seed", "realizations", "out", "workers"):
        if overrides.get(k) is not None:
            setattr(cfg, k, overrides[k])

    if "gtensor" in raw:
        cfg.g, cfg.rotation = _g_from_table(col, raw["gtensor"], "gtensor")
    else:
        col.add("gtensor", "missing [gtensor] table")

    dirs = {"x": np.array([1.0, 0, 0]), "y": np.array([0, 1.0, 0]), "z": np.array([0, 0, 1.0])}
    for name, v in raw.get("directions", {}).items():
        d = _direction(col, v, f"directions.{name}", dirs)
        if d is not None:
            dirs[name] = d
    cfg.directions = dirs

    if "sweep" in raw:
        s = raw["sweep"]
        a = _direction(col, s.get("from"), "sweep.from", dirs)
        b = _direction(col, s.get("to"), "sweep.to", dirs)
        start = col.q(s, "sweep", "start", "angle", 0.0)
        span = col.q(s, "sweep", "span", "angle", required=True)
        steps = col.num(s, "sweep", "steps", int, required=True, lo=1)
        if a is not None and b is not None and span is not None and steps is not None:
            cfg.sweep = dict(**{"from": a}, to=b, start=start, span=span, steps=steps)
            try:
                direction_path(a, b, 0.0, 0.0, 1)
            except ValueError as e:
                col.add("sweep", str(e))
                cfg.sweep = None
    if "predict" in raw and "direction" in raw["predict"]:
        cfg.predict_direction = _direction(col, raw["predict"]["direction"], "predict.direction", dirs)

    # host and lattice
    host = raw.get("host", {})
    dens = None
    if "site_density" in host:
        dens = col.q(host, "host", "site_density", "density")
    elif host:
        cell = [col.q(host, "host", k, "length", required=True) for k in ("a", "b", "c")]
        angs = [col.q(host, "host", k, "angle", math.pi / 2) for k in ("alpha", "beta", "gamma")]
        spc = col.num(host, "host", "sites_per_cell", float, required=True, lo=0)
        if None not in cell and None not in angs and spc:
            dens = site_density(*cell, *(math.degrees(x) for x in angs), sites_per_cell=spc)
    if "lattice_file" in host:
        p = Path(host["lattice_file"])
        p = p if p.is_absolute() else base_dir / p
        try:
            cfg.lattice = load_lattice(p)
        except LatticeError as e:
            col.add("host.lattice_file", str(e))
    cfg.centre_label = host.get("centre_label")

    # sequences
    seqs = []
    for i, s in enumerate(raw.get("sequence", [])):
        path = f"sequence[{i}]"
        kind = s.get("kind")
        if kind not in SEQUENCE_KINDS:
            col.add(f"{path}.kind", f"expected one of {SEQUENCE_KINDS}, got {kind!r}")
            continue
        spacing = col.q(s, path, "spacing", "time", required=True)
        if spacing is None:
            continue
        sp = SequenceSpec(
            label=str(s.get("label", kind)),
            kind=kind,
            spacing=spacing,
            pulse_duration=col.q(s, path, "pulse_duration", "time", 0.0),
            half_pi_duration=col.q(s, path, "half_pi_duration", "time", None),
            n_repeats=col.num(s, path, "n_repeats", int, 1, lo=1),
            c_target=col.num(s, path, "c_target", float, 1 / 3, lo=0.0, hi=1.0),
            finite_pulses=bool(s.get("finite_pulses", False)),
        )
        try:
            sp.build()
        except SequenceError as e:
            col.add(path, str(e))
            continue
        seqs.append(sp)
    labels = [s.label for s in seqs]
    if len(set(labels)) != len(labels):
        col.add("sequence", "sequence labels must be unique")
    cfg.sequences = tuple(seqs)

    # fidelity cases
    cases = []
    for i, c in enumerate(raw.get("fidelity", {}).get("case", [])):
        path = f"fidelity.case[{i}]"
        rabi = col.q(c, path, "rabi", "angular_frequency", required=True)
        lw = col.q(c, path, "linewidth", "frequency", required=True)
        if "t_p" in c:
            tp = col.q(c, path, "t_p", "time")
        else:
            ang = col.q(c, path, "angle", "angle", math.pi)
            tp = ang / rabi if rabi else None
        if None in (rabi, lw, tp):
            continue
        cases.append(FidelityCase(str(c.get("label", f"case{i}")), rabi, lw, tp))
    cfg.fidelity = tuple(cases)

    # ensemble and bath
    if "ensemble" in raw:
        e = raw["ensemble"]
        conc = col.q(e, "ensemble", "concentration", "fraction", required=True)
        eta = 1.0
        if isinstance(e.get("eta"), str):
            label = e["eta"].removeprefix("fidelity:")
            if not e["eta"].startswith("fidelity:") or label not in [c.label for c in cases]:
                col.add("ensemble.eta", "expected a number or 'fidelity:<case label>'")
            else:
                cfg.eta_source = label
        else:
            eta = col.num(e, "ensemble", "eta", float, 1.0, lo=0.0, hi=1.0)
        field_t = col.q(e, "ensemble", "field", "field", None)
        temp = col.q(e, "ensemble", "temperature", "temperature", None)
        minsep = col.q(e, "ensemble", "min_separation", "length", DEFAULT_MIN_SEPARATION)
        cfg.inhomogeneous_linewidth = col.q(e, "ensemble", "inhomogeneous_linewidth", "frequency", None)
        cfg.n_target = col.num(e, "ensemble", "n_target", float, 400.0, lo=10)
        bath = []
        for i, b in enumerate(raw.get("bath", [])):
            path = f"bath[{i}]"
            kind = b.get("kind")
            bconc = col.q(b, path, "concentration", "fraction", required=True)
            bdens = col.q(b, path, "site_density", "density", dens)
            g = R = mom = None
            if kind == "electron":
                if b.get("same_as_probe"):
                    g, R = cfg.g, cfg.rotation
                else:
                    g, R = _g_from_table(col, b, path)
            elif kind == "nuclear":
                mom = col.q(b, path, "moment", "moment", required=True)
            if bdens is None:
                col.add(path, "no site density (set [host] or bath site_density)")
                continue
            try:
                if bconc is not None:
                    bath.append(BathSpecies(
                        name=str(b.get("name", f"bath{i}")), kind=str(kind), concentration=bconc,
                        site_density=bdens, g=g, rotation=R, moment=mom,
                        placement=b.get("placement", "lattice"), site_label=b.get("site_label"),
                    ))
            except ValueError as exc:
                col.add(path, str(exc))
        for i, b in enumerate(bath):
            if b.placement == "lattice" and cfg.lattice is None:
                col.add(f"bath[{i}].placement", "lattice placement needs host.lattice_file")
        if dens is None:
            col.add("host", "site density unavailable: give cell constants + sites_per_cell or site_density")
        elif conc is not None:
            try:
                cfg.ensemble = EnsembleSpec(
                    concentration=conc, site_density=dens, eta=eta, bath=tuple(bath),
                    thermal=bool(e.get("thermal", False)), temperature=temp, field_tesla=field_t,
                    min_separation=minsep,
                )
            except ValueError as exc:
                col.add("ensemble", str(exc))

    if "oracle" in raw:
        o = raw["oracle"]
        spac = o.get("spacings", ["1 ns"])
        taus = o.get("hahn_taus", ["1 us", "2 us", "3 us"])
        try:
            spac_v = tuple(parse_quantity(x, "time") for x in spac)
            taus_v = tuple(parse_quantity(x, "time") for x in taus)
        except (UnitError, TypeError) as exc:
            col.add("oracle", str(exc))
            spac_v, taus_v = (1e-9,), (1e-6,)
        kinds = tuple(o.get("sequences", ["hahn_echo", "xy4", "droid60"]))
        bad = [k for k in kinds if k not in SEQUENCE_KINDS or k == "ramsey"]
        if bad:
            col.add("oracle.sequences", f"unsupported sequences {bad}")
        cfg.oracle = OracleSpec(
            n_spins=col.num(o, "oracle", "n_spins", int, 3, lo=2, hi=12),
            n_clusters=col.num(o, "oracle", "n_clusters", int, 4, lo=1),
            density=col.q(o, "oracle", "density", "density", 1e24),
            spacings=spac_v,
            sequences=kinds,
            hahn_coupling=col.q(o, "oracle", "hahn_coupling", "frequency", 1e5),
            hahn_taus=taus_v,
        )

    if "noise" in raw:
        n = raw["noise"]
        amp = col.q(n, "noise", "amplitude", "angular_frequency", required=True)
        tau = col.q(n, "noise", "correlation_time", "time", required=True)
        npi = n.get("n_pi", [4, 8, 16, 32, 64])
        if not (isinstance(npi, list) and all(isinstance(k, int) and k > 0 and k % 4 == 0 for k in npi)):
            col.add("noise.n_pi", "expected a list of positive multiples of 4")
            npi = [4, 8, 16, 32, 64]
        traj = col.num(n, "noise", "trajectories", int, 2000, lo=1)
        if amp and tau:
            cfg.noise = NoiseSpec(amp, tau, tuple(npi), traj, col.num(n, "noise", "n_points", int, 24, lo=4))

    if col.problems:
        raise ConfigError(col.problems)
    return cfg


def load_config(path, overrides: Optional[dict] = None) -> RunConfig:
    p = Path(path)
    if not p.is_file():
        raise ConfigError([f"config file not found: {p}"])
    return parse_config(p.read_text(), str(p), p.parent, overrides)
