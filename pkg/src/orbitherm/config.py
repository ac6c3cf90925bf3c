"""Experiment configuration: JSON schema validation, object construction, hashing."""
import hashlib
import json
import math
from dataclasses import dataclass, field
from importlib import resources

import jsonschema

from .errors import ConfigError, InvalidSpecError
from .geometry import HPoint, Isometry
from .groups import Disk, SchottkyGroup
from .potentials import potential_from_json, set_spec_from_json
from .thermo import ReferenceConstants, Region
from .words import MAX_WORD_LEN

SCHEMA_VERSION = "1.0"
TOOL_VERSION = "0.1.0"

# hard caps on the knobs
CAPS = {"n_max": 9, "k": 4, "step_min": 0.005, "neighbor_depth": 3, "sample_depth": 12,
        "t_max": 1e7, "t_grid_len": 512}


def load_schema():
    return json.loads(resources.files("orbitherm").joinpath("config.schema.json").read_text())


def canonical_bytes(obj):
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=True,
                      allow_nan=False).encode()


def config_hash(obj):
    return hashlib.sha256(canonical_bytes(obj)).hexdigest()[:16]


def _pointer(path):
    return "/" + "/".join(str(p).replace("~", "~0").replace("/", "~1") for p in path) if path else ""


@dataclass
class ExperimentConfig:
    raw: dict
    hash: str
    group: SchottkyGroup
    potentials: dict
    t_grid: list
    n_range: tuple
    knobs: dict
    regions: list
    reference: ReferenceConstants
    outputs: dict
    seed: int
    experiment: dict = field(default_factory=dict)

    @property
    def phi(self):
        return self.potentials.get("phi")

    @property
    def psi(self):
        return self.potentials.get("psi")


def _check_halving(obj, path, out):
    """WeightedSum weights must at least halve term to term."""
    if not isinstance(obj, dict):
        return
    if obj.get("type") == "WeightedSum":
        terms = obj.get("terms", [])
        for i in range(1, len(terms)):
            a, b = terms[i - 1][0], terms[i][0]
            if not b <= 0.5 * a:
                out.append((_pointer(path + ["terms", i, 0]),
                            f"weight {b} breaks the halving rule of the weighted alternating "
                            f"family (needs <= {a}/2)"))
        for i, t in enumerate(terms):
            _check_halving(t[1], path + ["terms", i, 1], out)
    for key in ("inner",):
        if key in obj:
            _check_halving(obj[key], path + [key], out)


def _semantic(raw, out):
    g = raw["group"]
    k = len(g["generators"])
    if k > CAPS["k"]:
        out.append(("/group/generators", f"at most {CAPS['k']} generators"))
    if isinstance(g["disks"], list) and len(g["disks"]) != k:
        out.append(("/group/disks", "need one disk pair per generator"))
    for i, m in enumerate(g["generators"]):
        det = m[0] * m[3] - m[1] * m[2]
        if not det > 0:
            out.append((f"/group/generators/{i}", "determinant must be positive"))
    lo, hi = raw["n_range"]
    if lo > hi:
        out.append(("/n_range", "n_min exceeds n_max"))
    if hi > min(CAPS["n_max"], MAX_WORD_LEN):
        out.append(("/n_range/1", f"n_max capped at {CAPS['n_max']}"))
    kn = raw.get("knobs", {})
    if kn.get("step", 0.05) < CAPS["step_min"]:
        out.append(("/knobs/step", f"step below {CAPS['step_min']}"))
    if kn.get("neighbor_depth", 2) > CAPS["neighbor_depth"]:
        out.append(("/knobs/neighbor_depth", f"at most {CAPS['neighbor_depth']}"))
    tg = raw.get("t_grid", [])
    if len(tg) > CAPS["t_grid_len"]:
        out.append(("/t_grid", "grid too long"))
    if any(abs(t) > CAPS["t_max"] for t in tg):
        out.append(("/t_grid", f"|t| capped at {CAPS['t_max']:g}"))
    for name, p in raw.get("potentials", {}).items():
        _check_halving(p, ["potentials", name], out)


def parse_config(data):
    """bytes / str / dict -> ExperimentConfig, or ConfigError listing every violation."""
    if isinstance(data, (bytes, bytearray)):
        try:
            data = data.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise ConfigError([("", f"not UTF-8: {exc}")]) from None
    if isinstance(data, str):
        try:
            raw = json.loads(data)
        except json.JSONDecodeError as exc:
            raise ConfigError([("", f"not JSON: {exc}")]) from None
    else:
        raw = json.loads(json.dumps(data))
    validator = jsonschema.Draft7Validator(load_schema())
    errs = sorted(validator.iter_errors(raw), key=lambda e: (list(map(str, e.absolute_path)), e.message))
    out = []
    for e in errs:
        path = list(e.absolute_path)
        if e.validator == "required":
            missing = e.message.split("'")[1]
            path = path + [missing]
        out.append((_pointer(path), e.message))
    if out:
        raise ConfigError(out)
    _semantic(raw, out)
    if out:
        raise ConfigError(out)
    return build(raw)


def _build_group(g):
    gens = [Isometry(*m) for m in g["generators"]]
    disks = None
    if isinstance(g["disks"], list):
        disks = [(Disk(complex(d[0], 0.0), d[1]), Disk(complex(d[2], 0.0), d[3])) for d in g["disks"]]
    bp = HPoint(*g["basepoint"]) if "basepoint" in g else None
    return SchottkyGroup(gens, disks=disks, basepoint=bp, extended=bool(g.get("extended", False)))


def build(raw):
    out = []
    try:
        group = _build_group(raw["group"])
    except Exception as exc:  # geometry rejects the generators
        raise ConfigError([("/group", str(exc))]) from None
    pots = {}
    for name, p in raw.get("potentials", {}).items():
        try:
            pots[name] = potential_from_json(p)
        except (InvalidSpecError, KeyError, TypeError) as exc:
            out.append((f"/potentials/{name}", str(exc)))
    regions = []
    for i, r in enumerate(raw.get("regions", [])):
        try:
            regions.append(Region(r["id"], set_spec_from_json(r["target"]), float(r.get("r", 0.3))))
        except (InvalidSpecError, KeyError, TypeError) as exc:
            out.append((f"/regions/{i}", str(exc)))
    if out:
        raise ConfigError(out)
    ref = raw.get("reference", {})
    h_inf = ref.get("h_inf_reference")
    return ExperimentConfig(
        raw=raw, hash=config_hash(raw), group=group, potentials=pots,
        t_grid=[float(t) for t in raw.get("t_grid", [])],
        n_range=tuple(raw["n_range"]), knobs=dict(raw.get("knobs", {})), regions=regions,
        reference=ReferenceConstants(h_inf if h_inf is None else float(h_inf)),
        outputs=dict(raw.get("outputs", {})), seed=int(raw.get("seed", 0)),
        experiment=dict(raw.get("experiment", {})))


def knob(cfg, name, default):
    v = cfg.knobs.get(name, default)
    return v if not isinstance(v, float) or math.isfinite(v) else default
