"""Scenario configuration and its plain-text ``key = value`` file format.

A config file is a flat list of assignments; ``#`` starts a comment. Nested
parameter groups use dotted keys (``bs.n_y = 8``, ``rays_ue.clusters = 20``).
Any key not given keeps its default, so an empty file is the default
profile. K-factors accept ``inf`` / ``los`` for a pure line-of-sight link.
``dump_config`` writes every key and is the reference for the schema.
"""

import configparser
import dataclasses
import math
from dataclasses import dataclass

from .errors import ValidationError

PURE_LOS = math.inf

METHODS = ("random", "lower_bound", "lower_bound_qb", "ao", "numerical", "upper_bound")


def is_pure_los(kappa):
    """True when ``kappa`` is the pure line-of-sight marker."""
    return math.isinf(kappa)


@dataclass(frozen=True)
class ArrayGeometry:
    """Uniform rectangular array in the y-z plane; spacing in wavelengths."""

    n_y: int
    n_z: int
    spacing: float

    @property
    def size(self):
        return self.n_y * self.n_z

    def validate(self, name="array"):
        if self.n_y < 1 or self.n_z < 1:
            raise ValidationError(f"{name}: n_y and n_z must be >= 1")
        if not self.spacing > 0:
            raise ValidationError(f"{name}: spacing must be > 0")


@dataclass(frozen=True)
class RayParams:
    """Clustered-ray statistics. All angles in degrees.

    Central azimuths are Gaussian (``central_az_mean``, ``central_az_std``),
    sub-ray azimuth offsets Laplacian with scale ``subray_az_std``. Central
    elevations are Laplacian around ``central_el_mean`` with scale
    ``central_el_scale``; sub-ray elevation offsets Laplacian with scale
    ``subray_el_scale``.
    """

    clusters: int
    subrays: int
    central_az_mean: float
    central_az_std: float
    subray_az_std: float
    central_el_scale: float
    subray_el_scale: float
    central_el_mean: float = 90.0

    def validate(self, name="rays"):
        if self.clusters < 1 or self.subrays < 1:
            raise ValidationError(f"{name}: clusters and subrays must be >= 1")
        for f in ("central_az_std", "subray_az_std", "central_el_scale", "subray_el_scale"):
            if not getattr(self, f) > 0:
                raise ValidationError(f"{name}: {f} must be > 0")


@dataclass(frozen=True)
class LinkGainParams:
    reference_power_db: float
    pathloss_exponent: float
    shadow_std_db: float = 0.0

    def validate(self, name="link"):
        if self.pathloss_exponent < 0:
            raise ValidationError(f"{name}: pathloss exponent must be >= 0")
        if self.shadow_std_db < 0:
            raise ValidationError(f"{name}: shadow std must be >= 0")


# Broad spread used for both UE links, narrow spread for RIS-BS.
UE_RAYS = RayParams(20, 20, 0.0, 31.64, 24.25, 6.12, 1.84)
BR_RAYS = RayParams(3, 16, 0.0, 14.4, 6.24, 1.9, 1.37)


def ura_shape(n):
    """Factor ``n`` into the most square ``(n_y, n_z)`` with ``n_y >= n_z``."""
    nz = int(math.isqrt(n))
    while n % nz:
        nz -= 1
    return n // nz, nz


@dataclass(frozen=True)
class ScenarioConfig:
    bs: ArrayGeometry = ArrayGeometry(8, 4, 0.5)
    ris: ArrayGeometry = ArrayGeometry(8, 8, 0.2)
    users: int = 2
    kappa_d: float = 1.0
    kappa_ru: float = 1.0
    kappa_br: float = PURE_LOS
    rays_ue: RayParams = UE_RAYS
    rays_br: RayParams = BR_RAYS
    reference_power_db: float = 45.0
    pathloss_d: float = 3.5
    pathloss_ru: float = 2.0
    shadow_d_db: float = 0.0
    shadow_ru_db: float = 0.0
    cell_radius: float = 50.0
    exclusion_radius: float = 5.0
    ris_distance: float = 10.0
    trials: int = 500
    seed: int = 0
    methods: tuple = METHODS
    quant_bits: int = 2
    ao_epsilon: float = 1e-6
    ao_max_sweeps: int = 100
    numerical_restarts: int = 4
    numerical_steps: int = 300

    def __post_init__(self):
        self.validate()

    @property
    def n_bs(self):
        return self.bs.size

    @property
    def n_ris(self):
        return self.ris.size

    @property
    def gain_d(self):
        return LinkGainParams(self.reference_power_db, self.pathloss_d, self.shadow_d_db)

    @property
    def gain_ru(self):
        return LinkGainParams(self.reference_power_db, self.pathloss_ru, self.shadow_ru_db)

    def replace(self, **changes):
        return dataclasses.replace(self, **changes)

    def with_sizes(self, n_ris=None, users=None, n_bs=None):
        """Copy with RIS/BS sizes given as element counts (near-square URA)."""
        cfg = self
        if n_ris is not None:
            cfg = cfg.replace(ris=ArrayGeometry(*ura_shape(n_ris), cfg.ris.spacing))
        if n_bs is not None:
            cfg = cfg.replace(bs=ArrayGeometry(*ura_shape(n_bs), cfg.bs.spacing))
        if users is not None:
            cfg = cfg.replace(users=users)
        return cfg

    def validate(self):
        self.bs.validate("bs")
        self.ris.validate("ris")
        self.rays_ue.validate("rays_ue")
        self.rays_br.validate("rays_br")
        self.gain_d.validate("gain_d")
        self.gain_ru.validate("gain_ru")
        if self.users < 1:
            raise ValidationError("users must be >= 1")
        for name in ("kappa_d", "kappa_ru"):
            if not getattr(self, name) >= 0:
                raise ValidationError(f"{name} must be >= 0")
        if not self.kappa_br > 0:
            raise ValidationError("kappa_br must be > 0 (or inf for pure LOS)")
        if not self.exclusion_radius > 0:
            raise ValidationError("exclusion_radius must be > 0")
        if not self.cell_radius > self.exclusion_radius:
            raise ValidationError("cell_radius must exceed exclusion_radius")
        if not self.ris_distance > 0:
            raise ValidationError("ris_distance must be > 0")
        if self.trials < 1:
            raise ValidationError("trials must be >= 1")
        if not self.methods:
            raise ValidationError("methods must be non-empty")
        unknown = [m for m in self.methods if m not in METHODS]
        if unknown:
            raise ValidationError(f"unknown methods {unknown}; choose from {METHODS}")
        if len(set(self.methods)) != len(self.methods):
            raise ValidationError("methods must not repeat")
        if self.quant_bits < 1:
            raise ValidationError("quant_bits must be >= 1")
        if not self.ao_epsilon > 0 or self.ao_max_sweeps < 1:
            raise ValidationError("ao_epsilon must be > 0 and ao_max_sweeps >= 1")
        if self.numerical_restarts < 1 or self.numerical_steps < 1:
            raise ValidationError("numerical_restarts and numerical_steps must be >= 1")
        return self


# --- key = value serialization ----------------------------------------------

_NESTED = {"bs": ArrayGeometry, "ris": ArrayGeometry, "rays_ue": RayParams, "rays_br": RayParams}


def _format(value):
    if isinstance(value, tuple):
        return ", ".join(value)
    if isinstance(value, float) and math.isinf(value):
        return "inf"
    return repr(value) if isinstance(value, float) else str(value)


def _parse(kind, key, text):
    text = text.strip()
    try:
        if kind is tuple:
            return tuple(t.strip() for t in text.split(",") if t.strip())
        if kind is int:
            return int(text)
        if kind is float:
            if text.lower() in ("inf", "los", "pure_los"):
                return PURE_LOS
            return float(text)
    except ValueError as exc:
        raise ValidationError(f"bad value for {key!r}: {text!r}") from exc
    raise ValidationError(f"unsupported type for {key!r}")


def _field_types(cls):
    return {f.name: f.type for f in dataclasses.fields(cls)}


def config_items(config):
    """Flatten a config to ordered ``(key, text)`` pairs."""
    items = []
    for f in dataclasses.fields(config):
        value = getattr(config, f.name)
        if f.name in _NESTED:
            for sub in dataclasses.fields(value):
                items.append((f"{f.name}.{sub.name}", _format(getattr(value, sub.name))))
        else:
            items.append((f.name, _format(value)))
    return items


def dump_config(config):
    return "".join(f"{k} = {v}\n" for k, v in config_items(config))


def parse_config(text, base=None):
    """Parse ``key = value`` text on top of ``base`` (default profile)."""
    base = base or ScenarioConfig()
    parser = configparser.ConfigParser(inline_comment_prefixes=("#",), interpolation=None)
    try:
        parser.read_string("[scenario]\n" + text)
    except configparser.Error as exc:
        raise ValidationError(f"malformed config: {exc}") from exc
    top_types = _field_types(ScenarioConfig)
    top, nested = {}, {}
    for key, raw in parser["scenario"].items():
        if "." in key:
            group, sub = key.split(".", 1)
            if group not in _NESTED:
                raise ValidationError(f"unknown config key {key!r}")
            sub_types = _field_types(_NESTED[group])
            if sub not in sub_types:
                raise ValidationError(f"unknown config key {key!r}")
            nested.setdefault(group, {})[sub] = _parse(sub_types[sub], key, raw)
        elif key in top_types and key not in _NESTED:
            top[key] = _parse(top_types[key], key, raw)
        else:
            raise ValidationError(f"unknown config key {key!r}")
    for group, changes in nested.items():
        top[group] = dataclasses.replace(getattr(base, group), **changes)
    return dataclasses.replace(base, **top)


def load_config(path, base=None):
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ValidationError(f"cannot read config {path}: {exc}") from exc
    return parse_config(text, base)
