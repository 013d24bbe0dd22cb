"""INI-style experiment configuration with a closed schema.

Sections are fixed ([state], [kernel], [grid], [fft], one per subcommand)
plus any number of [region:NAME] sections.  Unknown sections and keys are
errors; every value is parsed on load so a bad file fails before any work.
"""
from __future__ import annotations

import configparser
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable

import numpy as np

from .chi import FFTGrid
from .flux import GridSpec
from .kernels import KernelSpec
from .states import MassShellState, bump_state, gaussian_state
from .surfaces import All, Box, HalfSpace, Region, Strip, boosted_plane, light_plane, spacelike_plane


class ConfigError(ValueError):
    pass


REQUIRED = object()


def _float(s: str) -> float:
    v = float(s)
    if math.isnan(v):
        raise ValueError("nan is not a valid value")
    return v


def _floats(s: str) -> tuple[float, ...]:
    return tuple(_float(t) for t in s.replace(",", " ").split())


def _vec3(s: str) -> tuple[float, float, float]:
    v = _floats(s)
    if len(v) != 3:
        raise ValueError(f"expected three numbers, got {len(v)}")
    return v


def _events(s: str) -> tuple[tuple[float, ...], ...]:
    out = []
    for chunk in s.split(";"):
        if chunk.strip():
            v = _floats(chunk)
            if len(v) != 4:
                raise ValueError(f"an event needs four coordinates, got {chunk.strip()!r}")
            out.append(v)
    if not out:
        raise ValueError("no events given")
    return tuple(out)


def _names(s: str) -> tuple[str, ...]:
    out = tuple(t.strip() for t in s.split(",") if t.strip())
    if not out:
        raise ValueError("empty list")
    return out


def _bool(s: str) -> bool:
    t = s.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


def _choice(*options: str) -> Callable[[str], str]:
    def parse(s: str) -> str:
        t = s.strip()
        if t not in options:
            raise ValueError(f"expected one of {options}, got {t!r}")
        return t

    return parse


Schema = dict[str, tuple[Callable[[str], Any], Any]]

SECTIONS: dict[str, Schema] = {
    "state": {
        "family": (_choice("bump", "gaussian"), "bump"),
        "m": (_float, 1.0),
        "p_max": (_float, 2.0),
        "center": (_vec3, (0.0, 0.0, 0.0)),
        "width": (_float, 2.0),
        "sigma": (_float, None),
        "normalize": (_bool, True),
    },
    "kernel": {"family": (_choice("power", "cos"), "power"), "r": (_float, 1.5)},
    "grid": {
        "n": (int, 20),
        "n_radial": (int, 24),
        "n_angle": (int, 16),
        "n_line": (int, 48),
        "estimate_error": (_bool, True),
    },
    "fft": {
        "ds_perp": (_float, 0.125),
        "ds3": (_float, 0.0625),
        "panel": (_float, 1.0),
        "panel_nodes": (int, 10),
        "anchors": (int, 512),
        "seed": (int, 0),
    },
    "current-eval": {
        "events": (_events, ((0.3, 0.1, -0.2, 0.5),)),
        "n": (int, 16),
        "h": (_float, 1e-3),
        "margin_tol": (_float, 1e-10),
    },
    "flux": {"regions": (_names, REQUIRED)},
    "normalize-check": {
        "tol_epsilon": (_float, 1e-3),
        "tol_chi": (_float, 1e-2),
        "tol_boosted": (_float, 1e-2),
        "boost_rho": (_float, 1.0),
        "window": (_float, 64.0),
        "fft": (_bool, True),
    },
    "boost-limit": {
        "lo": (_float, -1.0),
        "hi": (_float, 1.0),
        "rhos": (_floats, tuple(float(r) for r in range(7))),
        "gap_tol": (_float, 1e-2),
    },
    "mctc-c": {"alphas": (_floats, (0.0, 0.7)), "tol": (_float, 1e-2), "sum_tol": (_float, 2e-2)},
    "aet": {"alpha": (_float, -1.0), "beta": (_float, 1.0), "tol": (_float, 1e-2)},
    "contraction": {
        "delta": (_float, 0.25),
        "e": (_vec3, (0.0, 0.0, 1.0)),
        "rhos": (_floats, tuple(0.5 * k for k in range(13))),
        "threshold": (_float, 0.9),
        "comoving_tol": (_float, 1e-3),
        "oracle_margin": (_float, 1e-2),
    },
    "chi-compare": {"regions": (_names, REQUIRED), "tol": (_float, 1e-2)},
}

REGION_KEYS: Schema = {
    "surface": (_choice("spacelike", "light", "boosted", "epsilon", "chi"), REQUIRED),
    "projection": (_choice("all", "box", "strip", "halfspace"), REQUIRED),
    # surface parameters
    "slope": (_vec3, (0.0, 0.0, 0.0)),
    "t0": (_float, 0.0),
    "direction": (_vec3, (0.0, 0.0, 1.0)),
    "tau0": (_float, 0.0),
    "rho": (_float, 0.0),
    "boost_axis": (_vec3, (0.0, 0.0, 1.0)),
    # projection parameters
    "axis": (_vec3, (0.0, 0.0, 1.0)),
    "lo": (_floats, REQUIRED),
    "hi": (_floats, REQUIRED),
    "bound": (_float, REQUIRED),
    "upper": (_bool, True),
}
_PROJECTION_NEEDS = {"all": (), "box": ("lo", "hi"), "strip": ("lo", "hi"), "halfspace": ("bound",)}


@dataclass(frozen=True)
class Config:
    sections: dict[str, dict[str, Any]]
    regions: dict[str, dict[str, Any]]
    path: str | None = None

    def section(self, name: str) -> dict[str, Any]:
        return self.sections[name]

    def region(self, name: str) -> Region:
        if name not in self.regions:
            raise ConfigError(f"region {name!r} has no [region:{name}] section")
        return build_region(self.regions[name], name)

    def region_list(self, experiment: str) -> list[tuple[str, Region]]:
        names = self.sections[experiment]["regions"]
        if names is REQUIRED:
            raise ConfigError(f"[{experiment}] missing required key 'regions'")
        return [(n, self.region(n)) for n in names]


def _parse_section(name: str, items: dict[str, str], schema: Schema) -> dict[str, Any]:
    unknown = sorted(set(items) - set(schema))
    if unknown:
        raise ConfigError(f"[{name}] unknown key(s): {', '.join(unknown)}")
    out = {}
    for key, (parse, default) in schema.items():
        if key in items:
            try:
                out[key] = parse(items[key])
            except ValueError as exc:
                raise ConfigError(f"[{name}] {key}: {exc}") from None
        else:
            out[key] = default
    return out


def parse_config(text: str, path: str | None = None) -> Config:
    cp = configparser.ConfigParser(interpolation=None, default_section="__none__")
    try:
        cp.read_string(text, source=path or "<string>")
    except configparser.Error as exc:
        raise ConfigError(str(exc)) from None
    given = {s: dict(cp.items(s)) for s in cp.sections()}
    sections, regions = {}, {}
    for name, items in given.items():
        if name.startswith("region:"):
            rname = name.split(":", 1)[1].strip()
            if not rname:
                raise ConfigError("region section needs a name, e.g. [region:strip1]")
            regions[rname] = _parse_region(name, items)
        elif name not in SECTIONS:
            raise ConfigError(f"unknown section [{name}]")
    for name, schema in SECTIONS.items():
        sections[name] = _parse_section(name, given.get(name, {}), schema)
    return Config(sections, regions, path)


def _parse_region(name: str, items: dict[str, str]) -> dict[str, Any]:
    out = _parse_section(name, items, REGION_KEYS)
    for key in ("surface", "projection"):
        if out[key] is REQUIRED:
            raise ConfigError(f"[{name}] missing required key '{key}'")
    for key in _PROJECTION_NEEDS[out["projection"]]:
        if out[key] is REQUIRED:
            raise ConfigError(f"[{name}] missing required key '{key}' for projection = {out['projection']}")
    return out


def load_config(path: str | Path) -> Config:
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"config file not found: {p}")
    return parse_config(p.read_text(), str(p))


# --------------------------------------------------------------------------
# builders


def build_state(cfg: Config) -> MassShellState:
    s = cfg.section("state")
    if s["family"] == "bump":
        if s["sigma"] is not None:
            raise ConfigError("[state] sigma applies to family = gaussian only")
        return bump_state(s["m"], s["p_max"], s["center"], s["width"], s["normalize"])
    return gaussian_state(s["m"], s["p_max"], s["center"], s["sigma"], s["normalize"])


def build_kernel(cfg: Config) -> KernelSpec:
    k = cfg.section("kernel")
    return KernelSpec(cfg.section("state")["m"], k["r"], k["family"])


def build_grid(cfg: Config) -> GridSpec:
    return GridSpec(**cfg.section("grid"))


def build_fft(cfg: Config) -> FFTGrid:
    f = cfg.section("fft")
    return FFTGrid(f["ds_perp"], f["ds3"], f["panel"], f["panel_nodes"])


def _scalar(name: str, key: str, v: tuple[float, ...]) -> float:
    if len(v) != 1:
        raise ConfigError(f"[region:{name}] {key} must be a single number for a strip")
    return v[0]


def build_region(r: dict[str, Any], name: str = "?") -> Region:
    kind = r["surface"]
    if kind == "epsilon":
        surface = spacelike_plane()
    elif kind == "chi":
        surface = light_plane()
    elif kind == "spacelike":
        surface = spacelike_plane(r["slope"], r["t0"])
    elif kind == "light":
        surface = light_plane(r["direction"], r["tau0"])
    else:
        axis = np.asarray(r["boost_axis"])
        surface = boosted_plane(r["rho"], axis / np.linalg.norm(axis), r["t0"])
    proj = r["projection"]
    try:
        if proj == "all":
            projection = All()
        elif proj == "box":
            projection = Box(tuple(r["lo"]), tuple(r["hi"]))
        elif proj == "strip":
            projection = Strip(r["axis"], _scalar(name, "lo", r["lo"]), _scalar(name, "hi", r["hi"]))
        else:
            projection = HalfSpace(r["axis"], r["bound"], r["upper"])
        return Region(surface, projection)
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"[region:{name}] {exc}") from None
