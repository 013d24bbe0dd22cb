from __future__ import annotations

from pathlib import Path

import pytest

from achronal.config import ConfigError, build_grid, build_kernel, build_region, build_state, load_config, parse_config
from achronal.surfaces import CHI, Box, HalfSpace, LightPlane, SpacelikePlane, Strip

DEFAULT = Path(__file__).resolve().parents[1] / "configs" / "default.cfg"


def test_default_config_loads():
    cfg = load_config(DEFAULT)
    assert build_state(cfg).m == 1.0
    assert build_kernel(cfg).r == 1.5
    assert build_grid(cfg).n == 20
    names = [n for n, _ in cfg.region_list("chi-compare")]
    assert names == ["chi_strip", "chi_box", "chi_upper"]
    assert cfg.section("contraction")["rhos"][-1] == 6.0


def test_defaults_fill_missing_sections():
    cfg = parse_config("[state]\nwidth = 1.5\n")
    assert cfg.section("aet")["alpha"] == -1.0
    assert cfg.section("state")["width"] == 1.5


def test_unknown_key_is_rejected():
    with pytest.raises(ConfigError, match="colour"):
        parse_config("[state]\ncolour = blue\n")


def test_unknown_section_is_rejected():
    with pytest.raises(ConfigError, match="nonsense"):
        parse_config("[nonsense]\na = 1\n")


def test_bad_value_names_key():
    with pytest.raises(ConfigError, match="width"):
        parse_config("[state]\nwidth = wide\n")
    with pytest.raises(ConfigError, match="center"):
        parse_config("[state]\ncenter = 1 2\n")


def test_missing_required_keys_are_named():
    with pytest.raises(ConfigError, match="projection"):
        parse_config("[region:a]\nsurface = chi\n")
    with pytest.raises(ConfigError, match="bound"):
        parse_config("[region:a]\nsurface = chi\nprojection = halfspace\n")
    cfg = parse_config("[state]\n")
    with pytest.raises(ConfigError, match="regions"):
        cfg.region_list("flux")


def test_undefined_region_reference():
    cfg = parse_config("[flux]\nregions = ghost\n")
    with pytest.raises(ConfigError, match="ghost"):
        cfg.region_list("flux")


def test_missing_file_names_path(tmp_path):
    with pytest.raises(ConfigError, match="nope.cfg"):
        load_config(tmp_path / "nope.cfg")


def test_region_builders():
    cfg = parse_config(
        """
[region:s]
surface = spacelike
slope = 0.1 0 0.2
t0 = 0.5
projection = strip
axis = 0 1 0
lo = -1
hi = 2
[region:l]
surface = light
direction = 1 0 0
projection = box
lo = -1 -1 -1
hi = 1 1 1
[region:h]
surface = chi
projection = halfspace
bound = 0.7
upper = false
"""
    )
    s = cfg.region("s")
    assert isinstance(s.surface, SpacelikePlane) and s.surface.offset == 0.5
    assert s.projection == Strip((0, 1, 0), -1, 2)
    lp = cfg.region("l")
    assert isinstance(lp.surface, LightPlane) and isinstance(lp.projection, Box)
    h = cfg.region("h")
    assert h.surface == CHI and h.projection == HalfSpace((0, 0, 1), 0.7, upper=False)


def test_invalid_region_geometry_is_config_error():
    cfg = parse_config("[region:bad]\nsurface = chi\nprojection = strip\nlo = 1\nhi = 0\n")
    with pytest.raises(ConfigError, match="bad"):
        cfg.region("bad")
    cfg = parse_config("[region:bad]\nsurface = chi\nprojection = strip\nlo = 1 2\nhi = 3\n")
    with pytest.raises(ConfigError, match="single number"):
        cfg.region("bad")


def test_gaussian_state_and_sigma_guard():
    cfg = parse_config("[state]\nfamily = gaussian\nsigma = 0.2\n")
    assert build_state(cfg).profile.sigma == pytest.approx(0.2)
    with pytest.raises(ValueError, match="too wide"):
        build_state(parse_config("[state]\nfamily = gaussian\nsigma = 0.3\n"))
    with pytest.raises(ConfigError):
        build_state(parse_config("[state]\nsigma = 0.3\n"))
