from __future__ import annotations

import math

import numpy as np
import pytest

from achronal import experiments as ex
from achronal.flux import flux
from achronal.minkowski import PoincareElement, boost, rotation
from achronal.report import read_csv_rows, write_report
from achronal.states import apply_rep
from achronal.surfaces import CHI, EPSILON, Region, Strip, boosted_plane, spacelike_plane

RHOS = (0.0, 2.0, 4.0)


@pytest.fixture(scope="module")
def boost_report(ref_state, spec):
    return ex.run_boost_limit(ref_state, spec)


@pytest.fixture(scope="module")
def contraction_report(ref_state, spec):
    return ex.run_contraction(ref_state, spec, rhos=RHOS)


def _same_verdicts(a, b):
    assert [(v.name, v.passed) for v in a] == [(v.name, v.passed) for v in b]
    for va, vb in zip(a, b):
        assert va.measured == pytest.approx(vb.measured, rel=1e-12, abs=1e-300)


def test_boost_limit_rows_and_verdicts(boost_report, spec, ref_state):
    vals = boost_report.column("value")
    assert boost_report.passed
    assert vals[0] == pytest.approx(flux(ref_state, Region(EPSILON, Strip.along_z(-1, 1)), spec).value, rel=1e-12)
    assert math.isinf(boost_report.rows[-1]["rho"])
    assert vals[-1] == pytest.approx(flux(ref_state, Region(CHI, Strip.along_z(-0.5, 0.5)), spec).value, rel=1e-12)


def test_verdicts_recomputed_from_csv(boost_report, tmp_path):
    paths = write_report(boost_report, tmp_path)
    rows = read_csv_rows(paths["csv"])
    _same_verdicts(ex.evaluate_boost_limit(rows, 1e-2), boost_report.verdicts)


def test_contraction_verdicts_recomputed_from_csv(contraction_report, tmp_path):
    rows = read_csv_rows(write_report(contraction_report, tmp_path)["csv"])
    p = contraction_report.params
    _same_verdicts(ex.evaluate_contraction(rows, p["threshold"], p["comoving_tol"], p["oracle_margin"]), contraction_report.verdicts)


def test_boost_limit_of_whole_plane_is_one(ref_state, spec):
    rep = ex.run_boost_limit(ref_state, spec, -math.inf, math.inf, (0.0, 2.0))
    assert np.allclose(rep.column("value"), 1.0, atol=1e-3)


def test_normalization_scaling_and_kernel_independence(ref_state, spec, spec2):
    base = ex.run_normalization(ref_state, spec, fft=None)
    assert base.passed and len(base.rows) == 3
    c = 0.5 + 1.5j
    scaled = ex.run_normalization(ref_state.scaled(c), spec, fft=None)
    assert np.allclose(scaled.column("value"), abs(c) ** 2 * base.column("value"), rtol=1e-12)
    assert np.allclose(scaled.column("strip_value"), abs(c) ** 2 * base.column("strip_value"), rtol=1e-10)
    other = ex.run_normalization(ref_state, spec2, fft=None)
    assert other.passed


def test_mctc_symmetric_state(ref_state, spec):
    rep = ex.run_mctc_c(ref_state, spec, alphas=(0.0,))
    assert rep.passed
    for r in rep.rows:
        assert r["chi_value"] == pytest.approx(0.5, abs=2e-3)
        assert r["spacelike_value"] == pytest.approx(0.5, abs=2e-3)


def test_aet_wide_and_degenerate_bands(ref_state, spec):
    wide = ex.run_aet(ref_state, spec, -4.0, 4.0)
    assert wide.passed
    x = [r for r in wide.rows if r["piece"] == "X"][0]["value"]
    band = flux(ref_state, Region(CHI, Strip.along_z(-4.0, 4.0)), spec).value
    assert x == pytest.approx(band, rel=1e-12)
    thin = ex.run_aet(ref_state, spec, 0.0, 1e-6)
    v = {r["piece"]: r["value"] for r in thin.rows}
    assert v["X"] < 1e-5
    assert v["Delta"] + v["Gamma"] == pytest.approx(1.0, abs=1e-2)


def test_contraction_rest_value_and_comoving(contraction_report, ref_state, spec):
    rows = contraction_report.rows
    p0 = flux(ref_state, Region(EPSILON, Strip.along_z(-0.25, 0.25)), spec).value
    assert rows[0]["value"] == pytest.approx(p0, rel=1e-12)
    assert all(abs(r["comoving"] - p0) <= 1e-3 for r in rows)
    assert all(r["value"] >= r["oracle"] - 1e-2 for r in rows)


def test_contraction_direction_is_irrelevant_for_symmetric_state(contraction_report, ref_state, spec):
    rep = ex.run_contraction(ref_state, spec, e=(0.6, 0.0, 0.8), rhos=RHOS)
    assert np.allclose(rep.column("value"), contraction_report.column("value"), rtol=1e-6)


def test_contraction_rejects_bad_input(ref_state, spec):
    with pytest.raises(ValueError):
        ex.run_contraction(ref_state, spec, e=(0, 0, 2), rhos=RHOS)
    with pytest.raises(ValueError):
        ex.run_contraction(ref_state, spec, delta=0.0, rhos=RHOS)


def test_frame_reduces_to_contraction(contraction_report, ref_state, spec):
    rep = ex.run_corollary_frame(ref_state, spec, rhos=RHOS)
    assert rep.experiment == "corollary-frame"
    assert rep.column("value").tolist() == contraction_report.column("value").tolist()


@pytest.mark.parametrize(
    "sigma, origin, direction",
    [
        (spacelike_plane(t0=1.5), (1.5, 0.0, 0.0, 0.0), (0.0, 0.0, 0.0, 1.0)),
        (spacelike_plane(t0=0.0), (0.0, 0.3, -0.2, 0.0), (0.0, 1.0, 0.0, 0.0)),
        (boosted_plane(0.8, (1.0, 0.0, 0.0)), (0.0, 0.0, 0.0, 0.0), (0.0, 0.0, 0.0, 1.0)),
    ],
    ids=["translated", "shifted-rotated", "boosted"],
)
def test_frame_covariance(contraction_report, ref_state, spec, sigma, origin, direction):
    # moving the state along with the frame reproduces the rest-frame experiment
    g = ex.frame_element(sigma, origin, direction)
    rep = ex.run_corollary_frame(apply_rep(g, ref_state), spec, sigma, origin, direction, rhos=RHOS)
    assert np.allclose(rep.column("value"), contraction_report.column("value"), rtol=1e-6)


def test_frame_element_maps_frame():
    from achronal.minkowski import act

    sigma = boosted_plane(0.5, (0.0, 1.0, 0.0), 0.2)
    d = np.array([0.0, 1.0, 0.0, 0.0])
    g = ex.frame_element(sigma, (0.2, 0.0, 0.0, 0.0), d)
    x = np.column_stack([np.zeros(20), np.random.default_rng(0).normal(size=(20, 3))])
    y = act(g, x)
    assert np.allclose(y[:, 0], sigma.tau(y[:, 1:]), atol=1e-12)


def test_frame_element_validation():
    with pytest.raises(ValueError):
        ex.frame_element(EPSILON, (1.0, 0, 0, 0), (0, 0, 0, 1))
    with pytest.raises(ValueError):
        ex.frame_element(EPSILON, (0, 0, 0, 0), (0, 0, 0, 2))
    with pytest.raises(ValueError):
        ex.frame_element(boosted_plane(1.0), (0, 0, 0, 0), (0, 0, 0, 1))


def test_current_eval_report(ref_state, spec):
    rep = ex.run_current_eval(ref_state, spec, [(0.3, 0.1, -0.2, 0.5), (0, 0, 0, 0)], n=8)
    assert rep.passed
    assert rep.columns[:4] == ["x0", "x1", "x2", "x3"]
    assert rep.rows[1]["divergence"] == 0.0


def test_monotone_helper():
    vals = np.array([0.1, 0.2, 0.19, 0.4])
    assert ex._monotone(vals, np.zeros(4), increasing=True) == pytest.approx(0.01)
    assert ex._monotone(vals, np.full(4, 0.01), increasing=True) < 0


def test_verdict_coerces_numpy():
    v = ex.Verdict("x", np.True_, np.float64(1.0), 2)
    assert type(v.passed) is bool and type(v.measured) is float
    assert v.as_dict() == {"name": "x", "pass": True, "measured": 1.0, "tolerance": 2.0}
