"""Residual evaluation, convergence judgment, and mask-bit relevance."""
from __future__ import annotations

import dataclasses

import numpy as np
import pytest

from pmcsurf.coeffs import ModelParams
from pmcsurf.errors import ConfigError
from pmcsurf.fields import Grid, MASK_DOMAIN, MASK_NUPATH, MASK_SINGULAR
from pmcsurf.verify import (EQUATIONS, EXPERIMENTAL, IDENTITY_CLASS, MARGIN,
                            MASK_RELEVANCE, Thresholds, _max_stat, default_workers,
                            dz, dzbar, dzdzbar, verify_suite)

from conftest import build_family


def _analytic_errors(n):
    g = Grid(0.0, 1.0, 0.0, 1.0, n, n)
    X, Y = g.mesh()
    F = np.sin(X) * np.cos(Y)
    fx = np.cos(X) * np.cos(Y)
    fy = -np.sin(X) * np.sin(Y)
    inner = (slice(1, -1), slice(1, -1))
    e1 = np.abs(dz(F.astype(complex), g.hx, g.hy) - 0.5 * (fx - 1j * fy))[inner]
    e2 = np.abs(dzbar(F.astype(complex), g.hx, g.hy) - 0.5 * (fx + 1j * fy))[inner]
    e3 = np.abs(dzdzbar(F.astype(complex), g.hx, g.hy) + 0.5 * F)[inner]
    return (float(np.max(e1)), float(np.max(e2)), float(np.max(e3)))


def test_wirtinger_stencils_against_analytic_derivatives():
    coarse = _analytic_errors(33)
    fine = _analytic_errors(65)
    for mc, mf in zip(coarse, fine):
        assert mc <= 1e-4
        order = np.log2(mc / mf)
        assert 1.8 <= order <= 2.2


def test_equation_registry_is_consistent():
    assert set(MASK_RELEVANCE) == set(EQUATIONS)
    assert IDENTITY_CLASS <= set(EQUATIONS)
    assert EXPERIMENTAL <= set(EQUATIONS)
    assert not (IDENTITY_CLASS & EXPERIMENTAL)
    assert MARGIN >= 1


def test_max_stat_respects_relevant_bits_only():
    res = np.ones((7, 7), dtype=complex)
    res[3, 3] = 5.0
    mask = np.zeros((7, 7), dtype=np.uint8)
    mask[3, 3] = MASK_NUPATH
    assert _max_stat(res, mask, 0) == 5.0
    assert _max_stat(res, mask, MASK_NUPATH) == 1.0
    assert _max_stat(res, mask, MASK_NUPATH | MASK_DOMAIN) == 1.0
    mask[:] = MASK_SINGULAR
    assert np.isnan(_max_stat(res, mask, MASK_SINGULAR))
    # the two-node frame never contributes
    res[0, 0] = 100.0
    mask[:] = 0
    assert _max_stat(res, mask, 0) == 5.0


def test_single_surface_mode_judges_identities_only(locus_pair):
    coarse, _ = locus_pair
    rep = verify_suite(coarse)
    assert rep.degraded
    assert rep.exit_code == 0
    by_eq = {(r.equation, r.variant): r for r in rep.rows}
    ricci = by_eq[("E2_6_ricci", None)]
    assert ricci.passed is True and ricci.kind == "identity"
    stencil = by_eq[("E2_1", None)]
    assert stencil.passed is None
    assert stencil.note == "order requires a grid pair"
    row = stencil.row()
    assert "order" not in row and "max_fine" not in row


def test_locus_pair_passes_every_gated_equation(locus_pair):
    rep = verify_suite(*locus_pair)
    assert rep.passed and rep.exit_code == 0
    for r in rep.rows:
        if r.kind == "stencil" and r.order is not None:
            assert 1.7 <= r.order <= 2.3, (r.equation, r.order)
        if r.kind == "experimental":
            assert r.passed is None
    variants = [r.variant for r in rep.rows if r.equation == "E2_13"]
    assert sorted(variants) == ["alternate", "as_printed"]


def test_tampered_amplitude_column_flags_its_equations(locus_pair):
    coarse, fine = locus_pair
    # constant scalings of c are exactly the associated-family freedom, so an
    # additive offset is the smallest tamper the equations can see
    bad_c, bad_f = (dataclasses.replace(s, c=s.c + 1e-3)
                    for s in (coarse, fine))
    rep = verify_suite(bad_c, bad_f)
    assert rep.exit_code == 1
    by_eq = {r.equation: r for r in rep.rows}
    assert by_eq["E2_6_ricci"].passed is False
    assert by_eq["E2_5_codazzi_c"].passed is False
    untouched = by_eq["E2_1"]
    assert untouched.passed is True


def test_exact_zero_residuals_pass_without_an_order():
    pair = (build_family(17, tilt=0.0).fields, build_family(33, tilt=0.0).fields)
    rep = verify_suite(*pair)
    wedge = next(r for r in rep.rows if r.equation == "LEMMA1_WEDGE")
    assert wedge.passed is True
    assert wedge.order is None
    assert wedge.note == "residual at rounding floor"


def test_grid_pair_validation(locus_pair):
    coarse, fine = locus_pair
    with pytest.raises(ConfigError, match="finer"):
        verify_suite(fine, coarse)
    shifted = dataclasses.replace(
        coarse, grid=dataclasses.replace(coarse.grid, x1=1.5))
    with pytest.raises(ConfigError, match="rectangles"):
        verify_suite(shifted, fine)
    other = dataclasses.replace(coarse, params=ModelParams(rho=-3.0, b=2.0))
    with pytest.raises(ConfigError, match="parameters"):
        verify_suite(other, fine)


def test_report_serialization_and_table(locus_pair):
    rep = verify_suite(*locus_pair, thresholds=Thresholds(identity_tol=1e-10,
                                                          order_band=(1.7, 2.3)))
    d = rep.to_dict()
    assert d["passed"] is True
    assert d["order_band"] == [1.7, 2.3]
    assert len(d["rows"]) == len(EQUATIONS) + 1   # one extra variant row
    text = rep.table()
    assert "pass" in text and "recorded" in text and "E2_13[alternate]" in text


def test_worker_count_env_override(monkeypatch):
    monkeypatch.setenv("PMC_THREADS", "3")
    assert default_workers() == 3
    monkeypatch.setenv("PMC_THREADS", "bogus")
    with pytest.raises(ConfigError):
        default_workers()
    monkeypatch.delenv("PMC_THREADS")
    assert default_workers() >= 1


def test_serial_execution_matches_threaded(locus_pair):
    rep1 = verify_suite(*locus_pair, max_workers=1)
    rep2 = verify_suite(*locus_pair, max_workers=4)
    for r1, r2 in zip(rep1.rows, rep2.rows):
        assert r1.equation == r2.equation and r1.variant == r2.variant
        assert r1.max_coarse == r2.max_coarse
        assert r1.order == r2.order
