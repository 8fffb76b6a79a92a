"""Tests for the implication structure among the three basic estimates."""

import math

import numpy as np
import pytest

from ellab import modelspace as ms
from ellab import nonlinearity as nl
from ellab import pdelab as pde
from ellab import relations as rel
from ellab.errors import HypothesisViolation

FLAT4 = ms.flat(4)
LANE_EMDEN = nl.power(2.0)


def small_corpus(count=6, m=512):
    solve = lambda bv: pde.solve_radial_bvp(FLAT4, LANE_EMDEN, 1.0, bv,
                                            pde.SolverConfig(m=m))
    _, corpus = rel.boundary_sweep(solve, 1e-2, 0.1, count=count)
    return corpus


# --- Harnack factor ----------------------------------------------------------

def test_harnack_constant_values():
    assert rel.harnack_constant(0.0, 1.0, 2.0) == 1.0
    assert rel.harnack_constant(1.0, 0.0, 7.0) == pytest.approx(math.e**2)
    assert rel.harnack_constant(4.0, 1.0, 1.0) == pytest.approx(
        math.exp(2.0 * math.sqrt(8.0)))


def test_harnack_constant_monotone():
    base = rel.harnack_constant(1.0, 1.0, 1.0)
    assert rel.harnack_constant(2.0, 1.0, 1.0) > base
    assert rel.harnack_constant(1.0, 2.0, 1.0) > base
    assert rel.harnack_constant(1.0, 1.0, 2.0) > base


def test_harnack_constant_rejects_bad_args():
    with pytest.raises(ValueError):
        rel.harnack_constant(-1.0, 0.0, 1.0)


# --- measured constants -------------------------------------------------------

def test_measured_constants_constant_profile():
    spec = nl.lichnerowicz(1, 1, 3, 0, 0.5)
    prof = pde.constant_profile(FLAT4, spec, 1.0, 1.0)
    mc = rel.measured_constants(prof, 0.0, 1.0)
    assert mc["C_L"] == 0.0
    assert mc["C_H"] == 1.0
    assert rel.harnack_constant(mc["C_L"], 0.0, 1.0) == 1.0


def test_measured_constants_appendix_closed_form():
    asp = ms.appendix_space(5.0, 2.0, 1.0)
    prof = pde.exact_profile(asp, 1.0, 2048)
    mc = rel.measured_constants(prof, asp.K, 1.0)
    # u = 16 mu^2/(mu^2+r^2)^2 is decreasing, so sup/inf has a closed form
    assert mc["C_H"] == pytest.approx(((asp.mu**2 + 1.0) / asp.mu**2) ** 2, rel=1e-12)


# --- implication suite ----------------------------------------------------------

def test_suite_lane_emden_corpus():
    corpus = small_corpus()
    rep = rel.implication_suite(corpus, 4.0, LANE_EMDEN, 0.0, 1.0)
    assert rep.arrows["gradient_to_harnack"]["sharp_bound_holds"]
    assert rep.arrows["bound_to_gradient"]["all_finite"]
    assert rep.arrows["harnack_to_bound"]["all_finite"]
    assert all(r["arrow_gradient_to_harnack"] for r in rep.rows)
    # the empirical envelope really bounds the corpus
    slope = rep.arrows["bound_to_gradient"]["envelope_slope"]
    for r in rep.rows:
        assert r["C_L_R"] <= slope * r["C_U_2R"] + 1e-12


def test_suite_includes_constant_and_exact_profiles():
    asp = ms.appendix_space(5.0, 2.0, 1.0)
    exact = pde.exact_profile(asp, 1.0, 1024)
    rep = rel.implication_suite([exact], 5.0, nl.power(2.0), asp.K, 1.0)
    assert rep.rows[0]["arrow_gradient_to_harnack"]


def test_suite_hypothesis_gate():
    spec = nl.lichnerowicz(1, 1, 3, 0, 0.5)  # sign-changing, unbounded index
    prof = pde.constant_profile(FLAT4, spec, 1.0, 1.0)
    with pytest.raises(HypothesisViolation):
        rel.implication_suite([prof], 4.0, spec, 0.0, 1.0)


def test_suite_report_serializes():
    from ellab import reporting
    rep = rel.implication_suite(small_corpus(count=3), 4.0, LANE_EMDEN, 0.0, 1.0)
    text = reporting.dumps(rep.as_dict())
    assert '"gradient_to_harnack"' in text
    header, cols = rep.csv_matrix()
    assert len(header) == len(cols)
    assert len(cols[0]) == 3


def test_boundary_sweep_is_deterministic():
    vals1, _ = rel.boundary_sweep(
        lambda bv: pde.solve_radial_bvp(FLAT4, LANE_EMDEN, 1.0, bv,
                                        pde.SolverConfig(m=256)),
        1e-3, 0.1, count=5)
    vals2, _ = rel.boundary_sweep(
        lambda bv: pde.solve_radial_bvp(FLAT4, LANE_EMDEN, 1.0, bv,
                                        pde.SolverConfig(m=256)),
        1e-3, 0.1, count=5)
    assert np.array_equal(vals1, vals2)
