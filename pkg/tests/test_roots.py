import cmath
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from blaschke_p2.core import (
    INF, BlaschkeSpec, Family, Sign, chordal, derivative, evaluate, involution_h, to_polynomial,
    value_and_derivative_array,
)
from blaschke_p2.roots import branch_points, generic_critical_points, local_order, preimages, unit_circle_seeds
from conftest import ALPHA, ring, two_zero


def _multiset(rs):
    return sorted(((z if z is not INF else complex(1e300, 0)), m) for z, m in zip(rs.roots, rs.multiplicities))


def _has(points, target, tol=1e-9):
    return any(chordal(p, target) < tol for p in points)


def eq8_modulus(r):
    return 1 / (r * math.sqrt(2)) * math.sqrt(3 - r**4 - math.sqrt((3 - r**4) ** 2 - 4 * r**4))


# -- preimages ---------------------------------------------------------------

def test_zero_fibre(fig1):
    rs = preimages(fig1, 0)
    a = fig1.a
    assert rs.total == 9
    assert sorted(rs.multiplicities) == [3, 3, 3]
    for target in (0, a, -a):
        i, d, _ = rs.nearest(target)
        assert d < 1e-9 and rs.multiplicities[i] == 3


def test_infinity_fibre(fig1):
    rs = preimages(fig1, INF)
    p = 1 / fig1.a.conjugate()
    assert rs.total == 9 and sorted(rs.multiplicities) == [3, 3, 3]
    for target in (p, -p, INF):
        i, d, _ = rs.nearest(target)
        assert d < 1e-9 and rs.multiplicities[i] == 3


def test_seed_fibre_on_circle(fig1):
    rs = preimages(fig1, fig1.seed_value)
    assert rs.multiplicities == [1] * 9
    assert np.allclose(np.abs(rs.finite()), 1, atol=1e-10)
    assert _has(rs.roots, -cmath.exp(1j * ALPHA))


def test_vieta_reconstruction(fig1):
    rng = np.random.default_rng(7)
    for w in rng.normal(size=5) + 1j * rng.normal(size=5):
        rs = preimages(fig1, complex(w))
        c = to_polynomial(fig1, complex(w)).coeffs
        monic = np.poly(np.array(rs.expanded(), dtype=complex))[::-1]
        assert np.allclose(monic, c / c[-1], rtol=1e-7, atol=1e-7 * np.max(np.abs(c / c[-1])))


@given(st.complex_numbers(max_magnitude=50, allow_nan=False, allow_infinity=False),
       st.sampled_from([two_zero(2 / 3), two_zero(0.5, Sign.MINUS), ring(0.8), ring(1.5, Sign.MINUS)]))
def test_multiplicity_sum(w, spec):
    rs = preimages(spec, w)
    assert rs.total == spec.degree
    assert all(r < 1e-8 for r in rs.residuals)


# -- seeds -------------------------------------------------------------------

def test_fig1_seeds(fig1):
    seeds = unit_circle_seeds(fig1)
    beta = math.acos(13 / 18)
    assert len(seeds) == 9
    assert abs(seeds[0] + cmath.exp(1j * ALPHA)) < 1e-12
    assert _has(seeds, cmath.exp(1j * (ALPHA + beta)))
    assert _has(seeds, cmath.exp(1j * (ALPHA - beta)))
    assert np.allclose(np.abs(seeds), 1, atol=1e-10)
    # counter-clockwise from zeta_0
    turn = [(cmath.phase(z / seeds[0])) % (2 * math.pi) for z in seeds]
    assert turn == sorted(turn)


def test_fig1_seed_symmetry(fig1):
    seeds = unit_circle_seeds(fig1)
    rot = cmath.exp(2j * ALPHA)
    for z in seeds:
        assert _has(seeds, rot * z.conjugate())


def test_ring_seeds_alpha_zero():
    spec = ring(0.6, alpha=0.0)
    seeds = unit_circle_seeds(spec)
    assert abs(seeds[0] + 1) < 1e-12
    for z in (-1, cmath.exp(1j * math.pi / 3), cmath.exp(-1j * math.pi / 3)):
        assert _has(seeds, z)


def test_quotient_seeds_follow_lift(threshold):
    seeds = unit_circle_seeds(threshold)
    assert len(seeds) == 9
    assert abs(seeds[0] + cmath.exp(1j * ALPHA)) < 1e-12
    for z in seeds:
        assert chordal(evaluate(threshold, z), threshold.seed_value) < 1e-8


# -- branch points -----------------------------------------------------------

def test_fig1_branch_set(fig1):
    bps = branch_points(fig1)
    crit = [bp for bp in bps if bp.source == "closed-form"]
    assert len(crit) == 4
    b = eq8_modulus(2 / 3) * cmath.exp(1j * ALPHA)
    assert abs(abs(b) - 0.40349) < 1e-4
    for target in (b, -b, 1 / b.conjugate(), -1 / b.conjugate()):
        assert _has([bp.location for bp in crit], target, 1e-10)
    for bp in crit:
        assert bp.order == 2
        assert abs(derivative(fig1, bp.location)) < 1e-10
    multiple = sorted(bp.order for bp in bps if bp.source != "closed-form")
    assert multiple == [3] * 6


@pytest.mark.parametrize("spec", [two_zero(2 / 3), two_zero(0.3), two_zero(0.7, Sign.MINUS),
                                  two_zero(0.5, Sign.MINUS), ring(2 / 3), ring(1.4, Sign.MINUS)])
def test_branch_set_h_symmetric(spec):
    locs = [bp.location for bp in branch_points(spec)]
    for z in locs:
        assert _has(locs, involution_h(z), 1e-8)


@pytest.mark.parametrize("spec", [two_zero(2 / 3), two_zero(0.7, Sign.MINUS), ring(2 / 3), ring(0.5)])
def test_closed_forms_match_generic(spec):
    # every finite critical point from P'Q - PQ' is covered by the branch set
    locs = [bp.location for bp in branch_points(spec)]
    for z in generic_critical_points(spec):
        assert _has(locs, z, 1e-4)


def test_threshold_circle_points(threshold):
    bps = branch_points(threshold)
    on_circle = [bp for bp in bps if bp.location is not INF and abs(abs(bp.location) - 1) < 1e-9]
    assert len(on_circle) == 2
    for sgn in (1, -1):
        target = sgn * cmath.exp(1j * (ALPHA + math.pi / 2))
        hit = [bp for bp in on_circle if abs(bp.location - target) < 1e-9]
        assert hit and hit[0].order == 3
    assert local_order(threshold, cmath.exp(1j * (ALPHA + math.pi / 2))) == 3


@pytest.mark.parametrize("r,expect", [(0.5, False), (1 / math.sqrt(3), True), (0.7, True), (0.95, True), (1.5, False)])
def test_circle_branch_points_exist(r, expect):
    spec = two_zero(r, Sign.MINUS)
    crit = [bp.location for bp in branch_points(spec) if bp.source == "closed-form"]
    assert any(abs(abs(z) - 1) < 1e-9 for z in crit) == expect


def test_sub_threshold_branch_points_on_line():
    spec = two_zero(0.5, Sign.MINUS)
    crit = [bp.location for bp in branch_points(spec) if bp.source == "closed-form"]
    assert len(crit) == 4
    axis = cmath.exp(1j * (ALPHA + math.pi / 2))
    for z in crit:
        assert abs((z / axis).imag) < 1e-12
        assert _has(crit, involution_h(z))
        assert abs(derivative(spec, z)) < 1e-10


def test_ring_branch_points_eq16():
    spec = ring(2 / 3)
    r, n = spec.r, spec.n
    q = r ** (2 * n)
    mod = (1 / (r * 2 ** (1 / (2 * n)))) * (3 - q * q - math.sqrt((3 - q * q) ** 2 - 4 * q * q)) ** (1 / (2 * n))
    crit = [bp for bp in branch_points(spec) if bp.source == "closed-form"]
    for k in range(n):
        bk = mod * cmath.exp(1j * ALPHA) * cmath.exp(2j * math.pi * k / n)
        assert _has([bp.location for bp in crit], bk, 1e-10)
        assert _has([bp.location for bp in crit], 1 / bk.conjugate(), 1e-10)
        assert abs(derivative(spec, bk)) < 1e-10


# -- numerically awkward fibres ---------------------------------------------------

def test_fivefold_pole_merges():
    # np.roots scatters a fivefold root by ~3e-4, wider than the first cluster radius
    spec = BlaschkeSpec(Family.TWO_ZERO, 5, 1.263976446831052 - 2.285269887147855j)
    rs = preimages(spec, INF)
    assert rs.multiplicities == [5, 5, 5] and max(rs.residuals) == 0


def test_tiny_target_keeps_far_roots():
    # leading coefficients ~1e-14 relative: the large roots are finite, not at infinity
    spec = BlaschkeSpec(Family.TWO_ZERO, 5, 0.125, Sign.MINUS)
    rs = preimages(spec, 1e-5)
    assert INF not in rs.roots and rs.total == 15
    assert sum(abs(z) > 100 for z in rs.roots) == 5
    assert max(rs.residuals) < 1e-12


def test_closed_form_small_q():
    # r^(2n) ~ 3e-9; the small root of the quadratic used to cancel away
    spec = BlaschkeSpec.polar(Family.RING_ZEROS, 5, 0.139, 0.4, Sign.MINUS)
    for bp in branch_points(spec):
        if bp.source == "closed-form":
            w = evaluate(spec, bp.location)
            sph = abs(derivative(spec, bp.location)) * (1 + abs(bp.location) ** 2) / (1 + abs(w) ** 2)
            assert sph < 1e-10


def test_derivative_far_out_on_quotient():
    spec = two_zero(0.69, Sign.MINUS)
    b, db = value_and_derivative_array(spec, np.array([1e200 + 0j, 1e40j]))
    assert np.all(np.isfinite(db))
    assert derivative(spec, 1e200 + 0j) == 0
