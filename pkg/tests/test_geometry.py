import itertools
import math
import warnings

import numpy as np
import pytest

from nsbell.core import LocalState, MomentVector, product_box
from nsbell.geometry import (
    BallSpec,
    CuboidSpec,
    FeasibilityRegion,
    ball_contains,
    ball_equivalence_check,
    cuboid_feasible,
    read_region_csv,
    sample_ball,
    scan_lh_region,
    scan_local_region,
    tightness_check,
)
from nsbell.measurements import MeasurementFamily, noisy_bell_probs, operator_set, outcome_values

IDEAL = MeasurementFamily.ideal()


@pytest.mark.parametrize("m, inside", [((0, 0, 0), True), ((1, 0, 0), True), ((1, 1, 0), False)])
def test_ball_contains_examples(m, inside):
    assert ball_contains(BallSpec(1.0), MomentVector(*m)) is inside


def test_clipping_is_applied():
    # inside radius sqrt(3) but would need |m_x| > 1; MomentVector forbids that, so use the array form
    from nsbell.geometry import in_ball

    assert not in_ball(np.array([1.2, 0.0, 0.0]), math.sqrt(3), clipped=True)
    assert in_ball(np.array([1.2, 0.0, 0.0]), math.sqrt(3), clipped=False)


@pytest.mark.parametrize("grid_n", [21, 51])
def test_ball_equivalence(grid_n):
    rep = ball_equivalence_check(grid_n)
    assert rep.points == grid_n**3
    assert rep.passed
    assert rep.max_abs_p4_at_disagreement <= 1e-9


def test_ball_equivalence_needs_two_points():
    with pytest.raises(ValueError):
        ball_equivalence_check(1)


def test_sample_ball_is_inside_and_fills(rng):
    pts = sample_ball(math.sqrt(2), 20000, rng)
    assert pts.shape == (20000, 3)
    assert np.all(np.einsum("ij,ij->i", pts, pts) <= 2 + 1e-12)
    assert np.all(np.abs(pts) <= 1)
    # radial law: fraction within half radius of the unclipped unit ball is 1/8
    unit = sample_ball(1.0, 40000, rng)
    frac = np.mean(np.linalg.norm(unit, axis=1) < 0.5)
    assert abs(frac - 0.125) < 0.01


@pytest.mark.parametrize("family", [MeasurementFamily.ideal(), MeasurementFamily.noisy(0.5), MeasurementFamily.noisy(0.25)], ids=str)
def test_tightness(family):
    assert tightness_check(family, 20000, seed=1) >= -1e-12


def test_tightness_on_sphere(rng):
    """Boundary pairs stress the scalar-product argument harder than volume samples."""
    ops = operator_set(IDEAL)
    d = rng.standard_normal((50000, 2, 3))
    d /= np.linalg.norm(d, axis=-1, keepdims=True)
    assert outcome_values(ops, d[:, 0], d[:, 1]).min() >= -1e-12


def test_antipodal_boundary_pair():
    ops = operator_set(IDEAL)
    m = np.array([0.6, 0.0, 0.8])
    # 1/4 (1 + s . (m * m')) with m' = -m: k=1 has s=(+,-,+), so 1 - 0.36 - 0.64 = 0
    np.testing.assert_allclose(outcome_values(ops, m, -m), [0.0, 0.18, 0.32, 0.5], atol=1e-15)
    np.testing.assert_allclose(outcome_values(ops, m, m), [0.5, 0.32, 0.18, 0.0], atol=1e-15)


def test_scan_local_region_examples():
    r0 = scan_local_region(0.0, 3)
    assert r0.feasible[1, 1, 1] and not r0.feasible[2, 2, 2]

    r_half = scan_local_region(0.5, 3)
    assert r_half.feasible[2, 2, 1]  # (1, 1, 1/2): |m|^2 = 2 = rho^2
    assert not r_half.feasible[2, 2, 2]

    assert scan_local_region(2 / 3, 11).feasible.all()
    assert scan_local_region(0.8, 11).feasible.all()
    with pytest.raises(ValueError):
        scan_local_region(1.0, 5)


@pytest.mark.parametrize("lam", [0.0, 0.25, 0.5])
def test_region_equals_self_paired_positivity(lam):
    """Feasible points give nonnegative noisy outcomes; infeasible ones do not."""
    region = scan_local_region(lam, 11)
    for (px, py, pz), ok in region.points():
        s = LocalState(px, py, pz)
        worst = min(noisy_bell_probs(product_box(s, s), lam))
        if ok:
            assert worst >= -1e-9
        else:
            assert worst < 0


def test_slice_mode():
    r = scan_local_region(0.0, 5, slice_z=0.5)
    assert r.axes == ("p_x", "p_y")
    assert r.feasible[2, 2] and not r.feasible[4, 4] and r.feasible[4, 2]


@pytest.mark.parametrize(
    "l, h, ok",
    [(0.0, 1.0, True), (1.0, 1.0, False), (1 / math.sqrt(3) - 1e-6, 1 / math.sqrt(3) - 1e-6, True), (0.578, 0.578, False)],
)
def test_cuboid_ideal_examples(l, h, ok):
    assert cuboid_feasible(MeasurementFamily.nonmax(0.0), CuboidSpec(l, h)) is ok
    assert cuboid_feasible(IDEAL, CuboidSpec(l, h)) is ok


def test_cuboid_matches_closed_form_exhaustively():
    g = np.linspace(0, 1, 101)
    region = scan_lh_region(0.0, 101)
    hh, ll = np.meshgrid(g, g, indexing="ij")
    np.testing.assert_array_equal(region.feasible, 2 * ll**2 + hh**2 <= 1 + 1e-9)


def test_cuboid_vertex_check_is_enough(rng):
    """Random interior points of a feasible cube never do worse than its vertices."""
    fam = MeasurementFamily.nonmax(math.pi / 16)
    ops = operator_set(fam)
    spec = CuboidSpec(0.6, 0.5)
    assert cuboid_feasible(fam, spec)
    scale = np.array([spec.l, spec.l, spec.h])
    pts = rng.uniform(-1, 1, (20000, 2, 3)) * scale
    assert outcome_values(ops, pts[:, 0], pts[:, 1]).min() >= -1e-12


def test_cuboid_rejects_noisy():
    with pytest.raises(ValueError):
        cuboid_feasible(MeasurementFamily.noisy(0.1), CuboidSpec(0.1, 0.1))


def test_product_basis_is_unrestricted():
    assert scan_lh_region(math.pi / 4, 41).feasible.all()


@pytest.mark.parametrize("alpha", [k * math.pi / 16 for k in range(5)])
def test_cuboid_monotone_in_l_and_h(alpha):
    f = scan_lh_region(alpha, 51).feasible  # [h, l]
    # shrinking l or h keeps feasibility: each row/column is a prefix of True values
    assert np.all(f[:-1, :] >= f[1:, :])
    assert np.all(f[:, :-1] >= f[:, 1:])


def test_alpha_monotonicity_report():
    """Containment across alpha is reported, not asserted; the quantum region is contained in all."""
    regions = [scan_lh_region(k * math.pi / 16, 101).feasible for k in range(5)]
    for k in range(1, 5):
        assert np.all(regions[k] >= regions[0])
    broken = [(k, int((regions[k] & ~regions[k + 1]).sum())) for k in range(1, 4)]
    if any(n for _, n in broken):
        warnings.warn(f"feasible (l, h) region not monotone in alpha: {broken}")


def test_region_csv_round_trip():
    region = scan_lh_region(math.pi / 16, 11)
    text = region.to_csv()
    assert text.splitlines()[0].startswith("# axes: h,l; params: alpha=")
    back = read_region_csv(text)
    assert back.axes == ("h", "l")
    np.testing.assert_array_equal(back.feasible, region.feasible)
    assert text == scan_lh_region(math.pi / 16, 11).to_csv()


def test_region_rows_are_lexicographic():
    rows = scan_local_region(0.25, 3).to_csv().splitlines()[1:]
    coords = [tuple(float(v) for v in r.split(",")[:3]) for r in rows]
    assert coords == sorted(coords)
    assert coords == list(itertools.product((0.0, 0.5, 1.0), repeat=3))


def test_region_rejects_inconsistent_shapes():
    g = np.linspace(0, 1, 3)
    with pytest.raises(ValueError):
        FeasibilityRegion(("a",), (g,), np.ones(4, dtype=bool))
    with pytest.raises(ValueError):
        FeasibilityRegion(("a",), (g[::-1],), np.ones(3, dtype=bool))
