import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bieprecond.geometry import CurveKind, CurveSpec, build_grid, coarsen_geometry

SPECS = [CurveSpec.ellipse(1.0), CurveSpec.ellipse(3.0), CurveSpec.simple(),
         CurveSpec.moderate(), CurveSpec.flower(4), CurveSpec.flower(8)]


def test_circle_values():
    g = build_grid(CurveSpec.ellipse(1.0), 64)
    np.testing.assert_allclose(np.hypot(*g.position.T), 1.0, atol=1e-15)
    np.testing.assert_allclose(g.normal, g.position, atol=1e-14)
    np.testing.assert_allclose(g.curvature, 1.0, atol=1e-13)
    np.testing.assert_allclose(g.jacobian, 1.0, atol=1e-14)
    np.testing.assert_allclose(g.weights.sum(), 2 * np.pi, atol=1e-13)


def test_ellipse_curvature_closed_form():
    a = 4.0
    g = build_grid(CurveSpec.ellipse(a), 128)
    t = g.theta
    expect = a / (a ** 2 * np.sin(t) ** 2 + np.cos(t) ** 2) ** 1.5
    np.testing.assert_allclose(g.curvature, expect, rtol=1e-12)


@pytest.mark.parametrize("spec", SPECS, ids=lambda s: s.label)
def test_orientation_and_unit_normals(spec):
    g = build_grid(spec, 512)
    assert g.signed_area() > 0
    np.testing.assert_allclose(np.hypot(*g.normal.T), 1.0, atol=1e-13)
    # outward: normal points away from the origin for these star-shaped curves
    assert np.all(np.sum(g.normal * g.position, axis=1) > 0)


@pytest.mark.parametrize("spec,n", [(CurveSpec.ellipse(8.0), 256), (CurveSpec.simple(), 512),
                                    (CurveSpec.moderate(), 1024), (CurveSpec.flower(4), 32768)],
                         ids=["ellipse", "simple", "moderate", "flower4"])
def test_turning_number(spec, n):
    g = build_grid(spec, n)
    assert abs(g.turning_number_integral() - 2 * np.pi) < 1e-8


def test_sampled_curvature_extremes():
    # extremes over the grid points at the resolutions used for the figures
    simple = build_grid(CurveSpec.simple(), 128).curvature
    moderate = build_grid(CurveSpec.moderate(), 256).curvature
    assert simple.min() == pytest.approx(-27.4, abs=0.2)
    assert simple.max() == pytest.approx(17.4, abs=0.2)
    assert moderate.min() == pytest.approx(-188, rel=0.005)
    assert moderate.max() == pytest.approx(136, rel=0.005)


@pytest.mark.parametrize("bad", [dict(kind="ellipse", aspect=0.5), dict(kind="flower", lobes=1),
                                 dict(kind="flower", lobes=2.5), dict(kind="star")])
def test_invalid_specs(bad):
    with pytest.raises(ValueError):
        CurveSpec(**bad)


@pytest.mark.parametrize("n", [4, 12, 100])
def test_grid_size_must_be_power_of_two(n):
    with pytest.raises(ValueError):
        build_grid(CurveSpec.simple(), n)


def test_coarsen_same_size_is_identity():
    g = build_grid(CurveSpec.moderate(), 128)
    assert coarsen_geometry(g, 128) is g


def test_coarsen_matches_direct_for_bandlimited_curve():
    # the ellipse is band-limited, so spectral coarsening is exact
    fine = build_grid(CurveSpec.ellipse(3.0), 256)
    direct = build_grid(CurveSpec.ellipse(3.0), 32)
    coarse = coarsen_geometry(fine, 32)
    for attr in ("position", "normal", "curvature", "jacobian"):
        np.testing.assert_allclose(getattr(coarse, attr), getattr(direct, attr), atol=1e-12)
    assert coarse.coarsened_from == 256


def test_coarsen_composes():
    fine = build_grid(CurveSpec.flower(4), 512)
    once = coarsen_geometry(fine, 64)
    twice = coarsen_geometry(coarsen_geometry(fine, 128), 64)
    np.testing.assert_allclose(once.position, twice.position, atol=1e-13)


def test_arrays_read_only():
    g = build_grid(CurveSpec.simple(), 16)
    with pytest.raises(ValueError):
        g.position[0, 0] = 1.0


def test_csv_roundtrip(tmp_path):
    g = build_grid(CurveSpec.flower(3), 32)
    path = tmp_path / "g.csv"
    g.to_csv(path)
    data = np.loadtxt(path, delimiter=",", skiprows=1)
    assert path.read_text().splitlines()[0] == "j,theta,x,y,nx,ny,kappa,jac"
    np.testing.assert_allclose(data[:, 2:4], g.position, rtol=1e-15)
    np.testing.assert_allclose(data[:, 6], g.curvature, rtol=1e-15)


@settings(max_examples=25, deadline=None)
@given(aspect=st.floats(1.0, 20.0), log_n=st.integers(6, 9))
def test_ellipse_perimeter_quadrature(aspect, log_n):
    # trapezoid weights integrate the arclength of a smooth curve spectrally
    n = 2 ** log_n
    g = build_grid(CurveSpec.ellipse(aspect), n)
    ref = build_grid(CurveSpec.ellipse(aspect), 4096).weights.sum()
    if n >= 32 * aspect:
        assert abs(g.weights.sum() - ref) < 1e-8 * ref


@settings(max_examples=10, deadline=None)
@given(lobes=st.sampled_from([2, 4, 8, 16]), log_n=st.integers(6, 10))
def test_flower_symmetry(lobes, log_n):
    # rotating by one lobe permutes the grid
    n = 2 ** log_n
    g = build_grid(CurveSpec.flower(lobes), n)
    shift = n // lobes
    np.testing.assert_allclose(np.roll(g.curvature, shift), g.curvature, rtol=1e-9)
    np.testing.assert_allclose(np.roll(g.jacobian, shift), g.jacobian, rtol=1e-12)
    assert g.spec.kind is CurveKind.FLOWER
