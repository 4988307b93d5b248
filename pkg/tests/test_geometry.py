"""Catalogue metrics, warped products, frame evaluation, sampling."""

import math

import numpy as np
import pytest

from conformal_gap_lab import expr, geometry, jets
from conformal_gap_lab.geometry import (
    CatalogueError, DomainError, MetricSpec, SingularMetricError, WarpedSpec,
    builtin_metric, catalogue_metric, metric_frame_at, pseudo_euclidean,
    sample_points, warped_product,
)


def values_of(Gjets):
    n = Gjets.shape[0]
    return np.array([[Gjets[i, j].value for j in range(n)] for i in range(n)])


def test_pseudo_euclidean_diagonals():
    assert values_of(geometry.metric_jets(pseudo_euclidean(0, 3), (0, 0, 0), 1)).tolist() == [
        [1, 0, 0], [0, 1, 0], [0, 0, 1]]
    g13 = values_of(geometry.metric_jets(pseudo_euclidean(1, 3), (0, 0, 0, 0), 1))
    assert np.allclose(g13, np.diag([-1, 1, 1, 1]))
    with pytest.raises(CatalogueError):
        pseudo_euclidean(0, 0)


def test_fubini_study_signature_at_default_point():
    spec = builtin_metric("fubini_study")
    _, _, sig = metric_frame_at(spec, geometry.default_point(spec), 2)
    assert sig == (0, 4)


def test_pp_wave_components_match_display():
    spec = builtin_metric("pp_wave")
    t, x = 0.4, 1.2
    G = values_of(geometry.metric_jets(spec, (t, x, 0.0, 0.0), 1))
    w = math.exp(-math.sqrt(2) * t)
    assert G[0, 0] == pytest.approx(x * x * w)
    assert G[0, 3] == pytest.approx(w)
    assert G[3, 0] == pytest.approx(w)
    assert G[1, 1] == pytest.approx(w)
    assert G[2, 2] == pytest.approx(w)
    assert G[3, 3] == 0.0


def test_pp_wave_inverse_matches_display():
    spec = builtin_metric("pp_wave")
    point = (0.0, 1.0, 0.0, 0.0)
    G, Ginv, _ = metric_frame_at(spec, point, 2)
    inv = values_of(Ginv)
    # e^{sqrt2 t} (-x^2 dz dz + dz dt + dt dz + dx^2 + dy^2) at t=0, x=1
    expected = np.zeros((4, 4))
    expected[3, 3] = -1.0
    expected[0, 3] = expected[3, 0] = 1.0
    expected[1, 1] = expected[2, 2] = 1.0
    assert np.allclose(inv, expected, atol=1e-12)


def test_lorentz3d_components():
    spec = builtin_metric("lorentz3d", {"h": "sin(y)"})
    x, y = 0.7, -0.3
    G = values_of(geometry.metric_jets(spec, (x, y, 0.5), 1))
    assert G[0, 0] == pytest.approx(1.0)
    assert G[1, 1] == pytest.approx(x ** 3 + math.sin(y) * x)
    assert G[1, 2] == pytest.approx(0.5)
    with pytest.raises(CatalogueError):
        builtin_metric("lorentz3d", {"h": "x + y"})


def test_unknown_builtin_and_bad_param():
    with pytest.raises(CatalogueError):
        builtin_metric("nope")
    with pytest.raises(CatalogueError):
        builtin_metric("taub_nut", {"m": -1.0})


def test_flat_inverse_is_itself():
    spec = pseudo_euclidean(2, 2)
    G, Ginv, _ = metric_frame_at(spec, (0.1, 0.2, 0.3, 0.4), 2)
    assert np.allclose(values_of(G), values_of(Ginv), atol=1e-14)


@pytest.mark.parametrize("name", ["fubini_study", "taub_nut", "pp_wave", "pp_split"])
def test_g_times_ginv_is_identity_jets(name):
    spec = builtin_metric(name)
    point = sample_points(spec, 1, seed=3)[0]
    G, Ginv, _ = metric_frame_at(spec, point, 3)
    n = spec.n
    for i in range(n):
        for j in range(n):
            acc = None
            for r in range(n):
                term = G[i, r] * Ginv[r, j]
                acc = term if acc is None else acc + term
            expected = np.zeros_like(acc.coeffs)
            if i == j:
                expected[0] = 1.0
            assert np.allclose(acc.coeffs, expected, atol=1e-12)


def test_warped_product_plain_product_when_b_zero():
    ws = WarpedSpec(pseudo_euclidean(0, 2), builtin_metric("pp_wave"), 1.0, 0.0)
    spec = warped_product(ws)
    assert spec.n == 6
    assert spec.signature == (1, 5)
    G = values_of(geometry.metric_jets(spec, (0.3, -0.2, 0.1, 0.5, 0.0, 0.2), 1))
    assert np.allclose(G[:2, :2], np.eye(2))
    assert np.allclose(G[:2, 2:], 0.0)


def test_warped_product_domain_excludes_zero_warp():
    ws = WarpedSpec(pseudo_euclidean(0, 1), builtin_metric("fubini_study"), 1.0, -1.0)
    spec = warped_product(ws)
    assert spec.n == 5
    fiber_pt = geometry.default_point(builtin_metric("fubini_study"))
    ok = (0.3,) + fiber_pt
    bad = (1.0,) + fiber_pt
    assert geometry.domain_ok(spec, ok)
    assert not geometry.domain_ok(spec, bad)
    with pytest.raises(DomainError):
        metric_frame_at(spec, bad, 2)


def test_degenerate_warp_rejected():
    with pytest.raises(CatalogueError):
        WarpedSpec(pseudo_euclidean(0, 1), builtin_metric("fubini_study"), 0.0, 0.0)


def test_warp_function_quantities():
    # df = 2b sum x_i dx_i, Hess f = 2b gbar, Lap f = 2(n-4)b, |df|^2 = 4 b^2 |x|^2
    ws = WarpedSpec(pseudo_euclidean(1, 1), builtin_metric("pp_split"), 0.5, -0.7)
    f = geometry.warp_function(ws)
    pt = (0.3, -0.4)
    env = jets.seed_jets(pt, 2)
    j = expr.evaluate(f, env)
    signs = np.array(ws.base_signs)
    x = np.array(pt)
    b = ws.b
    assert np.allclose(jets.gradient(j), 2 * b * signs * x, atol=1e-12)
    gbar = np.diag(signs)
    assert np.allclose(jets.hessian(j), 2 * b * gbar, atol=1e-12)
    lap = np.trace(np.diag(1 / signs) @ jets.hessian(j))
    assert lap == pytest.approx(2 * len(pt) * b)
    grad = jets.gradient(j)
    norm_sq_x = float(signs @ (x * x))
    assert grad @ np.diag(1 / signs) @ grad == pytest.approx(4 * b * b * norm_sq_x)


@pytest.mark.parametrize("name", [
    "fubini_study", "fubini_study_hyperbolic", "taub_nut", "pp_wave",
    "pp_split", "lorentz3d", "flat_r4", "flat_1_3",
    "warped_fs_n5", "warped_hfs_n6", "product_lorentz_n6", "product_split_n6",
])
def test_catalogue_signature_stable_over_samples(name):
    spec = catalogue_metric(name)
    for pt in sample_points(spec, 20, seed=11):
        G = geometry.metric_jets(spec, pt, 1)
        vals = np.array([[G[i, j].value for j in range(spec.n)] for i in range(spec.n)])
        assert geometry.signature_of(vals) == spec.signature


def test_signature_mismatch_detected():
    wrong = MetricSpec(
        n=2, signature=(0, 2),
        components=((expr.const(-1.0), expr.ZERO), (expr.ZERO, expr.const(1.0))),
        label="wrong",
        sample_box=((-1, 1), (-1, 1)),
    )
    with pytest.raises(SingularMetricError):
        metric_frame_at(wrong, (0.0, 0.0), 1)


def test_sampling_is_seeded_and_respects_domain():
    spec = builtin_metric("taub_nut")
    a = sample_points(spec, 5, seed=7)
    b = sample_points(spec, 5, seed=7)
    assert a == b
    for pt in a:
        assert geometry.domain_ok(spec, pt)


def test_load_metric_file():
    text = """
    dim = 2
    signature = 0,2
    g 1 1 : 1
    g 2 2 : x1^2
    domain : x1 - 0.1
    """
    spec = geometry.load_metric(text, label="cone")
    assert spec.n == 2
    assert geometry.domain_ok(spec, (0.5, 0.0))
    assert not geometry.domain_ok(spec, (0.05, 0.0))
    G, Ginv, sig = metric_frame_at(spec, (0.5, 0.0), 2)
    assert sig == (0, 2)
