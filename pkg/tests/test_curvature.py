"""Curvature pipeline: catalogue invariants, identities, transformation laws."""

import itertools
import math

import numpy as np
import pytest

from conformal_gap_lab import curvature, expr, geometry
from conformal_gap_lab.curvature import (
    curvature_pack, frobenius, rescale_metric, warped_nabla_reference,
    warped_ricci_reference,
)
from conformal_gap_lab.geometry import (
    WarpedSpec, builtin_metric, pseudo_euclidean, sample_points,
)


def pack_at(name, seed=1, order=4, params=None):
    spec = builtin_metric(name, params)
    pt = sample_points(spec, 1, seed=seed)[0]
    return curvature_pack(spec, pt, order)


def test_flat_curvature_vanishes():
    spec = pseudo_euclidean(2, 2)
    pack = curvature_pack(spec, (0.3, -0.2, 0.5, 0.1))
    assert pack.riemann.norm() < 1e-14
    assert pack.weyl.norm() < 1e-14
    assert abs(pack.scalar) < 1e-14


def test_fubini_study_scalar_curvature_is_48():
    spec = builtin_metric("fubini_study")
    for pt in sample_points(spec, 5, seed=2):
        pack = curvature_pack(spec, pt, order=3)
        assert pack.scalar == pytest.approx(48.0, abs=1e-8)


def test_hyperbolic_dual_scalar_curvature_is_minus_48():
    spec = builtin_metric("fubini_study_hyperbolic")
    for pt in sample_points(spec, 5, seed=2):
        pack = curvature_pack(spec, pt, order=3)
        assert pack.scalar == pytest.approx(-48.0, abs=1e-8)


@pytest.mark.parametrize("name", ["taub_nut", "pp_wave", "pp_split"])
def test_ricci_flat_but_not_conformally_flat(name):
    pack = pack_at(name, seed=4, order=3)
    assert pack.ricci.norm() < 1e-8
    assert pack.weyl.norm() > 1e-3


def test_lorentz3d_dual_cotton_is_6_dydy_up_to_orientation():
    # with eps oriented by the coordinate order (x, y, t) the dual Cotton
    # comes out +6 dy dy; the opposite orientation realizes the -6 sign
    for h in ("0", "sin(y)"):
        spec = builtin_metric("lorentz3d", {"h": h})
        for pt in sample_points(spec, 3, seed=5):
            pack = curvature_pack(spec, pt, order=4)
            ytilde = curvature.dual_cotton_3d(pack)
            expected = np.zeros((3, 3))
            expected[1, 1] = 6.0
            assert np.allclose(ytilde, expected, atol=1e-8)
            flipped = curvature.dual_cotton_3d(pack, orientation=-1)
            assert np.allclose(flipped, -expected, atol=1e-8)


def test_pp_wave_connection_lines():
    spec = builtin_metric("pp_wave")
    t, x = 0.25, 0.8
    pack = curvature_pack(spec, (t, x, -0.3, 0.6), order=3)
    gamma = pack.gamma.components
    g = pack.g.components
    # nabla d(coord mu) as a (0,2) tensor is -Gamma^mu_ab
    nabla_dt = -gamma[0]
    nabla_dx = -gamma[1]
    nabla_dy = -gamma[2]
    nabla_dz = -gamma[3]
    s = math.sqrt(2)
    e_t = np.zeros((4, 4)); e_t[0, 0] = 1.0
    exp_dt = s * e_t
    exp_dx = x * e_t.copy()
    exp_dx[1, 0] += s / 2
    exp_dx[0, 1] += s / 2
    exp_dy = np.zeros((4, 4)); exp_dy[2, 0] = exp_dy[0, 2] = s / 2
    exp_dz = np.zeros((4, 4))
    exp_dz[0, 1] = exp_dz[1, 0] = -x
    exp_dz[0, 3] = exp_dz[3, 0] = s / 2
    exp_dz -= s / 2 * math.exp(s * t) * g
    assert np.allclose(nabla_dt, exp_dt, atol=1e-10)
    assert np.allclose(nabla_dx, exp_dx, atol=1e-10)
    assert np.allclose(nabla_dy, exp_dy, atol=1e-10)
    assert np.allclose(nabla_dz, exp_dz, atol=1e-10)


def test_pp_split_connection_lines():
    spec = builtin_metric("pp_split")
    x = -0.7
    pack = curvature_pack(spec, (0.4, x, 0.2, -0.1), order=3)
    gamma = pack.gamma.components
    exp_dy = np.zeros((4, 4)); exp_dy[0, 0] = x
    exp_dz = np.zeros((4, 4)); exp_dz[0, 1] = exp_dz[1, 0] = -x
    assert np.allclose(-gamma[2], exp_dy, atol=1e-10)
    assert np.allclose(-gamma[3], exp_dz, atol=1e-10)
    assert np.allclose(gamma[0], 0.0, atol=1e-10)
    assert np.allclose(gamma[1], 0.0, atol=1e-10)


@pytest.mark.parametrize("name", [
    "fubini_study", "fubini_study_hyperbolic", "taub_nut", "pp_wave", "pp_split",
])
def test_weyl_totally_trace_free(name):
    pack = pack_at(name, seed=6, order=3)
    W = pack.weyl.components
    ginv = pack.ginv.components
    wnorm = max(pack.weyl.norm(), 1e-30)
    for axes in itertools.combinations(range(4), 2):
        letters = "abcd"
        spec_str = (
            f"{letters[axes[0]]}{letters[axes[1]]},abcd->"
            + "".join(c for k, c in enumerate(letters) if k not in axes)
        )
        assert frobenius(np.einsum(spec_str, ginv, W)) < 1e-9 * wnorm


@pytest.mark.parametrize("name", ["taub_nut", "pp_wave", "fubini_study"])
def test_divergence_of_weyl_identity(name):
    spec = builtin_metric(name)
    pt = sample_points(spec, 1, seed=7)[0]
    assert curvature.bianchi_check(spec, pt) < 1e-7


def test_divergence_identity_flat_is_zero():
    assert curvature.bianchi_check(pseudo_euclidean(0, 4), (0.1, 0.2, 0.3, 0.4)) < 1e-14


def test_divergence_identity_rejects_n3():
    with pytest.raises(ValueError):
        curvature.bianchi_check(builtin_metric("lorentz3d"), (0.1, 0.2, 0.3))


@pytest.mark.parametrize("name", ["fubini_study", "taub_nut", "pp_wave", "pp_split"])
def test_four_dim_weyl_square_identity(name):
    # |W| delta_c^a = 4 W^{rsta} W_{rstc} in dimension 4
    pack = pack_at(name, seed=8, order=3)
    W = pack.weyl.components
    ginv = pack.ginv.components
    Wup = np.einsum("abcd,ar,bs,ct,du->rstu", W, ginv, ginv, ginv, ginv)
    wsq = float(np.einsum("rstu,rstu->", Wup, W))
    rhs = 4.0 * np.einsum("rsta,rstc->ac", Wup, W)
    assert np.allclose(wsq * np.eye(4), rhs, atol=1e-8 * max(abs(wsq), 1.0))


def _eh_contraction(pack, rng):
    """Antisymmetrized Weyl-delta expression contracted with random vectors."""
    n = pack.n
    W = pack.weyl.components
    ginv = pack.ginv.components
    Wmixed = np.einsum("abcd,ar,bs->rscd", W, ginv, ginv)  # W^{ab}_{cd}
    w = [rng.normal(size=n) for _ in range(n - 1)]  # lower the a-slots
    u = [rng.normal(size=n) for _ in range(n - 1)]  # raise the c-slots
    w = [v / np.linalg.norm(v) for v in w]
    u = [v / np.linalg.norm(v) for v in u]
    total = 0.0
    perms = list(itertools.permutations(range(n - 1)))
    for pa in perms:
        sa = _perm_sign(pa)
        Wa = np.einsum("rscd,r,s->cd", Wmixed, w[pa[0]], w[pa[1]])
        for pc in perms:
            sc = _perm_sign(pc)
            term = float(Wa @ u[pc[1]] @ u[pc[0]])  # W(w,w')_{c1 c2} u^{c1} u^{c2}
            for k in range(2, n - 1):
                term *= float(w[pa[k]] @ u[pc[k]])
            total += sa * sc * term
    return total / (math.factorial(n - 1) ** 2)


def _perm_sign(perm):
    sign = 1
    for i in range(len(perm)):
        for j in range(i + 1, len(perm)):
            if perm[i] > perm[j]:
                sign = -sign
    return sign


@pytest.mark.parametrize("name,n", [("taub_nut", 4), ("pp_split", 4)])
def test_edgar_hoglund_contraction_n4(name, n):
    pack = pack_at(name, seed=9, order=3)
    rng = np.random.default_rng(0)
    for _ in range(3):
        val = _eh_contraction(pack, rng)
        assert abs(val) < 1e-8 * max(pack.weyl.norm(), 1.0)


def test_edgar_hoglund_contraction_n5():
    ws = WarpedSpec(pseudo_euclidean(0, 1), builtin_metric("fubini_study"), 1.0, -1.0)
    spec = geometry.warped_product(ws)
    pt = sample_points(spec, 1, seed=10)[0]
    pack = curvature_pack(spec, pt, order=3)
    rng = np.random.default_rng(1)
    for _ in range(2):
        val = _eh_contraction(pack, rng)
        assert abs(val) < 1e-8 * max(pack.weyl.norm(), 1.0)


def test_rescale_identity_leaves_pack_unchanged():
    spec = builtin_metric("taub_nut")
    same = rescale_metric(spec, expr.ONE)
    pt = sample_points(spec, 1, seed=11)[0]
    a = curvature_pack(spec, pt, order=3)
    b = curvature_pack(same, pt, order=3)
    assert np.allclose(a.riemann.components, b.riemann.components, atol=1e-12)
    assert a.scalar == pytest.approx(b.scalar, abs=1e-12)


def test_schouten_transformation_law():
    # omega = e^{x1} on flat R^4 and on taub_nut
    for name in ("flat", "taub_nut"):
        spec = pseudo_euclidean(0, 4) if name == "flat" else builtin_metric("taub_nut")
        omega = expr.parse("exp(x1)", 4) if name == "flat" else expr.parse("1 + x1/9", 4)
        pt = sample_points(spec, 1, seed=12)[0]
        pack = curvature_pack(spec, pt, order=3)
        hatted = curvature_pack(rescale_metric(spec, omega), pt, order=3)
        expected = curvature.schouten_transform_reference(pack, omega)
        scale = max(frobenius(expected), 1.0)
        assert frobenius(hatted.schouten.components - expected) < 1e-8 * scale
        expected_j = curvature.j_transform_reference(pack, omega)
        assert hatted.j == pytest.approx(expected_j, abs=1e-8 * max(1.0, abs(expected_j)))


def test_weyl_conformal_covariance():
    spec = builtin_metric("taub_nut")
    omega = expr.parse("1 + x2/7 + x1/11", 4)
    pt = sample_points(spec, 1, seed=13)[0]
    pack = curvature_pack(spec, pt, order=3)
    hatted = curvature_pack(rescale_metric(spec, omega), pt, order=3)
    w = expr.evaluate_at(omega, pt, spec.params_dict)
    expected = w ** 2 * pack.weyl.components
    assert frobenius(hatted.weyl.components - expected) < 1e-8 * frobenius(expected)


def test_vector_connection_transformation_law():
    # nabla-hat_a mu^b = nabla_a mu^b + Ups_a mu^b - mu_a Ups^b + (mu.Ups) delta_a^b
    spec = builtin_metric("pp_split")
    omega = expr.parse("exp(x1/5 + x3/7)", 4)
    pt = sample_points(spec, 1, seed=14)[0]
    pack = curvature_pack(spec, pt, order=3)
    hatted = curvature_pack(rescale_metric(spec, omega), pt, order=3)
    _, ups, _ = curvature.upsilon_jets(spec, omega, pt, order=2)
    rng = np.random.default_rng(2)
    mu = rng.normal(size=4)
    nab = np.einsum("bar,r->ab", pack.gamma.components, mu)       # nabla_a mu^b for constant mu
    nab_hat = np.einsum("bar,r->ab", hatted.gamma.components, mu)
    mu_low = pack.g.components @ mu
    ups_up = pack.ginv.components @ ups
    expected = (nab + np.outer(ups, mu) - np.outer(mu_low, ups_up)
                + float(mu @ ups) * np.eye(4))
    assert np.allclose(nab_hat, expected, atol=1e-9)


def test_rescale_rejects_nonpositive_omega():
    spec = pseudo_euclidean(0, 2)
    with pytest.raises(ValueError):
        rescale_metric(spec, expr.parse("x1", 2))


def test_warped_ricci_reference_matches_jets():
    base = pseudo_euclidean(0, 2)
    fiber = builtin_metric("fubini_study")
    ws = WarpedSpec(base, fiber, 1.0, -1.0)
    spec = geometry.warped_product(ws)
    for pt in sample_points(spec, 5, seed=15):
        pack = curvature_pack(spec, pt, order=3)
        ric_ref, sc_ref = warped_ricci_reference(ws, pt)
        assert frobenius(pack.ricci.components - ric_ref) < 1e-8 * max(1.0, frobenius(ric_ref))
        assert pack.scalar == pytest.approx(sc_ref, abs=1e-8 * max(1.0, abs(sc_ref)))


def test_warped_nabla_reference_matches_jets():
    base = pseudo_euclidean(1, 1)
    fiber = builtin_metric("taub_nut")
    ws = WarpedSpec(base, fiber, 1.0, -0.5)
    spec = geometry.warped_product(ws)
    rng = np.random.default_rng(3)
    for pt in sample_points(spec, 5, seed=16):
        pack = curvature_pack(spec, pt, order=3)
        vec = rng.normal(size=6)
        cov = rng.normal(size=6)
        nv_ref, np_ref = warped_nabla_reference(ws, pt, vec, cov)
        gamma = pack.gamma.components
        nv = np.einsum("bac,c->ab", gamma, vec)
        npv = -np.einsum("cab,c->ab", gamma, cov)
        assert np.allclose(nv, nv_ref, atol=1e-8 * max(1.0, frobenius(nv_ref)))
        assert np.allclose(npv, np_ref, atol=1e-8 * max(1.0, frobenius(np_ref)))


def test_warp_quantity_formulas_signed():
    ws = WarpedSpec(pseudo_euclidean(1, 1), builtin_metric("pp_wave"), 2.0, 0.3)
    f, df, hess, lap, df_sq, signs = curvature._warp_data(ws, (0.4, -0.6, 0, 0, 0, 0))
    x = np.array([0.4, -0.6])
    sgn = np.array([-1.0, 1.0])
    nrm = float(sgn @ (x * x))
    assert f == pytest.approx(2.0 + 0.3 * nrm)
    assert np.allclose(df, 2 * 0.3 * sgn * x)
    assert np.allclose(hess, 2 * 0.3 * np.diag(sgn))
    assert lap == pytest.approx(2 * 2 * 0.3)
    assert df_sq == pytest.approx(4 * 0.09 * nrm)
