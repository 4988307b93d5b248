"""Curvature machinery at a point, on top of jet arithmetic.

Conventions (fixed throughout the package):

* ``[nabla_a, nabla_b] v^c = R_ab^c_d v^d``; ``riemann_mixed[a, b, c, d]``
  stores ``R_ab^c_d`` and ``riemann[a, b, c, d]`` the all-down
  ``R_abcd = g_ce R_ab^e_d`` (first/third contraction gives Ricci).
* Schouten ``P = (Ric - J g) / (n - 2)`` with ``J = Sc / (2(n-1))``.
* Weyl from ``R_abcd = W_abcd + 2 g_c[a P_b]d + 2 g_d[b P_a]c``.
* Cotton ``Y_cab = nabla_a P_bc - nabla_b P_ac``.
* Volume form ``eps = sqrt(|det g|) * permutation symbol`` in coordinate
  orientation; its full self-contraction is ``sign(det g) * n!`` (the sign is
  forced for a real form on indefinite signatures).

Every tensor is carried as a numpy array of truncated Taylor coefficients,
last axis the coefficient axis, so covariant derivatives of anything computed
here are one :meth:`CurvatureFrame.cov_deriv` away.  A frame built at jet
order ``K`` holds the metric to order ``K``, Christoffels to ``K-1``,
curvature and Schouten to ``K-2``, and Cotton to ``K-3`` (so the default
``K = 4`` supports divergence-of-Weyl and tractor-curvature derivatives).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import expr, geometry, jets
from .geometry import MetricSpec, WarpedSpec
from .jets import conv, dcoeffs, truncate_coeffs


class ConventionError(RuntimeError):
    """A built-in consistency check of the curvature conventions failed."""


def frobenius(arr) -> float:
    return float(np.sqrt(np.sum(np.asarray(arr, dtype=float) ** 2)))


@dataclass
class TensorValue:
    """Dense component array tagged with index variance and conformal weight."""

    components: np.ndarray
    variance: tuple[str, ...]
    weight: int
    dim: int

    def __post_init__(self):
        self.components = np.asarray(self.components, dtype=float)
        if self.components.shape != (self.dim,) * len(self.variance):
            raise ValueError(
                f"component shape {self.components.shape} does not match "
                f"rank {len(self.variance)} in dimension {self.dim}"
            )

    def norm(self) -> float:
        return frobenius(self.components)


class CurvatureFrame:
    """All curvature tensors of one metric at one point, as jets."""

    def __init__(self, spec: MetricSpec, point, order: int = 4):
        if order < 2:
            raise ValueError("curvature needs jet order >= 2")
        if spec.n < 3:
            raise ValueError("curvature decompositions need dimension >= 3")
        self.spec = spec
        self.point = tuple(float(c) for c in point)
        self.order = order
        n = self.n = spec.n

        Gj, Ginvj, sig = geometry.metric_frame_at(spec, self.point, order)
        self.signature = sig
        self.g = np.stack([np.stack([Gj[i, j].coeffs for j in range(n)]) for i in range(n)])
        self.ginv = np.stack([np.stack([Ginvj[i, j].coeffs for j in range(n)]) for i in range(n)])

        # dg[i, a, b] = d_i g_ab, one jet order lower
        dg = np.stack([dcoeffs(self.g, i, n, order) for i in range(n)])
        m1 = order - 1
        ginv1 = self.at(self.ginv, m1)
        T = dg.transpose(2, 0, 1, 3) + dg.transpose(2, 1, 0, 3) - dg
        gamma = np.zeros((n, n, n, T.shape[-1]))
        for d in range(n):
            gamma += conv(ginv1[:, d][:, None, None, :], T[d][None, :, :, :], n, m1)
        self.gamma = 0.5 * gamma  # gamma[c, a, b] = Gamma^c_ab

        m2 = order - 2
        dgamma = np.stack([dcoeffs(self.gamma, i, n, m1) for i in range(n)])
        g2 = self.at(self.g, m2)
        ginv2 = self.at(self.ginv, m2)
        gam2 = self.at(self.gamma, m2)
        B1 = dgamma.transpose(0, 2, 1, 3, 4)            # [a, b, c, d] = d_a Gamma^c_bd
        gg = np.zeros((n, n, n, n, g2.shape[-1]))
        for r in range(n):
            left = np.moveaxis(gam2[:, :, r], 0, 1)      # [a, c]
            gg += conv(left[:, None, :, None, :], gam2[r][None, :, None, :, :], n, m2)
        rm = B1 - B1.transpose(1, 0, 2, 3, 4) + gg - gg.transpose(1, 0, 2, 3, 4)
        self.riemann_mixed = rm                           # [a, b, c, d] = R_ab^c_d

        rlow = np.zeros_like(rm)
        for e in range(n):
            rlow += conv(g2[:, e][None, None, :, None, :], rm[:, :, e, :, :][:, :, None, :, :], n, m2)
        self.riemann = rlow                               # R_abcd

        ricci = np.zeros((n, n, g2.shape[-1]))
        for r in range(n):
            ricci += rm[r, :, r, :, :]
        self.ricci = ricci
        self.sc = conv(ginv2, ricci, n, m2).sum(axis=(0, 1))
        self.j = self.sc / (2.0 * (n - 1))
        self.schouten = (ricci - conv(self.j[None, None, :], g2, n, m2)) / (n - 2)

        P = self.schouten
        t1 = conv(g2[:, None, :, None, :], P[None, :, None, :, :], n, m2)   # g_ca P_bd
        t2 = conv(g2[None, :, :, None, :], P[:, None, None, :, :], n, m2)   # g_cb P_ad
        t3 = conv(g2[None, :, None, :, :], P[:, None, :, None, :], n, m2)   # g_db P_ac
        t4 = conv(g2[:, None, None, :, :], P[None, :, :, None, :], n, m2)   # g_da P_bc
        self.weyl = rlow - t1 + t2 - t3 + t4

        # P with the second index raised (used by the tractor connection)
        self.schouten_mixed = np.zeros_like(P)
        for c in range(n):
            self.schouten_mixed += conv(
                ginv2[:, c][None, :, :], P[:, c][:, None, :], n, m2
            )  # [a, b] = P_a^b

        self.cotton = None
        if order >= 3:
            covP = self.cov_deriv(P, "dd", m2)            # [a, b, c] = nabla_a P_bc
            A = covP.transpose(2, 0, 1, 3)
            self.cotton = A - A.transpose(0, 2, 1, 3)     # [c, a, b] = Y_cab

        gval = self.g[..., 0]
        det = float(np.linalg.det(gval))
        self.det_sign = 1.0 if det > 0 else -1.0
        eps = np.zeros((n,) * n)
        root = math.sqrt(abs(det))
        for perm in itertools.permutations(range(n)):
            eps[perm] = _perm_sign(perm) * root
        self.eps = eps

    # helpers ----------------------------------------------------------------

    def at(self, arr: np.ndarray, m: int) -> np.ndarray:
        """Truncate a coefficient array from this frame to jet order m."""
        have = _order_of(arr.shape[-1], self.n)
        return truncate_coeffs(arr, self.n, have, m)

    def values(self, arr: np.ndarray) -> np.ndarray:
        return np.ascontiguousarray(arr[..., 0])

    def cov_deriv(self, T: np.ndarray, variance: str, m: int) -> np.ndarray:
        """Covariant derivative of a rank-k jet tensor: out[a, ...] = nabla_a T."""
        n = self.n
        out = np.stack([dcoeffs(T, a, n, m) for a in range(n)])
        G = self.at(self.gamma, m - 1)
        Tm = self.at(T, m - 1)
        for k, var_k in enumerate(variance):
            Tk = np.moveaxis(Tm, k, 0)                    # (r, *rest, C)
            rest = Tk.shape[1:-1]
            acc = np.zeros((n, n) + rest + (Tk.shape[-1],))
            for r in range(n):
                if var_k == "u":
                    left = np.moveaxis(G[:, :, r], 0, 1)  # (a, idx)
                else:
                    left = G[r]                            # (a, idx)
                lx = left[(slice(None), slice(None)) + (None,) * len(rest) + (slice(None),)]
                rx = Tk[r][(None, None) + (slice(None),) * len(rest) + (slice(None),)]
                acc += conv(lx, rx, n, m - 1)
            signed = acc if var_k == "u" else -acc
            out += np.moveaxis(signed, 1, 1 + k)
        return out

    def scalar_jet(self, node, m: int | None = None):
        """Evaluate an expression as a jet at this frame's point."""
        m = self.order if m is None else m
        env = jets.seed_jets(self.point, m)
        return expr.evaluate(node, env, self.spec.params_dict)

    def pack(self) -> "CurvaturePack":
        return CurvaturePack(self)


def _perm_sign(perm) -> int:
    sign = 1
    seen = [False] * len(perm)
    for i in range(len(perm)):
        if seen[i]:
            continue
        j = i
        length = 0
        while not seen[j]:
            seen[j] = True
            j = perm[j]
            length += 1
        if length % 2 == 0:
            sign = -sign
    return sign


@lru_cache(maxsize=None)
def _order_lookup(num_vars: int):
    return {jets.tables(num_vars, m).size: m for m in range(jets.MAX_ORDER + 1)}


def _order_of(size: int, num_vars: int) -> int:
    try:
        return _order_lookup(num_vars)[size]
    except KeyError:
        raise ValueError(f"coefficient count {size} matches no jet order") from None


class CurvaturePack:
    """Value-level curvature tensors with convention self-checks."""

    def __init__(self, frame: CurvatureFrame):
        self.frame = frame
        self.spec = frame.spec
        self.point = frame.point
        self.order = frame.order
        n = self.n = frame.n
        self.signature = frame.signature

        v = frame.values
        self.g = TensorValue(v(frame.g), ("d", "d"), 2, n)
        self.ginv = TensorValue(v(frame.ginv), ("u", "u"), -2, n)
        self.gamma = TensorValue(v(frame.gamma), ("u", "d", "d"), 0, n)
        self.riemann_mixed = TensorValue(v(frame.riemann_mixed), ("d", "d", "u", "d"), 0, n)
        self.riemann = TensorValue(v(frame.riemann), ("d", "d", "d", "d"), 2, n)
        self.ricci = TensorValue(v(frame.ricci), ("d", "d"), 0, n)
        self.scalar = float(frame.sc[0])
        self.j = float(frame.j[0])
        self.schouten = TensorValue(v(frame.schouten), ("d", "d"), 0, n)
        self.weyl = TensorValue(v(frame.weyl), ("d", "d", "d", "d"), 2, n)
        self.cotton = (
            TensorValue(v(frame.cotton), ("d", "d", "d"), 0, n)
            if frame.cotton is not None else None
        )
        self.eps = TensorValue(frame.eps, ("d",) * n, n, n)
        self._validate()

    def _validate(self) -> None:
        n = self.n
        g = self.g.components
        ginv = self.ginv.components
        R = self.riemann.components
        problems = []

        ric_ref = (n - 2) * self.schouten.components + self.j * g
        scale = max(frobenius(self.ricci.components), 1.0)
        if frobenius(self.ricci.components - ric_ref) > 1e-9 * scale:
            problems.append("Ric != (n-2) P + J g")
        if abs(self.scalar - 2 * (n - 1) * self.j) > 1e-10 * max(1.0, abs(self.scalar)):
            problems.append("Sc != 2 (n-1) J")

        rnorm = max(frobenius(R), 1e-30)
        if frobenius(R + R.transpose(1, 0, 2, 3)) > 1e-9 * rnorm:
            problems.append("Riemann not antisymmetric in the first pair")
        if frobenius(R + R.transpose(0, 1, 3, 2)) > 1e-9 * rnorm:
            problems.append("Riemann not antisymmetric in the last pair")
        if frobenius(R - R.transpose(2, 3, 0, 1)) > 1e-9 * rnorm:
            problems.append("Riemann not pair symmetric")
        cyc = R + R.transpose(1, 2, 0, 3) + R.transpose(2, 0, 1, 3)
        if frobenius(cyc) > 1e-9 * rnorm:
            problems.append("algebraic Bianchi identity fails")

        W = self.weyl.components
        wnorm = max(frobenius(W), 1e-30)
        for axes in ((0, 2), (0, 3), (1, 2), (1, 3)):
            if frobenius(_trace_pair(W, ginv, axes)) > 1e-9 * wnorm:
                problems.append(f"Weyl trace over axes {axes} nonzero")
                break

        # raising the last index repeatedly leaves the index order intact
        # (tensordot prepends the fresh index each time)
        eps = self.eps.components
        eps_up = eps
        for _ in range(n):
            eps_up = np.tensordot(ginv, eps_up, axes=([1], [n - 1]))
        total = float(np.tensordot(eps_up, eps, axes=n))
        if abs(abs(total) - math.factorial(n)) > 1e-9 * math.factorial(n):
            problems.append(f"eps normalization off: eps.eps = {total}")
        if abs(total - self.frame.det_sign * math.factorial(n)) > 1e-9 * math.factorial(n):
            problems.append("eps self-contraction sign does not match sign(det g)")

        if problems:
            raise ConventionError(
                f"curvature self-checks failed for {self.spec.label!r} at "
                f"{self.point}: " + "; ".join(problems)
            )


def _trace_pair(W: np.ndarray, ginv: np.ndarray, axes) -> np.ndarray:
    letters = "abcd"
    sub = letters[: W.ndim]
    i, j = axes
    lhs = f"{sub[i]}{sub[j]},{sub}->" + "".join(
        c for k, c in enumerate(sub) if k not in axes
    )
    return np.einsum(lhs, ginv, W)


@lru_cache(maxsize=512)
def _cached_frame(spec: MetricSpec, point: tuple, order: int) -> CurvatureFrame:
    return CurvatureFrame(spec, point, order)


def frame(spec: MetricSpec, point, order: int = 4) -> CurvatureFrame:
    return _cached_frame(spec, tuple(float(c) for c in point), order)


def curvature_pack(spec: MetricSpec, point, order: int = 4) -> CurvaturePack:
    """All curvature tensors at the point, with convention self-checks."""
    return frame(spec, point, max(order, 3)).pack()


# ---------------------------------------------------------------------------
# conformal rescaling

def rescale_metric(spec: MetricSpec, omega: expr.Node) -> MetricSpec:
    """Same chart with components omega^2 g_ab; omega must be positive."""
    for pt in geometry.sample_points(spec, 12, seed=20):
        if expr.evaluate_at(omega, pt, spec.params_dict) <= 0.0:
            raise ValueError(f"rescale factor is not positive at {pt}")
    w2 = expr.Pow(omega, 2)
    comps = tuple(
        tuple(expr.mul(w2, e) for e in row) for row in spec.components
    )
    return spec.with_components(comps, label=f"{spec.label}|rescaled")


def upsilon_jets(spec: MetricSpec, omega: expr.Node, point, order: int = 2):
    """Jet of log-derivative data for a rescale factor: returns (omega_jet, Upsilon, dUpsilon).

    Upsilon_a = d_a log omega; dUpsilon[a, b] = d_a d_b log omega (plain partials).
    """
    env = jets.seed_jets(point, order)
    w = expr.evaluate(omega, env, spec.params_dict)
    grad = jets.gradient(w)
    val = w.value
    ups = grad / val
    dups = None
    if order >= 2:
        dups = jets.hessian(w) / val - np.outer(ups, ups)
    return w, ups, dups


def schouten_transform_reference(pack: CurvaturePack, omega: expr.Node) -> np.ndarray:
    """Expected Schouten of omega^2 g from the transformation law."""
    _, ups, dups = upsilon_jets(pack.spec, omega, pack.point, order=2)
    gamma = pack.gamma.components
    g = pack.g.components
    ginv = pack.ginv.components
    cov_ups = dups - np.einsum("rab,r->ab", gamma, ups)
    ups_up = ginv @ ups
    return (
        pack.schouten.components
        - cov_ups
        + np.outer(ups, ups)
        - 0.5 * float(ups @ ups_up) * g
    )


def j_transform_reference(pack: CurvaturePack, omega: expr.Node) -> float:
    """Expected J of omega^2 g; the omega^-2 factor is the weight -2 bookkeeping."""
    w, ups, dups = upsilon_jets(pack.spec, omega, pack.point, order=2)
    gamma = pack.gamma.components
    ginv = pack.ginv.components
    cov_ups = dups - np.einsum("rab,r->ab", gamma, ups)
    div_ups = float(np.einsum("ab,ab->", ginv, cov_ups))
    ups_sq = float(ups @ ginv @ ups)
    n = pack.n
    return (pack.j - div_ups - (n / 2 - 1) * ups_sq) / w.value ** 2


def dual_cotton_3d(pack: CurvaturePack, orientation: int = 1) -> np.ndarray:
    """Three-dimensional Cotton dual Y_ars eps^{rs}_b as a (0,2) tensor.

    ``orientation=+1`` uses the coordinate-order volume form; ``-1`` flips it.
    """
    if pack.n != 3:
        raise ValueError("the Cotton dual is a 3-dimensional construction")
    eps = orientation * pack.eps.components
    ginv = pack.ginv.components
    eps_mixed = np.einsum("rsb,ri,sj->ijb", eps, ginv, ginv)  # eps^{ij}_b
    return np.einsum("ars,rsb->ab", pack.cotton.components, eps_mixed)


# ---------------------------------------------------------------------------
# divergence identity

def bianchi_check(spec: MetricSpec, point) -> float:
    """Residual of (n-3) Y_cab = div^r W_rcab (covariant divergence via jets)."""
    if spec.n < 4:
        raise ValueError("the divergence identity check needs n >= 4")
    f = frame(spec, point, 4)
    covW = f.cov_deriv(f.weyl, "dddd", f.order - 2)       # [s, r, c, a, b]
    div = np.einsum("sr,srcab->cab", f.values(f.ginv), covW[..., 0])
    y = f.values(f.cotton)
    return frobenius((spec.n - 3) * y - div)


# ---------------------------------------------------------------------------
# warped-product reference formulas (independent oracles for the jet pipeline)

def _warp_data(ws: WarpedSpec, point):
    nb = ws.base.n
    x = np.asarray(point[:nb], dtype=float)
    signs = np.array(ws.base_signs)
    norm_sq = float(signs @ (x * x))
    f = ws.a + ws.b * norm_sq
    df = 2.0 * ws.b * signs * x                 # (df)_a as a covector
    hess = 2.0 * ws.b * np.diag(signs)          # nabla-bar nabla-bar f
    lap = 2.0 * nb * ws.b                       # gbar-trace of hess
    df_sq = 4.0 * ws.b ** 2 * norm_sq           # g(df, df)
    return f, df, hess, lap, df_sq, signs


def warped_ricci_reference(ws: WarpedSpec, point) -> tuple[np.ndarray, float]:
    """Closed-form Ricci and scalar curvature of a pseudo-Euclidean x 4d warp."""
    nb, nf = ws.base.n, ws.fiber.n
    f, df, hess, lap, df_sq, signs = _warp_data(ws, point)
    fiber_pt = tuple(point[nb:])
    fiber_pack = curvature_pack(ws.fiber, fiber_pt, order=3)
    gt = fiber_pack.g.components
    ric_fiber = fiber_pack.ricci.components

    ric = np.zeros((nb + nf, nb + nf))
    ric[:nb, :nb] = -nf / f * hess
    ric[nb:, nb:] = ric_fiber - (f * lap + (nf - 1) * df_sq) * gt
    sc_fiber = fiber_pack.scalar
    sc = sc_fiber / f ** 2 - 2 * nf * lap / f - nf * (nf - 1) * df_sq / f ** 2
    return ric, sc


def warped_nabla_reference(ws: WarpedSpec, point, vector: np.ndarray,
                           covector: np.ndarray):
    """The four displayed covariant-derivative lines for constant-component inputs.

    Returns (nabla_vector, nabla_covector): arrays [A, B] with A the derivative
    direction, for the warped metric, assembled from base/fiber quantities.
    """
    nb, nf = ws.base.n, ws.fiber.n
    n = nb + nf
    f, df, hess, lap, df_sq, signs = _warp_data(ws, point)
    fiber_pt = tuple(point[nb:])
    fiber_pack = curvature_pack(ws.fiber, fiber_pt, order=3)
    gt = fiber_pack.g.components
    gamma_t = fiber_pack.gamma.components
    gbar_inv = np.diag(signs)                   # inverse equals itself for +-1 diagonal
    df_up = gbar_inv @ df

    vb, vf = vector[:nb], vector[nb:]
    nab_v = np.zeros((n, n))
    # base direction a: (nabla-bar_a v^b, f^-1 (df)_a v^beta); nabla-bar of constants = 0
    for a in range(nb):
        nab_v[a, nb:] = df[a] / f * vf
    # fiber direction alpha: (-f^-1 v_alpha (df)^b, Gamma-tilde v + f^-1 v^r (df)_r delta)
    v_low_fiber = f ** 2 * (gt @ vf)
    vdf = float(vb @ df)
    for al in range(nf):
        nab_v[nb + al, :nb] = -v_low_fiber[al] / f * df_up
        nab_v[nb + al, nb:] = gamma_t[:, al, :] @ vf + vdf / f * np.eye(nf)[al]

    pb, pf = covector[:nb], covector[nb:]
    nab_p = np.zeros((n, n))
    for a in range(nb):
        nab_p[a, nb:] = -df[a] / f * pf
    p_up_base = gbar_inv @ pb
    pdf = float(p_up_base @ df)
    for al in range(nf):
        nab_p[nb + al, :nb] = -df / f * pf[al]
        nab_p[nb + al, nb:] = -gamma_t[:, al, :].T @ pf + f * pdf * gt[al]
    return nab_v, nab_p
