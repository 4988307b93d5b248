"""Metric catalogue, pseudo-Euclidean factories, and warped products.

Every metric is a :class:`MetricSpec`: closed-form component expressions on a
single chart, a declared signature, a positivity-style domain predicate, and a
box to sample admissible points from.  Catalogue entries also carry the known
almost-Einstein-scale candidates used as lower-bound witnesses elsewhere.

Signature convention: ``(p, q)`` counts (negative, positive) eigenvalues, so
Riemannian is ``(0, n)`` and Lorentzian ``(1, n-1)``.  Coordinates are ordered
as documented per entry (products: base coordinates first, then fiber).
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass

import numpy as np

from . import expr
from .expr import Node
from . import jets
from .jets import Jet

DOMAIN_MARGIN = 1e-3
DET_FLOOR = 1e-10


class DomainError(ValueError):
    """Point violates the metric's domain predicate."""


class SingularMetricError(ValueError):
    """Metric degenerate (or signature mismatch) at an admitted point."""


class CatalogueError(ValueError):
    """Unknown metric name or invalid parameter."""


@dataclass(frozen=True)
class MetricSpec:
    """A coordinate-chart metric description."""

    n: int
    signature: tuple[int, int]
    components: tuple[tuple[Node, ...], ...]
    params: tuple[tuple[str, float], ...] = ()
    domain: tuple[Node, ...] = ()
    label: str = "metric"
    coord_names: tuple[str, ...] = ()
    sample_box: tuple[tuple[float, float], ...] = ()
    known_scales: tuple[tuple[str, Node], ...] = ()
    notes: tuple[str, ...] = ()

    def __post_init__(self):
        if self.signature[0] + self.signature[1] != self.n:
            raise SingularMetricError(
                f"signature {self.signature} does not sum to dimension {self.n}"
            )

    @property
    def params_dict(self) -> dict:
        return dict(self.params)

    @property
    def names(self) -> tuple[str, ...]:
        return self.coord_names or tuple(f"x{i + 1}" for i in range(self.n))

    def with_components(self, components, label=None, extra_domain=()) -> "MetricSpec":
        return MetricSpec(
            n=self.n,
            signature=self.signature,
            components=components,
            params=self.params,
            domain=self.domain + tuple(extra_domain),
            label=label or self.label,
            coord_names=self.coord_names,
            sample_box=self.sample_box,
            known_scales=self.known_scales,
            notes=self.notes,
        )


@dataclass(frozen=True)
class WarpedSpec:
    """Block-diagonal warped product data: base pseudo-Euclidean, 4d fiber."""

    base: MetricSpec
    fiber: MetricSpec
    a: float
    b: float

    def __post_init__(self):
        if self.fiber.n != 4:
            raise CatalogueError("warped products require a 4-dimensional fiber")
        if self.a == 0.0 and self.b == 0.0:
            raise CatalogueError("degenerate warp: a = b = 0")

    @property
    def base_signs(self) -> tuple[float, ...]:
        p = self.base.signature[0]
        return tuple(-1.0 if i < p else 1.0 for i in range(self.base.n))


def _sym(matrix: list[list[Node]]) -> tuple[tuple[Node, ...], ...]:
    return tuple(tuple(expr.simplify(e) for e in row) for row in matrix)


def _zeros(n: int) -> list[list[Node]]:
    return [[expr.ZERO for _ in range(n)] for _ in range(n)]


def _parse_components(n, entries, var_names=None, params=()):
    """entries: {(i, j): source}; symmetric closure, unlisted components 0."""
    m = _zeros(n)
    for (i, j), src in entries.items():
        node = expr.parse(src, n, params=params, var_names=var_names)
        m[i][j] = node
        m[j][i] = node
    return _sym(m)


# ---------------------------------------------------------------------------
# factories

def pseudo_euclidean(p: int, q: int) -> MetricSpec:
    """Flat diagonal metric: p entries -1, then q entries +1."""
    if p < 0 or q < 0 or p + q < 1:
        raise CatalogueError(f"invalid signature ({p}, {q})")
    n = p + q
    m = _zeros(n)
    for i in range(n):
        m[i][i] = expr.const(-1.0 if i < p else 1.0)
    scales: list[tuple[str, Node]] = [("const", expr.ONE)]
    scales += [(f"x{i + 1}", expr.var(i)) for i in range(n)]
    norm2 = signed_norm_sq(n, [-1.0 if i < p else 1.0 for i in range(n)])
    scales.append(("norm_sq", norm2))
    return MetricSpec(
        n=n,
        signature=(p, q),
        components=_sym(m),
        label=f"flat_{p}_{q}",
        sample_box=tuple((-1.0, 1.0) for _ in range(n)),
        known_scales=tuple(scales),
    )


def signed_norm_sq(n: int, signs) -> Node:
    out: Node = expr.ZERO
    for i, s in enumerate(signs):
        term = expr.Pow(expr.var(i), 2)
        out = expr.add(out, term if s > 0 else expr.Neg(term))
    return expr.simplify(out)


def _fubini_study() -> MetricSpec:
    comps = _parse_components(4, {
        (0, 0): "1/2",
        (1, 1): "1/2*cos(x1)^2*sin(x1)^2",
        (1, 3): "-1/2*cos(x1)^2*sin(x1)^2*sin(x3)^2",
        (2, 2): "1/2*cos(x1)^2",
        (3, 3): "1/2*cos(x1)^2*(sin(x1)^2*sin(x3)^4 + cos(x3)^2*sin(x3)^2)",
    })
    margin = [expr.parse(s, 4) for s in
              ("sin(x1) - 0.05", "cos(x1) - 0.05", "sin(x3) - 0.05", "cos(x3) - 0.05")]
    lo, hi = 0.1, math.pi / 2 - 0.1
    return MetricSpec(
        n=4, signature=(0, 4), components=comps,
        domain=tuple(margin), label="fubini_study",
        sample_box=((lo, hi), (0.0, 1.0), (lo, hi), (0.0, 1.0)),
        known_scales=(("const", expr.ONE),),
    )


def _fubini_study_hyperbolic() -> MetricSpec:
    comps = _parse_components(4, {
        (0, 0): "1/2",
        (1, 1): "1/2*cosh(x1)^2*sinh(x1)^2",
        (1, 3): "1/2*cosh(x1)^2*sinh(x1)^2*sinh(x3)^2",
        (2, 2): "1/2*cosh(x1)^2",
        (3, 3): "1/2*cosh(x1)^2*(sinh(x1)^2*sinh(x3)^4 + cosh(x3)^2*sinh(x3)^2)",
    })
    margin = [expr.parse(s, 4) for s in ("sinh(x1) - 0.05", "sinh(x3) - 0.05")]
    return MetricSpec(
        n=4, signature=(0, 4), components=comps,
        domain=tuple(margin), label="fubini_study_hyperbolic",
        sample_box=((0.15, 1.2), (0.0, 1.0), (0.15, 1.2), (0.0, 1.0)),
        known_scales=(("const", expr.ONE),),
    )


def _taub_nut(m: float) -> MetricSpec:
    if m <= 0:
        raise CatalogueError(f"taub_nut needs m > 0, got {m}")
    params = (("m", float(m)),)
    comps = _parse_components(4, {
        (0, 0): "1 + m/x1",
        (1, 1): "(1 + m/x1)*x1^2",
        (2, 2): "(1 + m/x1)*x1^2*sin(x2)^2 + m^2*cos(x2)^2/(1 + m/x1)",
        (2, 3): "m*cos(x2)/(1 + m/x1)",
        (3, 3): "1/(1 + m/x1)",
    }, params={"m"})
    comps = tuple(tuple(expr.substitute_params(e, {"m": m}) for e in row) for row in comps)
    margin = [expr.parse(s, 4) for s in ("x1 - 0.2", "sin(x2) - 0.05")]
    return MetricSpec(
        n=4, signature=(0, 4), components=comps, params=params,
        domain=tuple(margin), label="taub_nut",
        sample_box=((0.5, 3.0), (0.3, math.pi - 0.3), (0.0, 1.0), (0.0, 1.0)),
        known_scales=(("const", expr.ONE),),
    )


def _pp_wave() -> MetricSpec:
    names = ("t", "x", "y", "z")
    comps = _parse_components(4, {
        (0, 0): "x^2*exp(-sqrt(2)*t)",
        (0, 3): "exp(-sqrt(2)*t)",
        (1, 1): "exp(-sqrt(2)*t)",
        (2, 2): "exp(-sqrt(2)*t)",
    }, var_names=names)
    return MetricSpec(
        n=4, signature=(1, 3), components=comps,
        label="pp_wave", coord_names=names,
        sample_box=tuple((-0.8, 0.8) for _ in range(4)),
        known_scales=(
            ("const", expr.ONE),
            ("exp_wave", expr.parse("exp(-sqrt(2)*t)", 4, var_names=names)),
        ),
    )


def _pp_split() -> MetricSpec:
    names = ("t", "x", "y", "z")
    comps = _parse_components(4, {
        (0, 0): "x^2",
        (0, 3): "1",
        (1, 2): "1",
    }, var_names=names)
    return MetricSpec(
        n=4, signature=(2, 2), components=comps,
        label="pp_split", coord_names=names,
        sample_box=tuple((-1.0, 1.0) for _ in range(4)),
        known_scales=(
            ("const", expr.ONE),
            ("t", expr.var(0)),
            ("x", expr.var(1)),
        ),
        notes=(
            "normal-Killing count: the wedge construction certifies 3 "
            "independent fields here while the commonly quoted count for this "
            "example is 2; reports carry the brute-force value",
        ),
    )


def _lorentz3d(h) -> MetricSpec:
    names = ("x", "y", "t")
    if isinstance(h, str):
        h_ast = expr.parse(h, 3, var_names=names)
    elif isinstance(h, (int, float)):
        h_ast = expr.const(float(h))
    else:
        h_ast = h
    bad = expr.used_vars(h_ast) - {1}
    if bad:
        raise CatalogueError("lorentz3d takes h as a function of y only")
    m = _zeros(3)
    m[0][0] = expr.ONE
    m[1][1] = expr.add(expr.Pow(expr.var(0), 3), expr.mul(h_ast, expr.var(0)))
    m[1][2] = m[2][1] = expr.const(0.5)
    return MetricSpec(
        n=3, signature=(1, 2), components=_sym(m),
        label="lorentz3d", coord_names=names,
        sample_box=tuple((-1.0, 1.0) for _ in range(3)),
    )


_BUILTINS = {
    "fubini_study": lambda params: _fubini_study(),
    "fubini_study_hyperbolic": lambda params: _fubini_study_hyperbolic(),
    "taub_nut": lambda params: _taub_nut(params.get("m", 1.0)),
    "pp_wave": lambda params: _pp_wave(),
    "pp_split": lambda params: _pp_split(),
    "lorentz3d": lambda params: _lorentz3d(params.get("h", 0.0)),
}


def builtin_metric(name: str, params: dict | None = None) -> MetricSpec:
    """One of the explicitly tabulated metrics, by name."""
    params = params or {}
    if name not in _BUILTINS:
        raise CatalogueError(
            f"unknown metric {name!r}; builtins: {sorted(_BUILTINS)}"
        )
    return _BUILTINS[name](params)


# ---------------------------------------------------------------------------
# warped products

def warp_function(ws: WarpedSpec) -> Node:
    """f = a + b|x|^2 over the base coordinates, with base-signature signs."""
    nb = ws.base.n
    f: Node = expr.const(ws.a)
    if ws.b != 0.0:
        f = expr.add(f, expr.mul(expr.const(ws.b), signed_norm_sq(nb, ws.base_signs)))
    return expr.simplify(f)


def warped_product(ws: WarpedSpec, negative_region: bool = False,
                   label: str | None = None,
                   known_scales=(), notes=()) -> MetricSpec:
    """Block metric base (+) f^2 * fiber, base coordinates first."""
    nb, nf = ws.base.n, ws.fiber.n
    n = nb + nf
    f = warp_function(ws)
    f2 = expr.Pow(f, 2) if not expr.is_one(f) else expr.ONE

    m = _zeros(n)
    for i in range(nb):
        for j in range(nb):
            m[i][j] = ws.base.components[i][j]
    for i in range(nf):
        for j in range(nf):
            comp = expr.shift_vars(ws.fiber.components[i][j], nb)
            m[nb + i][nb + j] = expr.mul(f2, comp)

    domain = [expr.shift_vars(d, nb) for d in ws.fiber.domain]
    f_signed = expr.simplify(expr.Neg(f)) if negative_region else f
    if not isinstance(f, expr.Const):
        domain.append(expr.sub(f_signed, expr.const(0.05)))
    elif (f.value < 0) != negative_region:
        raise CatalogueError("constant warp lies in the excluded sign region")

    # f enters squared, so the block signature is the same on either side of f = 0
    pb, qb = ws.base.signature
    pf, qf = ws.fiber.signature
    signature = (pb + pf, qb + qf)

    base_box = ws.base.sample_box or tuple((-1.0, 1.0) for _ in range(nb))
    if ws.b != 0.0:
        # keep |x|^2 comfortably below 0.95 so f = a + b|x|^2 stays past the margin
        half = 0.9 / math.sqrt(ws.base.n) / math.sqrt(2.0)
        base_box = tuple((-half, half) for _ in range(nb))
    fiber_box = ws.fiber.sample_box or tuple((-1.0, 1.0) for _ in range(nf))

    return MetricSpec(
        n=n,
        signature=signature,
        components=_sym(m),
        domain=tuple(domain),
        label=label or f"warped[{ws.base.label}x{ws.fiber.label};a={ws.a},b={ws.b}]",
        coord_names=tuple(f"x{i + 1}" for i in range(nb)) + tuple(ws.fiber.names),
        sample_box=base_box + fiber_box,
        known_scales=tuple(known_scales),
        notes=tuple(notes),
    )


def _warped_scale_family(ws: WarpedSpec) -> list[tuple[str, Node]]:
    """Almost-Einstein-scale candidates A + B|x|^2 + sum c_i x_i (with aB = -bA)."""
    nb = ws.base.n
    scales: list[tuple[str, Node]] = []
    norm2 = signed_norm_sq(nb, ws.base_signs)
    if ws.a != 0.0:
        # A = a fixes B = -b A / a = -b
        sigma0 = expr.add(expr.const(ws.a), expr.mul(expr.const(-ws.b), norm2))
        scales.append(("radial", expr.simplify(sigma0)))
    for i in range(nb):
        scales.append((f"x{i + 1}", expr.var(i)))
    return scales


def warped_catalogue_entry(kind: str, n: int, p: int = 2) -> MetricSpec:
    """Named warped/product families used by the verifiers (n >= 5)."""
    if n < 5 or n > 8:
        raise CatalogueError(f"warped families cover 5 <= n <= 8, got {n}")
    nb = n - 4
    if kind == "warped_fs":
        ws = WarpedSpec(pseudo_euclidean(0, nb), _fubini_study(), 1.0, -1.0)
        scales = _warped_scale_family(ws)
        return warped_product(ws, label=f"warped_fs_n{n}", known_scales=scales)
    if kind == "warped_hfs":
        ws = WarpedSpec(pseudo_euclidean(0, nb), _fubini_study_hyperbolic(), 1.0, 1.0)
        scales = _warped_scale_family(ws)
        return warped_product(ws, label=f"warped_hfs_n{n}", known_scales=scales)
    if kind == "product_ricci_flat":
        ws = WarpedSpec(pseudo_euclidean(0, nb), _taub_nut(1.0), 1.0, 0.0)
        scales = [("const", expr.ONE)]
        scales += [(f"x{i + 1}", expr.var(i)) for i in range(nb)]
        return warped_product(ws, label=f"product_ricci_flat_n{n}", known_scales=scales)
    if kind == "product_lorentz":
        ws = WarpedSpec(pseudo_euclidean(0, nb), _pp_wave(), 1.0, 0.0)
        scales = [("const", expr.ONE)]
        scales += [(f"x{i + 1}", expr.var(i)) for i in range(nb)]
        scales.append(("fiber_exp_wave", expr.shift_vars(_pp_wave().known_scales[1][1], nb)))
        return warped_product(ws, label=f"product_lorentz_n{n}", known_scales=scales)
    if kind == "product_split":
        if not (2 <= p <= n - p):
            raise CatalogueError(f"general signature needs 2 <= p <= n - p, got p={p}")
        ws = WarpedSpec(pseudo_euclidean(p - 2, n - p - 2), _pp_split(), 1.0, 0.0)
        scales = [("const", expr.ONE)]
        scales += [(f"x{i + 1}", expr.var(i)) for i in range(nb)]
        scales.append(("fiber_t", expr.var(nb)))
        scales.append(("fiber_x", expr.var(nb + 1)))
        return warped_product(ws, label=f"product_split_n{n}_p{p}", known_scales=scales)
    raise CatalogueError(f"unknown warped family {kind!r}")


# ---------------------------------------------------------------------------
# catalogue facade for the CLI

_FLAT_RE = re.compile(r"flat_(\d+)_(\d+)$")


def _bad_einstein_claim() -> MetricSpec:
    """Fixture with a deliberately failing scale claim; exercises exit code 1."""
    flat = pseudo_euclidean(0, 4)
    return MetricSpec(
        n=4, signature=(0, 4), components=flat.components,
        label="bad_einstein_claim",
        sample_box=flat.sample_box,
        known_scales=(("bogus", expr.parse("x1^2", 4)),),
        notes=("test fixture: the claimed scale x1^2 is not almost Einstein",),
    )


def catalogue_names() -> list[str]:
    names = sorted(_BUILTINS)
    names += ["flat_r4", "flat_p_q (e.g. flat_1_3)"]
    for n in (5, 6):
        names += [
            f"warped_fs_n{n}", f"warped_hfs_n{n}",
            f"product_ricci_flat_n{n}", f"product_lorentz_n{n}",
        ]
    names += ["product_split_n6", "bad_einstein_claim"]
    return names


def catalogue_metric(name: str, params: dict | None = None) -> MetricSpec:
    """Resolve any catalogue name (builtins, flat_p_q, warped families)."""
    params = params or {}
    if name in _BUILTINS:
        return builtin_metric(name, params)
    if name == "flat_r4":
        return pseudo_euclidean(0, 4)
    if m := _FLAT_RE.match(name):
        return pseudo_euclidean(int(m.group(1)), int(m.group(2)))
    if m := re.match(r"(warped_fs|warped_hfs|product_ricci_flat|product_lorentz)_n(\d+)$", name):
        return warped_catalogue_entry(m.group(1), int(m.group(2)))
    if m := re.match(r"product_split_n(\d+)(?:_p(\d+))?$", name):
        return warped_catalogue_entry(
            "product_split", int(m.group(1)), int(m.group(2) or 2)
        )
    if name == "bad_einstein_claim":
        return _bad_einstein_claim()
    raise CatalogueError(f"unknown metric {name!r}; see `cgl catalogue`")


def load_metric(text: str, label: str = "file") -> MetricSpec:
    """Build a MetricSpec from conformal-metric v1 text."""
    data = expr.parse_metric_source(text)
    n = data["dim"]
    m = _zeros(n)
    for (i, j), node in data["components"].items():
        node = expr.substitute_params(node, data["params"]) if data["params"] else node
        m[i][j] = node
        m[j][i] = node
    return MetricSpec(
        n=n,
        signature=data["signature"],
        components=_sym(m),
        params=tuple(sorted(data["params"].items())),
        domain=tuple(data["domain"]),
        label=label,
        sample_box=tuple((-1.0, 1.0) for _ in range(n)),
    )


# ---------------------------------------------------------------------------
# evaluation at points

def domain_value(spec: MetricSpec, point) -> float:
    """Smallest domain-expression value (predicate: all must exceed the margin)."""
    if not spec.domain:
        return math.inf
    vals = [expr.evaluate_at(d, point, spec.params_dict) for d in spec.domain]
    return min(vals)


def domain_ok(spec: MetricSpec, point, margin: float = DOMAIN_MARGIN) -> bool:
    try:
        return domain_value(spec, point) > margin
    except expr.EvalError:
        return False


def metric_jets(spec: MetricSpec, point, order: int):
    """Component jets as an (n, n) object array."""
    pt = tuple(float(c) for c in point)
    if len(pt) != spec.n:
        raise DomainError(f"point has {len(pt)} coordinates, metric needs {spec.n}")
    env = jets.seed_jets(pt, order)
    params = spec.params_dict
    G = np.empty((spec.n, spec.n), dtype=object)
    for i in range(spec.n):
        for j in range(i, spec.n):
            G[i, j] = G[j, i] = expr.evaluate(spec.components[i][j], env, params)
    return G


def jet_matrix_inverse(G):
    """Gauss elimination over the jet ring with value-level partial pivoting."""
    n = G.shape[0]
    proto: Jet = G[0, 0]
    A = G.copy()
    inv = np.empty((n, n), dtype=object)
    for i in range(n):
        for j in range(n):
            inv[i, j] = Jet.constant(1.0 if i == j else 0.0, proto.num_vars, proto.order)
    for col in range(n):
        pivot_row = max(range(col, n), key=lambda r: abs(A[r, col].value))
        if abs(A[pivot_row, col].value) <= 1e-12:
            raise SingularMetricError("jet matrix inverse: zero pivot")
        if pivot_row != col:
            A[[col, pivot_row]] = A[[pivot_row, col]]
            inv[[col, pivot_row]] = inv[[pivot_row, col]]
        scale = A[col, col].reciprocal()
        for j in range(n):
            A[col, j] = A[col, j] * scale
            inv[col, j] = inv[col, j] * scale
        for r in range(n):
            if r == col:
                continue
            factor = A[r, col]
            if not factor.coeffs.any():
                continue
            for j in range(n):
                A[r, j] = A[r, j] - factor * A[col, j]
                inv[r, j] = inv[r, j] - factor * inv[col, j]
    return inv


def signature_of(values: np.ndarray) -> tuple[int, int]:
    eigs = np.linalg.eigvalsh(0.5 * (values + values.T))
    return int(np.sum(eigs < 0)), int(np.sum(eigs > 0))


def metric_frame_at(spec: MetricSpec, point, order: int):
    """(g jets, inverse jets, computed signature) with admissibility checks."""
    if not domain_ok(spec, point):
        raise DomainError(
            f"point {tuple(point)} outside the domain of {spec.label!r}"
        )
    G = metric_jets(spec, point, order)
    values = np.array([[G[i, j].value for j in range(spec.n)] for i in range(spec.n)])
    det = float(np.linalg.det(values))
    if abs(det) < DET_FLOOR:
        raise SingularMetricError(
            f"{spec.label!r} degenerate at {tuple(point)} (|det| = {abs(det):.2e})"
        )
    sig = signature_of(values)
    if sig != spec.signature:
        raise SingularMetricError(
            f"{spec.label!r}: computed signature {sig} != declared {spec.signature}"
        )
    return G, jet_matrix_inverse(G), sig


def default_point(spec: MetricSpec) -> tuple[float, ...]:
    box = spec.sample_box or tuple((-1.0, 1.0) for _ in range(spec.n))
    pt = tuple((lo + hi) / 2 for lo, hi in box)
    if domain_ok(spec, pt):
        return pt
    for candidate in sample_points(spec, 1, seed=0):
        return candidate
    raise DomainError(f"no admissible default point for {spec.label!r}")


def sample_points(spec: MetricSpec, count: int, seed: int = 0,
                  margin: float = DOMAIN_MARGIN) -> list[tuple[float, ...]]:
    """Seeded rejection sampling from the metric's box against the domain predicate."""
    rng = np.random.default_rng(seed)
    box = spec.sample_box or tuple((-1.0, 1.0) for _ in range(spec.n))
    lo = np.array([b[0] for b in box])
    hi = np.array([b[1] for b in box])
    out = []
    attempts = 0
    while len(out) < count:
        attempts += 1
        if attempts > 500 * count:
            raise DomainError(
                f"rejection sampling failed for {spec.label!r} "
                f"({len(out)}/{count} points after {attempts} draws)"
            )
        pt = tuple(rng.uniform(lo, hi))
        try:
            if domain_value(spec, pt) > margin:
                out.append(pt)
        except expr.EvalError:
            continue
    return out
