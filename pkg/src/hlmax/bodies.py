"""Convex symmetric bodies: gauges, exact moments, sampling, isotropic position.

A body G in R^d is represented by its Minkowski gauge ``||x||_G = inf {t > 0 :
x/t in G}``, vectorized over trailing-axis-d arrays.  Supported families:

* q-balls  B^q = {sum |x_k|^q <= 1} for 1 <= q <= inf (cube at q = inf),
* ellipsoids {sum lambda_k^2 x_k^2 <= 1} with an increasing spectrum,
* invertible linear images A(G) of any of the above,
* custom bodies given by an arbitrary gauge plus a bounding radius.

The normalization used throughout is *isotropic position*: volume 1 and
covariance matrix L^2 I, so the single number L (the isotropic constant)
captures the second moment in every direction:

    L^2 = (1/d) * int_G |x|^2 dx        (when |G| = 1).

For q-balls everything is closed-form via Gamma functions:

    |B^q|      = 2^d Gamma(1 + 1/q)^d / Gamma(1 + d/q)
    E[x_1^2]   = Gamma(3/q) Gamma(1 + d/q) / (Gamma(1/q) Gamma(1 + (d+2)/q))
    L(q, d)    = |B^q|^(-1/d) * sqrt(E[x_1^2])

and the unit-volume comparison ball r_d B^2 (r_d = |B^2|^(-1/d)) has
L^2 = r_d^2 / (d + 2); among all symmetric convex bodies the ball minimizes L.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from .reports import ExperimentReport, timed
from .seeding import substream

Vector = np.ndarray

_EXACT_KINDS = ("qball", "ellipsoid", "linear")


class RejectionTooSlow(RuntimeError):
    """Rejection sampling acceptance rate fell below the configured floor."""


class NotPositiveDefinite(RuntimeError):
    """Estimated covariance matrix is not numerically positive definite."""


# ---------------------------------------------------------------------------
# closed-form q-ball quantities
# ---------------------------------------------------------------------------

def qball_log_volume(d: int, q: float) -> float:
    """log |B^q| in R^d (q = inf gives the cube [-1, 1]^d)."""
    if math.isinf(q):
        return d * math.log(2.0)
    return d * math.log(2.0) + d * math.lgamma(1.0 + 1.0 / q) - math.lgamma(1.0 + d / q)


def qball_volume(d: int, q: float) -> float:
    return math.exp(qball_log_volume(d, q))


def ball_volume(d: int, radius: float = 1.0) -> float:
    """Euclidean ball volume pi^(d/2) r^d / Gamma(d/2 + 1)."""
    return math.exp(0.5 * d * math.log(math.pi) - math.lgamma(0.5 * d + 1.0)) * radius ** d


def unit_ball_radius(d: int) -> float:
    """r_d = |B^2|^(-1/d): radius making the Euclidean ball have volume 1."""
    return math.exp(-(0.5 * d * math.log(math.pi) - math.lgamma(0.5 * d + 1.0)) / d)


def qball_second_moment(d: int, q: float) -> float:
    """E[x_1^2] under the uniform law on B^q (Dirichlet-integral formula)."""
    if math.isinf(q):
        return 1.0 / 3.0
    return math.exp(
        math.lgamma(3.0 / q) - math.lgamma(1.0 / q)
        + math.lgamma(1.0 + d / q) - math.lgamma(1.0 + (d + 2.0) / q)
    )


def qball_isotropic_constant(d: int, q: float) -> float:
    """L of the volume-normalized q-ball."""
    r = math.exp(-qball_log_volume(d, q) / d)
    return r * math.sqrt(qball_second_moment(d, q))


def ball_isotropic_constant(d: int) -> float:
    """L(r_d B^2) = r_d / sqrt(d + 2) — the minimum over all symmetric bodies."""
    return unit_ball_radius(d) / math.sqrt(d + 2.0)


def cube_isotropic_constant() -> float:
    """L of the unit-volume cube: 12^(-1/2), dimension-free."""
    return 1.0 / math.sqrt(12.0)


def default_spectrum(d: int) -> np.ndarray:
    """Increasing ellipsoid spectrum sqrt(2)*(1 - 2^-(k+1)), k = 1..d.

    Lives strictly inside (1, sqrt 2), so successive axis thresholds of the
    associated lattice averaging stencils are separated and lacunary.
    """
    k = np.arange(1, d + 1)
    return math.sqrt(2.0) * (1.0 - 2.0 ** (-(k + 1.0)))


# ---------------------------------------------------------------------------
# body representation and constructors
# ---------------------------------------------------------------------------

@dataclass
class Body:
    """A centrally symmetric convex body given by its gauge function."""

    dim: int
    kind: str                     # "qball" | "ellipsoid" | "linear" | "custom"
    gauge: callable               # (..., dim) array -> (...) array
    bounding_radius: float        # G subset of {|x|_2 <= bounding_radius}
    volume_exact: float | None = None
    params: dict = field(default_factory=dict)
    direct_sampler: callable | None = None   # (rng, n) -> (n, dim) array

    def contains(self, x) -> np.ndarray:
        return self.gauge(np.asarray(x, dtype=float)) <= 1.0

    def tag(self) -> str:
        extra = ""
        if self.kind == "qball":
            extra = f":q={self.params.get('q')}"
        return f"{self.kind}{extra}:d={self.dim}"

    def __repr__(self):  # short: the gauge closure is noise
        return f"Body({self.tag()}, R={self.bounding_radius:.4g})"


def make_qball(d: int, q: float) -> Body:
    """B^q in R^d.  Requires q >= 1 (convexity)."""
    if q < 1:
        raise ValueError(f"q-ball needs q >= 1 for convexity, got q={q}")
    if math.isinf(q):
        def gauge(x):
            return np.max(np.abs(x), axis=-1)

        def sampler(rng, n):
            return rng.uniform(-1.0, 1.0, size=(n, d))

        radius = math.sqrt(d)
    else:
        def gauge(x, _q=float(q)):
            return np.sum(np.abs(x) ** _q, axis=-1) ** (1.0 / _q)

        def sampler(rng, n, _q=float(q)):
            # Direct sampler: g_i with density ~ exp(-|t|^q), w ~ Exp(1);
            # then g / (sum |g_i|^q + w)^(1/q) is uniform on B^q.  For q = 1
            # this is the exponential-simplex method, for q = 2 it matches
            # the polar (direction times radius^(1/d)) method in law.
            g = stats.gennorm.rvs(_q, size=(n, d), random_state=rng)
            w = rng.exponential(size=n)
            s = (np.sum(np.abs(g) ** _q, axis=1) + w) ** (1.0 / _q)
            return g / s[:, None]

        radius = float(d) ** max(0.0, 0.5 - 1.0 / q)
    return Body(
        dim=d, kind="qball", gauge=gauge, bounding_radius=radius,
        volume_exact=qball_volume(d, q), params={"q": float(q)},
        direct_sampler=sampler,
    )


def make_linear_image(base: Body, matrix) -> Body:
    """A(base) for an invertible matrix A; gauge is ||A^-1 x||_base."""
    A = np.asarray(matrix, dtype=float)
    d = base.dim
    if A.shape != (d, d):
        raise ValueError(f"matrix shape {A.shape} does not match dim {d}")
    sign, logdet = np.linalg.slogdet(A)
    if sign == 0 or not np.isfinite(logdet):
        raise ValueError("linear image needs an invertible matrix")
    Ainv = np.linalg.inv(A)
    base_gauge = base.gauge

    def gauge(x):
        return base_gauge(np.asarray(x, dtype=float) @ Ainv.T)

    sampler = None
    if base.direct_sampler is not None:
        base_sampler = base.direct_sampler

        def sampler(rng, n):
            return base_sampler(rng, n) @ A.T

    op_norm = float(np.linalg.norm(A, 2))
    vol = None if base.volume_exact is None else base.volume_exact * math.exp(logdet)
    return Body(
        dim=d, kind="linear", gauge=gauge, bounding_radius=op_norm * base.bounding_radius,
        volume_exact=vol, params={"matrix": A, "base": base},
        direct_sampler=sampler,
    )


def scale_body(body: Body, c: float) -> Body:
    return make_linear_image(body, c * np.eye(body.dim))


def make_cube(d: int) -> Body:
    """Unit-volume cube [-1/2, 1/2]^d (the isotropic cube)."""
    return scale_body(make_qball(d, math.inf), 0.5)


def make_ball(d: int) -> Body:
    """Unit-volume Euclidean ball r_d B^2."""
    return scale_body(make_qball(d, 2.0), unit_ball_radius(d))


def make_ellipsoid(lambdas) -> Body:
    """{sum lambda_k^2 x_k^2 <= 1} = diag(1/lambda)(B^2), lambdas all > 0."""
    lam = np.asarray(lambdas, dtype=float)
    if lam.ndim != 1 or np.any(lam <= 0):
        raise ValueError("ellipsoid spectrum must be a 1-d array of positives")
    d = lam.size
    body = make_linear_image(make_qball(d, 2.0), np.diag(1.0 / lam))
    body.kind = "ellipsoid"
    body.params = {"lambdas": lam, "base": body.params["base"],
                   "matrix": body.params["matrix"]}
    return body


def make_custom(d: int, gauge, bounding_radius: float, volume_exact=None) -> Body:
    return Body(dim=d, kind="custom", gauge=gauge, bounding_radius=float(bounding_radius),
                volume_exact=volume_exact, params={})


# ---------------------------------------------------------------------------
# sampling and Monte Carlo moments
# ---------------------------------------------------------------------------

def sample_uniform(body: Body, seed: int, n: int, shards: int = 1,
                   method: str = "auto", rejection_floor: float = 1e-4) -> np.ndarray:
    """n uniform points in the body, (n, d) array.

    method: "auto" prefers the family's direct sampler and falls back to
    rejection from the bounding box; "direct"/"rejection" force a route.
    The work is split into ``shards`` substreams so a sharded run reassembles
    bitwise-identically for a fixed seed and shard count.
    """
    if method not in ("auto", "direct", "rejection"):
        raise ValueError(f"unknown sampling method {method!r}")
    use_direct = body.direct_sampler is not None and method != "rejection"
    if method == "direct" and body.direct_sampler is None:
        raise ValueError(f"no direct sampler for body {body.tag()}")
    counts = [n // shards + (1 if i < n % shards else 0) for i in range(shards)]
    blocks = []
    for i, ni in enumerate(counts):
        if ni == 0:
            continue
        rng = substream(seed, "sample", body.tag(), i)
        if use_direct:
            blocks.append(body.direct_sampler(rng, ni))
        else:
            blocks.append(_rejection_sample(body, rng, ni, rejection_floor))
    return np.concatenate(blocks, axis=0)


def _rejection_sample(body: Body, rng, n: int, floor: float) -> np.ndarray:
    R = body.bounding_radius
    d = body.dim
    out = np.empty((n, d))
    got = 0
    proposed = 0
    batch = int(min(max(4096, 4 * n), 500_000))
    while got < n:
        X = rng.uniform(-R, R, size=(batch, d))
        keep = X[body.gauge(X) <= 1.0]
        take = min(n - got, keep.shape[0])
        out[got:got + take] = keep[:take]
        got += take
        proposed += batch
        if proposed >= 20_000 and got / proposed < floor:
            raise RejectionTooSlow(
                f"acceptance {got}/{proposed} below floor {floor:g} for {body.tag()}; "
                "supply a direct sampler or a tighter bounding radius")
    return out


@dataclass
class VolumeEstimate:
    value: float
    std_error: float
    exact: bool
    n: int = 0


def volume(body: Body, seed: int = 0, n: int = 100_000, force_mc: bool = False) -> VolumeEstimate:
    """|G|: closed form when the family has one, else bounding-box Monte Carlo."""
    if body.volume_exact is not None and not force_mc:
        return VolumeEstimate(value=float(body.volume_exact), std_error=0.0, exact=True)
    rng = substream(seed, "volume", body.tag())
    R = body.bounding_radius
    X = rng.uniform(-R, R, size=(n, body.dim))
    p = float(np.mean(body.gauge(X) <= 1.0))
    box = (2.0 * R) ** body.dim
    return VolumeEstimate(value=box * p,
                          std_error=box * math.sqrt(max(p * (1.0 - p), 1e-300) / n),
                          exact=False, n=n)


@dataclass
class CovarianceEstimate:
    matrix: np.ndarray       # M = int_G x x^T dx
    std_error: np.ndarray    # elementwise MC std errors
    volume: VolumeEstimate
    n: int


def covariance_matrix(body: Body, seed: int = 0, n: int = 200_000) -> CovarianceEstimate:
    """M = int_G x x^T dx estimated from uniform samples (times |G|)."""
    vol = volume(body, seed=seed, n=n)
    X = sample_uniform(body, seed, n)
    outer = X[:, :, None] * X[:, None, :]
    mean = outer.mean(axis=0)
    se = outer.std(axis=0) / math.sqrt(n)
    M = vol.value * mean
    M_se = vol.value * se
    if not vol.exact:
        M_se = M_se + np.abs(mean) * vol.std_error
    return CovarianceEstimate(matrix=M, std_error=M_se, volume=vol, n=n)


# ---------------------------------------------------------------------------
# isotropic position
# ---------------------------------------------------------------------------

@dataclass
class IsotropicBody:
    """A body pushed to volume 1 and covariance L^2 I by the map ``transform``."""

    body: Body
    source: Body
    transform: np.ndarray
    L: float
    L_std_error: float
    exact: bool
    report: ExperimentReport | None = None


def _exact_isotropic(body: Body):
    """(U, L) when the family admits a closed-form whitening, else None.

    q-balls are already isotropic up to scale; a linear image A(B^q) whitens
    through U = |B^q|^(-1/d) (A A^T)^(-1/2), whose image is a rotated
    volume-one q-ball, so L = L(q, d) exactly.
    """
    if body.kind == "qball":
        r = math.exp(-qball_log_volume(body.dim, body.params["q"]) / body.dim)
        return r * np.eye(body.dim), qball_isotropic_constant(body.dim, body.params["q"])
    if body.kind in ("ellipsoid", "linear"):
        base = body.params.get("base")
        if base is None or base.kind != "qball":
            return None
        q = base.params["q"]
        A = body.params["matrix"]
        w, V = np.linalg.eigh(A @ A.T)
        if np.any(w <= 0):
            return None
        U0 = V @ np.diag(w ** -0.5) @ V.T
        r = math.exp(-qball_log_volume(body.dim, q) / body.dim)
        return r * U0, qball_isotropic_constant(body.dim, q)
    return None


def isotropic_position(body: Body, seed: int = 0, n: int = 200_000,
                       method: str = "auto", check_sigmas: float = 5.0) -> IsotropicBody:
    """Whitening map U with U(G) of volume 1 and covariance L^2 I.

    method "auto" takes the closed-form route for q-balls and their linear
    images; "mc" forces the sampled route: M = int x x^T dx, U0 = M^(-1/2)
    (via eigendecomposition), then a determinant rescale for unit volume.
    The returned report certifies, on a fresh substream, that the transformed
    covariance is within ``check_sigmas`` MC std errors of L^2 I.
    """
    if method not in ("auto", "mc"):
        raise ValueError(f"unknown isotropic method {method!r}")
    exact = _exact_isotropic(body) if method == "auto" else None
    if exact is not None:
        U, L = exact
        iso_body = make_linear_image(body, U)
        if body.kind == "qball":
            # keep the family tag: a scaled q-ball is still a q-ball
            iso_body.kind = "qball"
            iso_body.params = {"q": body.params["q"], **iso_body.params}
        return IsotropicBody(body=iso_body, source=body, transform=U, L=L,
                             L_std_error=0.0, exact=True, report=None)

    cov = covariance_matrix(body, seed=seed, n=n)
    w, V = np.linalg.eigh(0.5 * (cov.matrix + cov.matrix.T))
    if np.min(w) <= 0:
        raise NotPositiveDefinite(
            f"covariance spectrum min {np.min(w):.3e} for {body.tag()}; "
            f"raise the sample budget (n={n})")
    U0 = V @ np.diag(w ** -0.5) @ V.T
    det_U0 = float(np.prod(w ** -0.5))
    c = (det_U0 * cov.volume.value) ** (-1.0 / body.dim)
    U = c * U0
    iso_body = make_linear_image(body, U)
    iso_body.volume_exact = 1.0   # by construction of the rescale

    # L and a certificate from a fresh substream
    Y = sample_uniform(body, seed + 1, n) @ U.T
    sq = np.sum(Y * Y, axis=1)
    L2 = float(np.mean(sq)) / body.dim
    L2_se = float(np.std(sq)) / math.sqrt(n) / body.dim
    L = math.sqrt(L2)
    L_se = L2_se / (2.0 * L)

    report = ExperimentReport(op_name="isotropic_position", seed=seed,
                              inputs={"body": body.tag(), "n": n, "method": "mc"})
    with timed(report):
        outer = Y[:, :, None] * Y[:, None, :]
        Mp = outer.mean(axis=0)
        Mp_se = outer.std(axis=0) / math.sqrt(n)
        target = L2 * np.eye(body.dim)
        resid = np.abs(Mp - target)
        # diagonal entries also carry the uncertainty of L^2 itself
        slack = check_sigmas * (Mp_se + np.eye(body.dim) * L2_se * body.dim)
        worst = int(np.argmax(resid - slack))
        i, j = divmod(worst, body.dim)
        report.add_measurement("L", L, L_se)
        report.add_measurement("volume_scale", c)
        report.add_margin("covariance_residual", float(resid[i, j]), 0.0,
                          float(slack[i, j]), note=f"entry ({i},{j}) of |cov - L^2 I|")
    return IsotropicBody(body=iso_body, source=body, transform=U, L=L,
                         L_std_error=L_se, exact=False, report=report)


def isotropic_constant_bounds_check(iso: IsotropicBody, upper: float = 1.0,
                                    slack_sigmas: float = 3.0) -> ExperimentReport:
    """The ball minimizes L: assert L(r_d B^2) <= L <= upper (configurable)."""
    d = iso.body.dim
    comparator = ball_isotropic_constant(d)
    rep = ExperimentReport(op_name="isotropic_constant_bounds",
                           inputs={"body": iso.source.tag(), "upper": upper})
    # equality is attained for the ball itself, so allow roundoff even on the
    # exact route
    slack = slack_sigmas * iso.L_std_error + 1e-12 * comparator
    rep.add_measurement("L", iso.L, iso.L_std_error)
    rep.add_measurement("ball_comparator", comparator)
    rep.add_margin("ball_minimizes_L", comparator, iso.L, slack)
    rep.add_margin("L_upper", iso.L, upper, slack)
    return rep


# ---------------------------------------------------------------------------
# section-based and shadow invariants
# ---------------------------------------------------------------------------

@dataclass
class SigmaEstimate:
    sigma: float
    std_error: float
    max_section: float
    direction: np.ndarray
    n_directions: int


def sigma_invariant(iso: IsotropicBody, seed: int = 0, n: int = 200_000,
                    n_directions: int = 128, slack_sigmas: float = 3.0):
    """sigma(G)^-1 = max over directions of the central section volume.

    Estimated by slab counts on one shared sample batch: project the batch on
    each direction, count |<x, zeta>| <= h/2.  Comparable to L within the
    universal bracket [L/8, 8L]; the report asserts that bracket.
    Slab averaging biases phi(0) slightly down (phi is even and unimodal),
    i.e. sigma slightly up — far below the factor-8 headroom.
    """
    body = iso.body
    d = body.dim
    rng = substream(seed, "sigma-dirs", body.tag())
    dirs = rng.standard_normal((n_directions, d))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    dirs = np.concatenate([np.eye(d), dirs], axis=0)

    X = sample_uniform(body, seed, n)
    T = X @ dirs.T                                   # (n, k) projections
    u_max = np.max(np.abs(T), axis=0)
    h = u_max / 32.0
    p = np.mean(np.abs(T) <= 0.5 * h[None, :], axis=0)
    phi0 = p / h                                     # |G| = 1: density at 0
    phi0_se = np.sqrt(np.maximum(p * (1 - p), 1e-300) / n) / h
    k = int(np.argmax(phi0))
    max_phi, max_se = float(phi0[k]), float(phi0_se[k])
    sigma = 1.0 / max_phi
    sigma_se = max_se / max_phi ** 2

    est = SigmaEstimate(sigma=sigma, std_error=sigma_se, max_section=max_phi,
                        direction=dirs[k], n_directions=dirs.shape[0])
    rep = ExperimentReport(op_name="sigma_invariant", seed=seed,
                           inputs={"body": body.tag(), "n": n,
                                   "n_directions": dirs.shape[0]})
    L, L_se = iso.L, iso.L_std_error
    rep.add_measurement("sigma", sigma, sigma_se)
    rep.add_measurement("max_central_section", max_phi, max_se)
    rep.add_measurement("L", L, L_se)
    rep.add_margin("sigma_lower", L / 8.0, sigma,
                   slack_sigmas * (sigma_se + L_se / 8.0))
    rep.add_margin("sigma_upper", sigma, 8.0 * L,
                   slack_sigmas * (sigma_se + 8.0 * L_se))
    return est, rep


def q_invariant_cube(d: int, xi) -> float:
    """Shadow (projection) volume of the unit-volume cube orthogonal to xi.

    Closed form sum_j |xi_j| / |xi|_2; maximized at the main diagonal with
    value sqrt(d).
    """
    v = np.asarray(xi, dtype=float)
    nrm = np.linalg.norm(v)
    if nrm == 0:
        raise ValueError("direction must be nonzero")
    return float(np.sum(np.abs(v)) / nrm)


def max_cube_shadow(d: int, seed: int = 0, n_starts: int = 64):
    """Search max_xi of the cube shadow by random starts plus a sign-ascent
    polish (normalize(sign(v)) is the exact ascent fixed point for this
    objective).  Returns (value, direction); the max is sqrt(d)."""
    rng = substream(seed, "cube-shadow", d)
    best_val, best_dir = -np.inf, None
    starts = rng.standard_normal((n_starts, d))
    starts = np.concatenate([starts, np.eye(d)[:1]], axis=0)
    for v in starts:
        v = v / np.linalg.norm(v)
        for cand in (v, np.sign(v + (v == 0)) / math.sqrt(d)):
            val = q_invariant_cube(d, cand)
            if val > best_val:
                best_val, best_dir = val, cand
    return best_val, best_dir


# ---------------------------------------------------------------------------
# CLI body-spec strings
# ---------------------------------------------------------------------------

def parse_body_spec(spec: str, dim: int | None = None) -> Body:
    """Body from a spec string.

    "cube" and "ball" are the unit-volume (isotropic) cube and Euclidean
    ball; "qball:<q>" is the raw B^q; "ellipsoid:auto" uses the default
    increasing spectrum; "ellipsoid:l1,l2,..." is explicit; "linear:<file>"
    reads JSON, either a bare matrix (applied to B^2) or
    {"base": "<spec>", "matrix": [[...]]}.
    """
    if spec == "cube":
        _need_dim(spec, dim)
        return make_cube(dim)
    if spec == "ball":
        _need_dim(spec, dim)
        return make_ball(dim)
    if spec.startswith("qball:"):
        _need_dim(spec, dim)
        qs = spec.split(":", 1)[1]
        q = math.inf if qs in ("inf", "oo") else float(qs)
        return make_qball(dim, q)
    if spec.startswith("ellipsoid:"):
        rest = spec.split(":", 1)[1]
        if rest == "auto":
            _need_dim(spec, dim)
            return make_ellipsoid(default_spectrum(dim))
        lam = np.array([float(s) for s in rest.split(",")])
        if dim is not None and lam.size != dim:
            raise ValueError(f"ellipsoid spectrum has {lam.size} entries, dim is {dim}")
        return make_ellipsoid(lam)
    if spec.startswith("linear:"):
        path = spec.split(":", 1)[1]
        with open(path) as fh:
            data = json.load(fh)
        if isinstance(data, dict):
            A = np.asarray(data["matrix"], dtype=float)
            base = parse_body_spec(data.get("base", "qball:2"), dim=A.shape[0])
        else:
            A = np.asarray(data, dtype=float)
            base = make_qball(A.shape[0], 2.0)
        return make_linear_image(base, A)
    raise ValueError(f"unrecognized body spec {spec!r}")


def _need_dim(spec, dim):
    if dim is None:
        raise ValueError(f"body spec {spec!r} needs an explicit dimension")
