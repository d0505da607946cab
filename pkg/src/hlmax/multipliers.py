"""Fourier side of averaging: section profiles and multiplier bounds.

Convention: Fourier transform with the +2*pi*i phase,

    m_G(xi) = int_G exp(2 pi i <x, xi>) dx,

so for a body of volume 1 the averaging operator at scale t has symbol
m_G(t xi).  For a body in isotropic position with isotropic constant L the
multiplier obeys three uniform bounds, asserted here with the deliberately
loose common constant 150 (the empirical constants come out under 5):

    |m_G(xi)|        <= 150 (L |xi|)^(-1)
    |m_G(xi) - 1|    <= 150  L |xi|
    |<xi, grad m_G>| <= 150.

Two independent estimators are kept for m_G: (a) the plain Monte Carlo phase
average over uniform samples of G, and (b) a 1-d quadrature against the
section profile phi_zeta(u) = Vol_{d-1}{x in G : <x, zeta> = u}, using

    m_G(xi) = int phi_{xi/|xi|}(u) exp(2 pi i |xi| u) du.

The section profile of a symmetric convex body is even, non-increasing in
|u|, log-concave, and pinned to L through 3/16 <= L phi(0) <= 3 and the
exponential envelope phi(u) <= 2 phi(0) exp(-phi(0) |u|).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .bodies import Body, IsotropicBody, sample_uniform
from .reports import ExperimentReport, timed
from .seeding import substream

TWO_PI = 2.0 * math.pi

#: common constant asserted in the three multiplier bounds (gating)
MULTIPLIER_CONSTANT = 150.0


# ---------------------------------------------------------------------------
# section profiles
# ---------------------------------------------------------------------------

@dataclass
class SectionProfile:
    """Slab-count estimate of the section function along one direction."""

    direction: np.ndarray
    u: np.ndarray              # symmetric grid, odd length, 0 at the center
    phi: np.ndarray
    std_error: np.ndarray
    slab_width: np.ndarray     # per-point effective width after widening
    support_radius: float      # max |<x, zeta>| over the sample
    n: int
    flagged: np.ndarray        # True where the slab stayed under-populated

    @property
    def phi0(self) -> float:
        return float(self.phi[self.u.size // 2])

    @property
    def phi0_std_error(self) -> float:
        return float(self.std_error[self.u.size // 2])


def section_profile(iso: IsotropicBody, direction, seed: int = 0, n: int = 200_000,
                    n_grid: int = 129, slab_width: float | None = None,
                    min_count: int = 50) -> SectionProfile:
    """Estimate phi_zeta on a symmetric grid by counting samples in slabs.

    Since |G| = 1, the projection <x, zeta> of a uniform point has density
    exactly phi_zeta, so phi(u) ~ #{|<x,zeta>| - u| <= h/2} / (n h).  Slabs
    holding fewer than ``min_count`` samples are widened (doubling h, up to
    six times) and flagged if still under-populated.
    """
    zeta = np.asarray(direction, dtype=float)
    zeta = zeta / np.linalg.norm(zeta)
    if n_grid % 2 == 0:
        n_grid += 1
    X = sample_uniform(iso.body, seed, n)
    t = np.sort(X @ zeta)
    u_sup = float(np.max(np.abs(t)))
    u = np.linspace(-u_sup, u_sup, n_grid)
    h0 = slab_width if slab_width is not None else 2.0 * u_sup / (n_grid - 1) * 2.0

    def slab_count(center, h):
        return int(np.searchsorted(t, center + 0.5 * h, side="right")
                   - np.searchsorted(t, center - 0.5 * h, side="left"))

    # Mirrored slabs are widened *jointly* so each +-u pair shares one
    # bandwidth; otherwise the shape margins below would compare estimates
    # smoothed at different scales, which is systematically biased at the
    # tails.
    phi = np.empty(n_grid)
    se = np.empty(n_grid)
    width = np.empty(n_grid)
    flagged = np.zeros(n_grid, dtype=bool)
    half = n_grid // 2
    for i in range(half + 1):
        jlo, jhi = half - i, half + i
        h = h0
        for _ in range(7):
            clo, chi = slab_count(u[jlo], h), slab_count(u[jhi], h)
            if min(clo, chi) >= min_count or h > 2.0 * u_sup:
                break
            h *= 2.0
        for j, cnt in ((jlo, clo), (jhi, chi)):
            p = cnt / n
            phi[j] = p / h
            se[j] = math.sqrt(max(p * (1.0 - p), 1e-300) / n) / h
            width[j] = h
            flagged[j] = cnt < min_count
    return SectionProfile(direction=zeta, u=u, phi=phi, std_error=se,
                          slab_width=width, support_radius=u_sup, n=n,
                          flagged=flagged)


def check_section_bounds(profile: SectionProfile, L: float | None = None,
                         L_std_error: float = 0.0, slack_sigmas: float = 3.0,
                         mass_tol: float = 0.05) -> ExperimentReport:
    """Assert the structural facts about a section profile.

    Checked: evenness, monotone decay away from 0, log-concavity (on points
    at least 5 std errors above zero), the envelope
    phi(u) <= 2 phi(0) exp(-phi(0)|u|), unit mass of the profile, and — when
    L is supplied — the center bracket 3/16 <= L phi(0) <= 3.

    The slab estimates are box-smoothed at the per-point bandwidth, which
    preserves evenness, unimodality, and log-concavity only between points
    smoothed at the *same* bandwidth; shape margins therefore skip pairs or
    triples with mismatched widths (a handful of tail points after adaptive
    widening) and drop flagged (under-populated) slabs.  The envelope is
    evaluated at |u| - h/2, which dominates the box-smoothed value by
    monotonicity, so that comparison needs no smoothing correction.
    """
    u, phi, se, flagged = profile.u, profile.phi, profile.std_error, profile.flagged
    w = profile.slab_width
    m = u.size // 2
    rep = ExperimentReport(op_name="section_bounds",
                           inputs={"n": profile.n, "n_grid": u.size,
                                   "support_radius": profile.support_radius})

    def worst(name, lhs_arr, slack_arr, where, pos):
        if not np.any(where):
            rep.add_margin(name, 0.0, 0.0, 0.0, note="no comparable points")
            return
        masked = np.where(where, lhs_arr - slack_arr, -np.inf)
        k = int(np.argmax(masked))
        rep.add_margin(name, float(lhs_arr[k]), 0.0, float(slack_arr[k]),
                       note=f"u={pos[k]:.4g}")

    # evenness: mirrored grid points (equal widths by construction)
    ok = ~flagged & ~flagged[::-1]
    worst("even", np.abs(phi - phi[::-1]), slack_sigmas * (se + se[::-1]), ok, u)

    # non-increasing for u >= 0, same-bandwidth neighbors only
    rphi, rse, rw = phi[m:], se[m:], w[m:]
    rflag = flagged[m:]
    ok = (rw[1:] == rw[:-1]) & ~rflag[1:] & ~rflag[:-1]
    worst("monotone", rphi[1:] - rphi[:-1],
          slack_sigmas * (rse[1:] + rse[:-1]), ok, u[m + 1:])

    # log-concavity on well-resolved interior triples of one bandwidth
    good = (phi > 5.0 * se) & ~flagged
    ok = good[1:-1] & good[:-2] & good[2:] \
        & (w[1:-1] == w[:-2]) & (w[1:-1] == w[2:])
    if np.any(ok):
        mid = np.where(ok)[0] + 1
        lhs = 0.5 * (np.log(phi[mid - 1]) + np.log(phi[mid + 1])) - np.log(phi[mid])
        rel = se / np.maximum(phi, 1e-300)
        slack = slack_sigmas * (rel[mid] + 0.5 * (rel[mid - 1] + rel[mid + 1]))
        k = int(np.argmax(lhs - slack))
        rep.add_margin("log_concave", float(lhs[k]), 0.0, float(slack[k]),
                       note=f"u={u[mid[k]]:.4g}")

    # exponential envelope through the center value
    phi0, se0 = profile.phi0, profile.phi0_std_error
    uu = np.maximum(np.abs(u) - 0.5 * w, 0.0)
    env = 2.0 * phi0 * np.exp(-phi0 * uu)
    denv = 2.0 * np.exp(-phi0 * uu) * (1.0 + phi0 * uu)
    slack = slack_sigmas * (se + se0 * denv)
    over = phi - env
    k = int(np.argmax(over - slack))
    rep.add_margin("envelope", float(over[k]), 0.0, float(slack[k]),
                   note=f"u={u[k]:.4g}")

    # total mass (trapezoid) — discretization folded into mass_tol
    mass = float(np.trapezoid(phi, u))
    mass_se = float(np.sqrt(np.sum((np.gradient(u) * se) ** 2)))
    rep.add_measurement("mass", mass, mass_se)
    rep.add_margin("mass", abs(mass - 1.0), mass_tol, slack_sigmas * mass_se)

    if L is not None:
        prod = L * phi0
        slack = slack_sigmas * (L * se0 + phi0 * L_std_error)
        rep.add_measurement("L_phi0", prod, slack / slack_sigmas)
        rep.add_margin("center_lower", 3.0 / 16.0, prod, slack)
        rep.add_margin("center_upper", prod, 3.0, slack)
    return rep


# ---------------------------------------------------------------------------
# multiplier estimators
# ---------------------------------------------------------------------------

@dataclass
class MultiplierSample:
    xi: np.ndarray
    value: complex                 # estimator (a): MC phase average
    std_error: float
    radial_derivative: complex     # <xi, grad m> estimate
    rd_std_error: float
    quad_value: complex | None = None   # estimator (b): section quadrature
    quad_std_error: float | None = None
    agreement_sigmas: float | None = None
    flagged: bool = False


def multiplier_batch(iso: IsotropicBody, xis, seed: int = 0, n: int = 20_000,
                     chunk: int | None = None):
    """MC estimates of m_G and <xi, grad m_G> for many frequencies at once.

    One shared sample batch (common random numbers) serves every xi; the
    phase matrix is accumulated in sample chunks to bound memory.  Returns
    (m, m_se, rd, rd_se) arrays over the rows of ``xis``.
    """
    Xi = np.atleast_2d(np.asarray(xis, dtype=float))
    k = Xi.shape[0]
    if chunk is None:
        chunk = max(1, 2_000_000 // max(k, 1))
    S = np.zeros(k, dtype=complex)
    S2r = np.zeros(k)
    S2i = np.zeros(k)
    Sd = np.zeros(k, dtype=complex)
    Sd2r = np.zeros(k)
    Sd2i = np.zeros(k)
    done = 0
    X = sample_uniform(iso.body, seed, n)
    while done < n:
        B = X[done:done + chunk]
        P = B @ Xi.T                        # (chunk, k) in cycles
        E = np.exp(1j * TWO_PI * P)
        D = (1j * TWO_PI) * P * E           # integrand of <xi, grad m>
        S += E.sum(axis=0)
        S2r += np.sum(E.real ** 2, axis=0)
        S2i += np.sum(E.imag ** 2, axis=0)
        Sd += D.sum(axis=0)
        Sd2r += np.sum(D.real ** 2, axis=0)
        Sd2i += np.sum(D.imag ** 2, axis=0)
        done += B.shape[0]
    m = S / n
    var = (S2r / n - m.real ** 2) + (S2i / n - m.imag ** 2)
    m_se = np.sqrt(np.maximum(var, 0.0) / n)
    rd = Sd / n
    vard = (Sd2r / n - rd.real ** 2) + (Sd2i / n - rd.imag ** 2)
    rd_se = np.sqrt(np.maximum(vard, 0.0) / n)
    return m, m_se, rd, rd_se


def multiplier(iso: IsotropicBody, xi, seed: int = 0, n: int = 200_000,
               quadrature: bool = True, agree_sigmas: float = 5.0) -> MultiplierSample:
    """Estimate m_G(xi) by MC, optionally cross-checked by section quadrature.

    The quadrature route needs the grid step below 1/(8 |xi|) to resolve the
    oscillation; its error bar comes from 8-way batch means on the same
    sample set.  The sample is flagged when the two routes disagree by more
    than ``agree_sigmas`` combined std errors.
    """
    xi = np.asarray(xi, dtype=float)
    m, m_se, rd, rd_se = multiplier_batch(iso, xi[None, :], seed=seed, n=n)
    out = MultiplierSample(xi=xi, value=complex(m[0]), std_error=float(m_se[0]),
                           radial_derivative=complex(rd[0]), rd_std_error=float(rd_se[0]))
    if not quadrature:
        return out
    r = float(np.linalg.norm(xi))
    if r == 0:
        out.quad_value, out.quad_std_error, out.agreement_sigmas = 1.0 + 0j, 0.0, 0.0
        return out
    zeta = xi / r
    X = sample_uniform(iso.body, seed, n)
    t = X @ zeta
    u_sup = float(np.max(np.abs(t)))
    step = min(u_sup / 64.0, 1.0 / (8.0 * r))
    grid = np.arange(-u_sup - step, u_sup + 2 * step, step)
    h = 2.0 * step
    n_batches = 8
    vals = []
    for b in range(n_batches):
        tb = np.sort(t[b::n_batches])
        cnt = (np.searchsorted(tb, grid + 0.5 * h, side="right")
               - np.searchsorted(tb, grid - 0.5 * h, side="left"))
        phi_b = cnt / (tb.size * h)
        vals.append(np.trapezoid(phi_b * np.exp(1j * TWO_PI * r * grid), grid))
    vals = np.array(vals)
    qv = complex(vals.mean())
    q_se = float(np.sqrt((vals.real.std(ddof=1) ** 2 + vals.imag.std(ddof=1) ** 2)
                         / n_batches))
    out.quad_value, out.quad_std_error = qv, q_se
    combined = math.hypot(out.std_error, q_se)
    out.agreement_sigmas = abs(out.value - qv) / combined if combined > 0 else 0.0
    out.flagged = bool(out.agreement_sigmas > agree_sigmas)
    return out


def cube_multiplier_exact(xi) -> complex:
    """m of the unit-volume cube: prod_j sin(pi xi_j)/(pi xi_j) (real)."""
    return complex(np.prod(np.sinc(np.asarray(xi, dtype=float)), axis=-1))


def check_multiplier_bounds(iso: IsotropicBody, seed: int = 0, n_xi: int = 1000,
                            n: int = 20_000, constant: float = MULTIPLIER_CONSTANT,
                            xi_norm_range=(1e-2, 1e2),
                            slack_sigmas: float = 3.0) -> ExperimentReport:
    """The three symbol bounds at random frequencies, zero violations allowed.

    Frequencies: random directions with log-uniform norms in
    ``xi_norm_range``.  Each of the three bounds is asserted at every xi with
    ``slack_sigmas`` MC std errors of slack; the report carries the worst
    margin per bound plus the empirical constants, which come out far below
    the asserted one."""
    body = iso.body
    L, L_se = iso.L, iso.L_std_error
    d = body.dim
    rng = substream(seed, "multiplier-xi", body.tag())
    dirs = rng.standard_normal((n_xi, d))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    lo, hi = xi_norm_range
    norms = np.exp(rng.uniform(math.log(lo), math.log(hi), size=n_xi))
    Xi = dirs * norms[:, None]

    rep = ExperimentReport(op_name="multiplier_bounds", seed=seed,
                           inputs={"body": body.tag(), "n_xi": n_xi, "n": n,
                                   "constant": constant,
                                   "xi_norm_range": list(xi_norm_range)})
    with timed(rep):
        m, m_se, rd, rd_se = multiplier_batch(iso, Xi, seed=seed, n=n)
        r = norms
        absm = np.abs(m)

        decay_rhs = constant / (L * r)
        decay_slack = slack_sigmas * (m_se + L_se * constant / (L * L * r))
        decay_gap = absm - decay_rhs - decay_slack
        k = int(np.argmax(decay_gap))
        rep.add_margin("decay_worst", float(absm[k]), float(decay_rhs[k]),
                       float(decay_slack[k]), note=f"|xi|={r[k]:.4g}")
        rep.add_measurement("decay_violations", int(np.sum(decay_gap > 0)))
        rep.add_measurement("decay_empirical_const", float(np.max(absm * L * r)))

        prox_lhs = np.abs(m - 1.0)
        prox_rhs = constant * L * r
        prox_slack = slack_sigmas * (m_se + L_se * constant * r)
        prox_gap = prox_lhs - prox_rhs - prox_slack
        k = int(np.argmax(prox_gap))
        rep.add_margin("proximity_worst", float(prox_lhs[k]), float(prox_rhs[k]),
                       float(prox_slack[k]), note=f"|xi|={r[k]:.4g}")
        rep.add_measurement("proximity_violations", int(np.sum(prox_gap > 0)))
        rep.add_measurement("proximity_empirical_const",
                            float(np.max(prox_lhs / (L * r))))

        der_lhs = np.abs(rd)
        der_slack = slack_sigmas * rd_se
        der_gap = der_lhs - constant - der_slack
        k = int(np.argmax(der_gap))
        rep.add_margin("derivative_worst", float(der_lhs[k]), constant,
                       float(der_slack[k]), note=f"|xi|={r[k]:.4g}")
        rep.add_measurement("derivative_violations", int(np.sum(der_gap > 0)))
        rep.add_measurement("derivative_empirical_const", float(np.max(der_lhs)))
    return rep


# ---------------------------------------------------------------------------
# scale-side symbols
# ---------------------------------------------------------------------------

def poisson_symbol(t: float, xi_norm, L: float):
    """Symbol exp(-2 pi t L |xi|) of the (L-calibrated) Poisson semigroup."""
    return np.exp(-TWO_PI * t * L * np.asarray(xi_norm, dtype=float))


def dyadic_symbol_sum(a: float, terms_each_side: int = 60):
    """sum over n in Z of min(2^n a, (2^n a)^-1), truncated symmetrically.

    Returns (value, truncation_bound); the tail bound is
    2^-terms (a + 1/a).  The full sum is scale-invariant under a -> 2a,
    equals 3 exactly at dyadic a (and only there), and dips to 2 sqrt 2 at
    half-dyadic points.
    """
    if a <= 0:
        raise ValueError("a must be positive")
    n = np.arange(-terms_each_side, terms_each_side + 1)
    x = np.ldexp(a, n)                     # 2^n * a without overflow games
    value = float(np.sum(np.minimum(x, 1.0 / x)))
    bound = 2.0 ** (-terms_each_side) * (a + 1.0 / a)
    return value, bound


# ---------------------------------------------------------------------------
# discrete (lattice) multipliers
# ---------------------------------------------------------------------------

def discrete_multiplier(body: Body, t: float, xi, point_cap: int = 20_000_000):
    """Normalized exponential sum over the lattice points of the dilate t*G.

    Exact (no Monte Carlo): (1/#pts) sum_y exp(2 pi i <xi, y>) over
    y in (t G) cap Z^d.  Returns (value, count).
    """
    from .lattice import enumerate_points

    pts = enumerate_points(body, t, cap=point_cap)
    if pts.shape[0] == 0:
        raise ValueError(f"no lattice points in {body.tag()} at t={t}")
    xi = np.asarray(xi, dtype=float)
    phases = pts @ xi
    value = complex(np.mean(np.exp(1j * TWO_PI * phases)))
    return value, pts.shape[0]


def dirichlet_product(t: float, xi) -> complex:
    """Closed form for the cube's discrete multiplier: product of Dirichlet
    kernels sin((2M+1) pi xi_j) / ((2M+1) sin(pi xi_j)), M = floor(t)."""
    M = int(math.floor(t))
    xi = np.atleast_1d(np.asarray(xi, dtype=float))
    frac = xi - np.round(xi)
    out = np.empty_like(frac)
    tiny = np.abs(frac) < 1e-14
    out[tiny] = 1.0
    f = frac[~tiny]
    out[~tiny] = np.sin((2 * M + 1) * math.pi * f) / ((2 * M + 1) * np.sin(math.pi * f))
    return complex(np.prod(out))


def torus_distance(xi) -> float:
    """Euclidean distance from xi to the nearest integer lattice point."""
    xi = np.asarray(xi, dtype=float)
    return float(np.linalg.norm(xi - np.round(xi)))


def kappa_scale(d: int, t: float, q: float) -> float:
    """kappa_q(d, t) = t d^(-1/q): the effective scale entering the
    conjectured discrete multiplier bounds (t for the cube)."""
    if math.isinf(q):
        return float(t)
    return float(t) * d ** (-1.0 / q)


def explore_conjectural_bounds(body: Body, t_values, seed: int = 0,
                               n_xi: int = 50, point_cap: int = 20_000_000) -> ExperimentReport:
    """Empirical constants for the conjectured discrete multiplier bounds.

    Non-gating exploration: for random torus frequencies, log the observed
    sup of |m - 1| / (kappa ||xi||), |m| * kappa ||xi||, and the dyadic
    t-difference t |m_t - m_{t-1}|, where ||xi|| is the torus distance and
    kappa the q-dependent effective scale.  Nothing is asserted.
    """
    q = body.params.get("q", math.inf) if body.kind == "qball" else None
    if q is None:
        raise ValueError("conjectural exploration is for q-balls")
    d = body.dim
    rng = substream(seed, "conjectural-xi", body.tag())
    Xi = rng.uniform(-0.5, 0.5, size=(n_xi, d))
    dist = np.array([torus_distance(x) for x in Xi])

    rep = ExperimentReport(op_name="conjectural_bounds", seed=seed, gating=False,
                           inputs={"body": body.tag(), "t_values": list(map(float, t_values)),
                                   "n_xi": n_xi})
    with timed(rep):
        prev = {}
        for t in t_values:
            kappa = kappa_scale(d, t, q)
            vals = np.empty(n_xi, dtype=complex)
            for j, x in enumerate(Xi):
                vals[j], _ = discrete_multiplier(body, t, x, point_cap=point_cap)
            prox = np.max(np.abs(vals - 1.0) / np.maximum(kappa * dist, 1e-300))
            decay = np.max(np.abs(vals) * kappa * dist)
            rep.add_measurement(f"proximity_const_t={t:g}", float(prox))
            rep.add_measurement(f"decay_const_t={t:g}", float(decay))
            if prev:
                diff = float(np.max(np.abs(vals - prev["vals"])) * t)
                rep.add_measurement(f"t_derivative_const_t={t:g}", diff)
            prev = {"vals": vals}
        rep.notes.append("exploration only: conjectured bounds, nothing asserted")
    return rep
