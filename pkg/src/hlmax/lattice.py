"""Integer-lattice side: exact point counts, discrete averages, and the
discrete-to-continuous comparison chain.

Counting is exact integer arithmetic: membership of y in the ball of radius
N is decided by |y|^2 <= floor(N^2), with a 1e-9 absolute fuzz on N^2 so
radii given as sqrt(integer) round to the intended shell.  Counts come from
a cached recursion over coordinates (innermost dimension in closed form),
so no point list is materialized for counting.

The three counting lemmas checked here, for Z^d and Euclidean balls:

  (i)  #(B_N cap Z^d) <= 2 |B_{N_1}|, N_1 = (N^2 + d/4)^(1/2) — half-cell
       covering; and for N >= C d the volume form
       #(B_N cap Z^d) <= 2 e^(1/(8 C^2)) |B_N|.
  (ii) the unit cell centered at the origin meets B_N - x in measure at most
       2 exp(-c t^2), c = (7/32) C^2/(C+1)^2, once |x| >= N (1 + t/N)^(1/2)
       and N >= C d; the engine is the cube half-space tail
       |{y in Q : <z, y> >= s}| <= exp(-(7/8) s^2).
  (iii) a reverse count |B_N| <= C_2 #(B_N cap Z^d) for N >= C_1 d, with
       C_1 = 2(1+J), C_2 = 2 e^J, where J is the smallest integer making
       sum_{j >= J} e^(j - j^2/32) <= 1/(8e).

The chain then transfers the discrete averaging operator to the continuum:
with F the unit-cell extension of f and N_1, N_2 the two radius bumps,

    avg_N f(x)   <= 2 C_2 (N_1/N)^d  * Avg_{N_1} F(x)
    Avg_{N_1} F(x) <= 2 (N_2/N_1)^d * int_{x+Q} Avg_{N_2} F(y) dy,

which is what lets continuum maximal bounds pull back to Z^d.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .bodies import Body, ball_volume
from .reports import ExperimentReport, timed
from .seeding import substream


class CapExceeded(RuntimeError):
    """Requested enumeration would exceed the configured point cap."""


# ---------------------------------------------------------------------------
# exact counting
# ---------------------------------------------------------------------------

def _floor_fuzz(x: float) -> int:
    """floor with +1e-9 fuzz: radii sqrt(k) land exactly on shell k."""
    return int(math.floor(x + 1e-9))


@lru_cache(maxsize=None)
def _count_ball_r2(d: int, r2: int) -> int:
    """#{y in Z^d : |y|^2 <= r2}, exact, cached coordinate recursion."""
    if r2 < 0:
        return 0
    if d == 0:
        return 1
    if d == 1:
        return 2 * math.isqrt(r2) + 1
    m = math.isqrt(r2)
    total = _count_ball_r2(d - 1, r2)
    for i in range(1, m + 1):
        total += 2 * _count_ball_r2(d - 1, r2 - i * i)
    return total


def ball_lattice_count(d: int, t: float) -> int:
    """#(t B^2 cap Z^d), exact."""
    return _count_ball_r2(d, _floor_fuzz(t * t))


def qball_lattice_count(d: int, t: float, q: float) -> int:
    """#(t B^q cap Z^d), exact for q in {1, 2, inf}, fuzz-guarded otherwise."""
    if math.isinf(q):
        return (2 * _floor_fuzz(t) + 1) ** d
    if q == 2:
        return ball_lattice_count(d, t)
    if q == 1:
        return _count_l1(d, _floor_fuzz(t))
    return _count_qball_float(d, t ** q * (1.0 + 1e-12) + 1e-9, q)


@lru_cache(maxsize=None)
def _count_l1(d: int, s: int) -> int:
    if s < 0:
        return 0
    if d == 1:
        return 2 * s + 1
    total = _count_l1(d - 1, s)
    for i in range(1, s + 1):
        total += 2 * _count_l1(d - 1, s - i)
    return total


def _count_qball_float(d: int, budget: float, q: float) -> int:
    """Recursive count with budget = remaining t^q - sum |y_k|^q."""
    if budget < 0:
        return 0
    if d == 1:
        return 2 * int(math.floor(budget ** (1.0 / q))) + 1
    m = int(math.floor(budget ** (1.0 / q)))
    total = _count_qball_float(d - 1, budget, q)
    for i in range(1, m + 1):
        total += 2 * _count_qball_float(d - 1, budget - float(i) ** q, q)
    return total


def _count_ellipsoid(lambdas, budget: float) -> int:
    """#{y : sum lambda_k^2 y_k^2 <= budget}, recursion over coordinates."""
    lam = lambdas
    if budget < 0:
        return 0
    if len(lam) == 1:
        return 2 * int(math.floor(math.sqrt(budget) / lam[0])) + 1
    m = int(math.floor(math.sqrt(budget) / lam[0]))
    total = _count_ellipsoid(lam[1:], budget)
    l0sq = lam[0] * lam[0]
    for i in range(1, m + 1):
        total += 2 * _count_ellipsoid(lam[1:], budget - l0sq * i * i)
    return total


def lattice_count(body: Body, t: float, cap: int = 20_000_000) -> int:
    """#(t G cap Z^d) for any supported body; exact integer routes for the
    closed families, bounded box scan otherwise."""
    if body.kind == "qball":
        return qball_lattice_count(body.dim, t, body.params["q"])
    if body.kind == "ellipsoid":
        lam = tuple(float(x) for x in body.params["lambdas"])
        return _count_ellipsoid(lam, t * t * (1.0 + 1e-12) + 1e-9)
    return enumerate_points(body, t, cap=cap).shape[0]


def _descend_rows(d: int, range_fn, out_prefix, rows):
    """Generic coordinate descent: range_fn(prefix) gives the max |value| of
    the next coordinate; the innermost level emits whole rows vectorized."""
    if len(out_prefix) == d - 1:
        m = range_fn(out_prefix)
        if m < 0:
            return
        last = np.arange(-m, m + 1)
        row = np.empty((last.size, d), dtype=np.int64)
        row[:, :-1] = out_prefix
        row[:, -1] = last
        rows.append(row)
        return
    m = range_fn(out_prefix)
    for i in range(-m, m + 1):
        _descend_rows(d, range_fn, out_prefix + [i], rows)


def _enumerate_ellipsoid(lam: np.ndarray, t: float) -> np.ndarray:
    budget = t * t * (1.0 + 1e-12) + 1e-9
    lam2 = lam * lam

    def range_fn(prefix):
        rem = budget - float(np.sum(lam2[:len(prefix)] * np.square(prefix)))
        if rem < 0:
            return -1
        return int(math.floor(math.sqrt(rem) / lam[len(prefix)]))

    rows = []
    _descend_rows(lam.size, range_fn, [], rows)
    return np.concatenate(rows) if rows else np.zeros((0, lam.size), dtype=np.int64)


def _enumerate_qball(d: int, q: float, t: float) -> np.ndarray:
    if math.isinf(q):
        m = _floor_fuzz(t)
        axes = [np.arange(-m, m + 1)] * d
        return np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, d).astype(np.int64)
    if q == 2:
        r2 = _floor_fuzz(t * t)

        def range_fn(prefix):
            pre = np.asarray(prefix, dtype=np.int64)
            rem = r2 - int(np.sum(pre * pre))
            return math.isqrt(rem) if rem >= 0 else -1
    else:
        budget = t ** q * (1.0 + 1e-12) + 1e-9

        def range_fn(prefix):
            rem = budget - float(np.sum(np.abs(np.asarray(prefix, dtype=float)) ** q))
            if rem < 0:
                return -1
            return int(math.floor(rem ** (1.0 / q)))

    if d == 1:
        m = range_fn([])
        return np.arange(-m, m + 1, dtype=np.int64)[:, None]
    rows = []
    _descend_rows(d, range_fn, [], rows)
    return np.concatenate(rows) if rows else np.zeros((0, d), dtype=np.int64)


def enumerate_points(body: Body, t: float, cap: int = 20_000_000) -> np.ndarray:
    """Integer points of t*G as an (m, d) int array.

    Closed families go through exact coordinate descent (the count is
    pre-computed cheaply and checked against ``cap``); custom bodies fall
    back to a bounding-box scan whose candidate count is capped as well.
    """
    d = body.dim
    if body.kind == "qball" or body.kind == "ellipsoid":
        cnt = lattice_count(body, t)
        if cnt > cap:
            raise CapExceeded(f"{cnt} points at t={t:g} for {body.tag()} "
                              f"exceeds cap {cap:g}")
        if body.kind == "qball":
            return _enumerate_qball(d, body.params["q"], t)
        return _enumerate_ellipsoid(np.asarray(body.params["lambdas"], dtype=float), t)
    R = t * body.bounding_radius
    m = int(math.floor(R + 1e-9))
    if (2 * m + 1) ** d > 8 * cap:
        raise CapExceeded(f"box scan (2*{m}+1)^{d} too large for {body.tag()} at t={t:g}")
    axes = [np.arange(-m, m + 1)] * d
    grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, d)
    keep = body.gauge(grid.astype(float)) <= t * (1.0 + 1e-12) + 1e-9
    return grid[keep].astype(np.int64)


def euclidean_radii(t_max: float):
    """All attainable Euclidean lattice radii sqrt(k), k = 0..floor(t_max^2)."""
    return [math.sqrt(k) for k in range(_floor_fuzz(t_max * t_max) + 1)]


def gauge_thresholds(body: Body, t_max: float, cap: int = 20_000_000):
    """Sorted distinct gauge values of lattice points in t_max*G: the scales
    where the averaging stencil actually changes."""
    pts = enumerate_points(body, t_max, cap=cap).astype(float)
    vals = np.unique(np.round(body.gauge(pts), 12))
    return [float(v) for v in vals if v > 0] or []


# ---------------------------------------------------------------------------
# lattice functions and discrete operators
# ---------------------------------------------------------------------------

@dataclass
class LatticeFunction:
    """Finitely supported function on Z^d as a cell -> value map."""

    dim: int
    data: dict

    @classmethod
    def from_atoms(cls, dim, positions, weights):
        data = {}
        for p, w in zip(np.asarray(positions, dtype=np.int64), weights):
            key = tuple(int(v) for v in p)
            data[key] = data.get(key, 0.0) + float(w)
        return cls(dim=dim, data=data)

    def __call__(self, cell) -> float:
        return self.data.get(tuple(int(v) for v in cell), 0.0)

    @property
    def support_size(self) -> int:
        return len(self.data)

    def positions(self) -> np.ndarray:
        if not self.data:
            return np.zeros((0, self.dim), dtype=np.int64)
        return np.array(list(self.data.keys()), dtype=np.int64)

    def values(self) -> np.ndarray:
        return np.array(list(self.data.values()), dtype=float)

    def norm_lp(self, p: float) -> float:
        v = np.abs(self.values())
        if v.size == 0:
            return 0.0
        if math.isinf(p):
            return float(np.max(v))
        return float(np.sum(v ** p) ** (1.0 / p))


def discrete_average(f: LatticeFunction, body: Body, t: float,
                     cap: int = 20_000_000) -> LatticeFunction:
    """(avg_t f)(x) = (1/#S_t) sum_{y in S_t} f(x - y), S_t = (tG) cap Z^d.

    Sparse convolution: cost |supp f| * |S_t|, guarded by ``cap``.
    """
    stencil = enumerate_points(body, t, cap=cap)
    cnt = stencil.shape[0]
    pos = f.positions()
    if pos.shape[0] * cnt > cap:
        raise CapExceeded(f"support {pos.shape[0]} x stencil {cnt} exceeds cap")
    vals = f.values() / cnt
    # contribution of atom p lands on every x = p + y
    cells = (pos[:, None, :] + stencil[None, :, :]).reshape(-1, f.dim)
    w = np.repeat(vals, cnt)
    uniq, inv = np.unique(cells, axis=0, return_inverse=True)
    agg = np.bincount(inv, weights=w)
    data = {tuple(int(v) for v in c): float(a) for c, a in zip(uniq, agg) if a != 0.0}
    return LatticeFunction(dim=f.dim, data=data)


def discrete_maximal(f: LatticeFunction, body: Body, t_set,
                     cap: int = 20_000_000) -> LatticeFunction:
    """sup over t in t_set of |avg_t f| (pointwise)."""
    out = {}
    for t in t_set:
        avg = discrete_average(f, body, t, cap=cap)
        for cell, v in avg.data.items():
            a = abs(v)
            if a > out.get(cell, 0.0):
                out[cell] = a
    return LatticeFunction(dim=f.dim, data=out)


class CellExtension:
    """F(x) = f(nearest cell center): the lp-isometric extension of f to R^d,
    constant on unit cells y + [-1/2, 1/2)^d."""

    def __init__(self, f: LatticeFunction):
        self.f = f
        self.dim = f.dim

    def __call__(self, x) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        cells = np.floor(x + 0.5).astype(np.int64)
        return np.array([self.f(c) for c in cells])

    def norm_lp(self, p: float) -> float:
        # unit cells have volume 1, so the L^p and lp norms coincide exactly
        return self.f.norm_lp(p)


def extend_to_grid(f: LatticeFunction) -> CellExtension:
    return CellExtension(f)


# ---------------------------------------------------------------------------
# counting lemma checks
# ---------------------------------------------------------------------------

def lemma_count_upper_check(d: int, N: float, C: float = 1.0) -> ExperimentReport:
    """Count vs covering volume: #(B_N cap Z^d) <= 2 |B_{N_1}| always, and
    <= 2 e^(1/(8C^2)) |B_N| once N >= C d."""
    count = ball_lattice_count(d, N)
    N1 = math.sqrt(N * N + d / 4.0)
    rep = ExperimentReport(op_name="count_upper",
                           inputs={"d": d, "N": N, "C": C})
    rep.add_measurement("count", count)
    rep.add_measurement("N1", N1)
    rep.add_measurement("vol_N1", ball_volume(d, N1))
    rep.add_margin("half_cell_cover", float(count), 2.0 * ball_volume(d, N1))
    if N >= C * d:
        factor = 2.0 * math.exp(1.0 / (8.0 * C * C))
        rep.add_margin("volume_form", float(count), factor * ball_volume(d, N),
                       note=f"N >= C d regime, factor {factor:.6g}")
        # the covering really is inside the inflated ball: (N1/N)^d <= e^(1/(8C^2))
        rep.add_margin("radius_inflation", d * math.log(N1 / N), 1.0 / (8.0 * C * C))
    else:
        rep.notes.append(f"N={N} < C d={C * d:g}: volume form not applicable")
    return rep


def halfspace_tail_bound(s: float) -> float:
    """Cube half-space tail: |{y in Q : <z, y> >= s}| <= exp(-(7/8) s^2)."""
    return math.exp(-0.875 * s * s)


def cube_halfspace_measure(z, s: float, seed: int = 0, n: int = 100_000):
    """MC measure of {y in Q : <z, y> >= s}, Q the centered unit cube.
    Returns (estimate, std_error)."""
    z = np.asarray(z, dtype=float)
    z = z / np.linalg.norm(z)
    rng = substream(seed, "halfspace", len(z), float(s))
    U = rng.uniform(-0.5, 0.5, size=(n, z.size))
    p = float(np.mean(U @ z >= s))
    return p, math.sqrt(max(p * (1.0 - p), 1e-300) / n)


def halfspace_tail_check(d: int, s: float, seed: int = 0, n: int = 100_000,
                         z=None, slack_sigmas: float = 3.0) -> ExperimentReport:
    """Assert the half-space tail bound by MC for one direction."""
    if z is None:
        rng = substream(seed, "halfspace-dir", d)
        z = rng.standard_normal(d)
    p, se = cube_halfspace_measure(z, s, seed=seed, n=n)
    rep = ExperimentReport(op_name="halfspace_tail", seed=seed,
                           inputs={"d": d, "s": s, "n": n})
    rep.add_measurement("measure", p, se)
    rep.add_margin("tail_bound", p, halfspace_tail_bound(s), slack_sigmas * se)
    return rep


def cell_intersection_decay_check(d: int, N: float, t: float, C: float = 1.0,
                                  seed: int = 0, n: int = 100_000,
                                  slack_sigmas: float = 3.0) -> ExperimentReport:
    """Far cells barely meet the ball: for |x| >= N (1 + t/N)^(1/2) and
    N >= C d, the unit cell at x meets B_N in measure <= 2 exp(-c t^2),
    c = (7/32) C^2 / (C+1)^2.  MC over the cell."""
    if N < C * d:
        raise ValueError(f"needs N >= C d: N={N}, C d={C * d:g}")
    rng = substream(seed, "cell-decay", d, float(N), float(t))
    direction = rng.standard_normal(d)
    direction /= np.linalg.norm(direction)
    x = direction * N * math.sqrt(1.0 + t / N)
    U = rng.uniform(-0.5, 0.5, size=(n, d))
    inside = np.sum((U + x) ** 2, axis=1) <= N * N
    p = float(np.mean(inside))
    se = math.sqrt(max(p * (1.0 - p), 1e-300) / n)
    c = (7.0 / 32.0) * C * C / (C + 1.0) ** 2
    rep = ExperimentReport(op_name="cell_intersection_decay", seed=seed,
                           inputs={"d": d, "N": N, "t": t, "C": C, "n": n})
    rep.add_measurement("measure", p, se)
    rep.add_measurement("decay_rate_c", c)
    rep.add_margin("decay_bound", p, 2.0 * math.exp(-c * t * t), slack_sigmas * se)
    return rep


@dataclass
class ReverseCountConstants:
    J: int
    C1: float
    C2: float
    tail_at_J: float
    tail_before_J: float
    threshold: float


def _shell_tail(J: int, horizon: int = 4000) -> float:
    j = np.arange(J, J + horizon, dtype=float)
    return float(np.sum(np.exp(j - j * j / 32.0)))


_REVERSE_CACHE: ReverseCountConstants | None = None


def reverse_count_constants() -> ReverseCountConstants:
    """Constants of the reverse counting bound |B_N| <= C_2 #(B_N cap Z^d).

    J is the least integer with sum_{j >= J} e^(j - j^2/32) <= 1/(8e); then
    C_1 = 2 (1 + J) (validity threshold N >= C_1 d) and C_2 = 2 e^J.
    """
    global _REVERSE_CACHE
    if _REVERSE_CACHE is None:
        threshold = 1.0 / (8.0 * math.e)
        J = 1
        while _shell_tail(J) > threshold:
            J += 1
        _REVERSE_CACHE = ReverseCountConstants(
            J=J, C1=2.0 * (1 + J), C2=2.0 * math.exp(J),
            tail_at_J=_shell_tail(J), tail_before_J=_shell_tail(J - 1),
            threshold=threshold)
    return _REVERSE_CACHE


def reverse_count_check(d: int, N: float) -> ExperimentReport:
    """Exact check of |B_N| <= C_2 #(B_N cap Z^d) in the regime N >= C_1 d,
    plus the minimality bracket for J."""
    k = reverse_count_constants()
    rep = ExperimentReport(op_name="reverse_count", inputs={"d": d, "N": N})
    rep.add_measurement("J", k.J)
    rep.add_measurement("C1", k.C1)
    rep.add_measurement("C2", k.C2)
    rep.add_margin("tail_at_J", k.tail_at_J, k.threshold,
                   note="sum_{j>=J} e^(j - j^2/32) <= 1/(8e)")
    rep.add_margin("tail_minimality", k.threshold, k.tail_before_J,
                   note="J-1 already violates the tail target")
    if N < k.C1 * d:
        raise ValueError(f"needs N >= C1 d = {k.C1 * d:g}, got N={N}")
    count = ball_lattice_count(d, N)
    rep.add_measurement("count", count)
    rep.add_measurement("volume", ball_volume(d, N))
    rep.add_margin("reverse_count", ball_volume(d, N), k.C2 * count)
    return rep


# ---------------------------------------------------------------------------
# discrete-to-continuous comparison chain
# ---------------------------------------------------------------------------

def _cell_ball_volume(center_dist: float, d: int, radius: float, rng, n_mc: int):
    """|B_radius(x) cap (y + Q)| with |x - y| = center_dist: exact 0/1 when
    the cell clears sqrt(d)/2, MC over the cell otherwise.

    Returns (volume, std_error)."""
    half_diag = 0.5 * math.sqrt(d)
    if center_dist <= radius - half_diag:
        return 1.0, 0.0
    if center_dist >= radius + half_diag:
        return 0.0, 0.0
    U = rng.uniform(-0.5, 0.5, size=(n_mc, d))
    # wlog the offset along the first axis
    U[:, 0] += center_dist
    p = float(np.mean(np.sum(U * U, axis=1) <= radius * radius))
    return p, math.sqrt(max(p * (1.0 - p), 1e-300) / n_mc)


def _continuum_ball_average(f: LatticeFunction, x: np.ndarray, radius: float,
                            rng, n_mc: int):
    """Avg over B_radius(x) of the cell extension F: per-atom intersection
    volumes divided by the ball volume.  Returns (value, std_error)."""
    d = f.dim
    vol = ball_volume(d, radius)
    acc = 0.0
    var = 0.0
    for cell, w in f.data.items():
        dist = float(np.linalg.norm(np.asarray(cell, dtype=float) - x))
        v, se = _cell_ball_volume(dist, d, radius, rng, n_mc)
        acc += w * v
        var += (w * se) ** 2
    return acc / vol, math.sqrt(var) / vol


def comparison_chain_check(d: int, N: float, seed: int = 0, n_atoms: int = 20,
                           n_eval: int = 40, n_mc: int = 10_000,
                           slack_sigmas: float = 3.0) -> ExperimentReport:
    """Pointwise transfer from the lattice to the continuum, with the two
    bump radii N_1 = (N^2 + d/4)^(1/2) and N_2 = (N_1^2 + d/4)^(1/2):

        avg_N f(x)     <= K_lat  * Avg_{N_1} F(x),  K_lat  = 2 C_2 (N_1/N)^d,
        Avg_{N_1} F(x) <= K_cell * mean_{y in x+Q} Avg_{N_2} F(y),
                                                    K_cell = 2 (N_2/N_1)^d,

    checked on random nonnegative sparse inputs at the atoms and at random
    nearby points, needing N >= C_1 d for the reverse count behind K_lat.
    All factors are logged individually."""
    k = reverse_count_constants()
    if N < k.C1 * d:
        raise ValueError(f"chain needs N >= C1 d = {k.C1 * d:g}, got N={N}")
    rng = substream(seed, "chain", d, float(N))
    span = max(2, int(N))
    atoms = rng.integers(-span, span + 1, size=(n_atoms, d))
    weights = rng.uniform(0.1, 1.0, size=n_atoms)
    f = LatticeFunction.from_atoms(d, atoms, weights)

    N1 = math.sqrt(N * N + d / 4.0)
    N2 = math.sqrt(N1 * N1 + d / 4.0)
    K_lat = 2.0 * k.C2 * (N1 / N) ** d
    K_cell = 2.0 * (N2 / N1) ** d
    count_N = ball_lattice_count(d, N)
    r2max = _floor_fuzz(N * N)

    extra = atoms[rng.integers(0, n_atoms, size=max(0, n_eval - n_atoms))] + \
        rng.integers(-span // 2, span // 2 + 1, size=(max(0, n_eval - n_atoms), d))
    eval_pts = np.concatenate([atoms, extra], axis=0)[:n_eval]

    rep = ExperimentReport(op_name="comparison_chain", seed=seed,
                           inputs={"d": d, "N": N, "n_atoms": n_atoms,
                                   "n_eval": len(eval_pts), "n_mc": n_mc})
    with timed(rep):
        rep.add_measurement("N1", N1)
        rep.add_measurement("N2", N2)
        rep.add_measurement("K_lattice_to_continuum", K_lat)
        rep.add_measurement("K_point_to_cell", K_cell)
        rep.add_measurement("C2", k.C2)
        rep.add_measurement("count_N", count_N)
        rep.add_margin("radius_inflation", d * math.log(N1 / N),
                       1.0 / (8.0 * k.C1 ** 2),
                       note="(N1/N)^d <= e^(1/(8 C1^2)) in the valid regime")

        apos = f.positions()
        avals = f.values()
        worst_lat = None
        worst_cell = None
        n_inner = 64
        for i, xint in enumerate(eval_pts):
            x = xint.astype(float)
            # exact lattice average at scale N
            d2 = np.sum((apos - xint) ** 2, axis=1)
            lhs = float(np.sum(avals[d2 <= r2max])) / count_N

            mid, mid_se = _continuum_ball_average(
                f, x, N1, substream(seed, "chain-mc", i, 0), n_mc)
            g_lat = lhs - K_lat * mid - slack_sigmas * K_lat * mid_se
            if worst_lat is None or g_lat > worst_lat[0]:
                worst_lat = (g_lat, lhs, K_lat * mid,
                             slack_sigmas * K_lat * mid_se, i)

            # cell average of the N2-scale continuum average around x
            yrng = substream(seed, "chain-y", i)
            vals = np.empty(n_inner)
            ses = np.empty(n_inner)
            for j in range(n_inner):
                y = x + yrng.uniform(-0.5, 0.5, size=d)
                vals[j], ses[j] = _continuum_ball_average(
                    f, y, N2, substream(seed, "chain-mc", i, j + 1), n_mc)
            cell_mean = float(np.mean(vals))
            cell_se = math.sqrt(float(np.var(vals)) / n_inner
                                + float(np.mean(ses ** 2)) / n_inner)
            slack_cell = slack_sigmas * (mid_se + K_cell * cell_se)
            g_cell = mid - K_cell * cell_mean - slack_cell
            if worst_cell is None or g_cell > worst_cell[0]:
                worst_cell = (g_cell, mid, K_cell * cell_mean, slack_cell, i)

        rep.add_margin("lattice_to_continuum", worst_lat[1], worst_lat[2],
                       worst_lat[3], note=f"eval point #{worst_lat[4]}")
        rep.add_margin("point_to_cell", worst_cell[1], worst_cell[2],
                       worst_cell[3], note=f"eval point #{worst_cell[4]}")
    return rep
