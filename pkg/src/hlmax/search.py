"""Adversarial input search: lower bounds for discrete maximal operator norms.

A witness here is a finitely supported nonnegative input (atom positions and
weights); the certified quantity is the Rayleigh-type ratio

    ||sup_t |avg_t f|||_p / ||f||_p          (strong (p,p) lower bound)
    sup_k k * v_k / ||f||_1                  (weak (1,1) lower bound)

where v_1 >= v_2 >= ... are the sorted values of the maximal function (the
weak form optimizes the level lambda just under each value).  Any witness
gives a valid lower bound, so the search is free to be greedy: random
restarts plus atom-relocation / weight-scaling hill climbing under a fixed
evaluation budget.  Estimates are re-derivable from the stored witness alone.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .bodies import parse_body_spec
from .lattice import enumerate_points, euclidean_radii, gauge_thresholds
from .reports import NormEstimate
from .seeding import substream


@dataclass
class LatticeMaximalOperator:
    """Maximal operator over a fixed scale set, stencils precomputed."""

    body_spec: str
    dim: int
    t_values: list
    stencils: list            # list of (m_i, d) int arrays

    def apply_max(self, positions: np.ndarray, weights: np.ndarray):
        """(cells, values) of sup_t |avg_t f| on its support."""
        out: dict = {}
        for S in self.stencils:
            cnt = S.shape[0]
            cells = (positions[:, None, :] + S[None, :, :]).reshape(-1, self.dim)
            w = np.repeat(weights / cnt, cnt)
            uniq, inv = np.unique(cells, axis=0, return_inverse=True)
            agg = np.abs(np.bincount(inv, weights=w))
            for c, v in zip(map(tuple, uniq.tolist()), agg):
                if v > out.get(c, 0.0):
                    out[c] = float(v)
        cells = np.array(list(out.keys()), dtype=np.int64)
        vals = np.array(list(out.values()))
        return cells, vals

    def describe(self) -> dict:
        return {"space": "lattice", "body": self.body_spec, "dim": self.dim,
                "t_values": [float(t) for t in self.t_values]}


def resolve_operator(op_spec: dict, cap: int = 20_000_000) -> LatticeMaximalOperator:
    """Build the operator from its description.

    t_set kinds: "gauge" (all distinct stencil-changing scales of the body up
    to t_max), "euclidean" (sqrt(k) radii), "integer" (1..t_max), "explicit".
    A near-zero scale (stencil = {0}, the identity) is always included, so
    every ratio is at least 1.
    """
    body = parse_body_spec(op_spec["body"], op_spec.get("dim"))
    desc = op_spec.get("t_set", {"kind": "gauge", "t_max": 2.0})
    kind = desc.get("kind", "gauge")
    if kind == "gauge":
        ts = gauge_thresholds(body, desc["t_max"], cap=cap)
    elif kind == "euclidean":
        ts = [t for t in euclidean_radii(desc["t_max"]) if t > 0]
    elif kind == "integer":
        ts = [float(k) for k in range(1, int(desc["t_max"]) + 1)]
    elif kind == "explicit":
        ts = [float(t) for t in desc["values"]]
    else:
        raise ValueError(f"unknown t_set kind {kind!r}")
    ts = [1e-6] + ts
    stencils = [enumerate_points(body, t, cap=cap) for t in ts]
    return LatticeMaximalOperator(body_spec=op_spec["body"], dim=body.dim,
                                  t_values=ts, stencils=stencils)


def _aggregate_atoms(positions, weights):
    uniq, inv = np.unique(positions, axis=0, return_inverse=True)
    w = np.bincount(inv, weights=weights)
    return uniq, w


def lp_ratio(op: LatticeMaximalOperator, positions, weights, p: float) -> float:
    pos, w = _aggregate_atoms(np.asarray(positions, dtype=np.int64),
                              np.asarray(weights, dtype=float))
    _, vals = op.apply_max(pos, w)
    num = float(np.sum(vals ** p) ** (1.0 / p)) if not math.isinf(p) \
        else float(np.max(vals))
    den = float(np.sum(np.abs(w) ** p) ** (1.0 / p)) if not math.isinf(p) \
        else float(np.max(np.abs(w)))
    return num / den if den > 0 else 0.0


def weak11_ratio(op: LatticeMaximalOperator, positions, weights) -> float:
    """sup over levels of lambda * #{M f > lambda} / ||f||_1, optimized just
    below each attained value of M f."""
    pos, w = _aggregate_atoms(np.asarray(positions, dtype=np.int64),
                              np.asarray(weights, dtype=float))
    _, vals = op.apply_max(pos, np.abs(w))
    vals = np.sort(vals)[::-1]
    k = np.arange(1, vals.size + 1)
    return float(np.max(k * vals)) / float(np.sum(np.abs(w)))


def _structured_starts(op, n_atoms: int):
    """Known-good witness shapes: all mass at the origin, and the indicator
    of the largest stencil that fits the atom budget."""
    d = op.dim
    starts = [(np.zeros((n_atoms, d), dtype=np.int64), np.ones(n_atoms))]
    for S in reversed(op.stencils):
        if 1 < S.shape[0] <= max(n_atoms, 64):
            starts.append((S.copy(), np.ones(S.shape[0])))
            break
    return starts


def _hill_climb(op, ratio_fn, budget: int, seed: int, n_atoms: int, span: int):
    rng = substream(seed, "norm-search", op.body_spec, op.dim)
    restarts = max(1, budget // 60)
    best = (-np.inf, None, None)
    seeds = _structured_starts(op, n_atoms)
    evals_each = max(1, budget // (restarts + len(seeds)))
    for r in range(restarts + len(seeds)):
        if r < len(seeds):
            pos, w = seeds[r]
            pos, w = pos.copy(), w.copy()
            n_cur = pos.shape[0]
        else:
            n_cur = n_atoms
            pos = rng.integers(-span, span + 1, size=(n_cur, op.dim))
            w = rng.uniform(0.5, 1.5, size=n_cur)
        cur = ratio_fn(op, pos, w)
        if cur > best[0]:
            best = (cur, pos.copy(), w.copy())
        for _ in range(evals_each - 1):
            cand_pos, cand_w = pos.copy(), w.copy()
            i = rng.integers(0, n_cur)
            if rng.random() < 0.6:
                cand_pos[i] += rng.integers(-2, 3, size=op.dim)
            else:
                cand_w[i] *= math.exp(0.4 * rng.standard_normal())
            val = ratio_fn(op, cand_pos, cand_w)
            if val > cur:
                cur, pos, w = val, cand_pos, cand_w
                if cur > best[0]:
                    best = (cur, pos.copy(), w.copy())
    return best


def estimate_lp_lower_bound(op_spec: dict, p: float, budget: int = 120,
                            seed: int = 0, n_atoms: int = 12,
                            span: int | None = None,
                            cap: int = 20_000_000) -> NormEstimate:
    """Greedy witness search for the strong (p, p) lower bound."""
    op = resolve_operator(op_spec, cap=cap)
    if span is None:
        span = max(2, int(math.ceil(2 * max(op.t_values))))
    val, pos, w = _hill_climb(op, lambda o, P, W: lp_ratio(o, P, W, p),
                              budget, seed, n_atoms, span)
    return NormEstimate(
        operator=op.describe(), p=float(p), lower_bound=float(val),
        witness={"positions": pos.tolist(), "weights": w.tolist()},
        search_budget=budget, seed=seed)


def estimate_weak11_lower_bound(op_spec: dict, budget: int = 120, seed: int = 0,
                                n_atoms: int = 12, span: int | None = None,
                                cap: int = 20_000_000) -> NormEstimate:
    """Greedy witness search for the weak (1,1) lower bound."""
    op = resolve_operator(op_spec, cap=cap)
    if span is None:
        span = max(2, int(math.ceil(2 * max(op.t_values))))
    val, pos, w = _hill_climb(op, weak11_ratio, budget, seed, n_atoms, span)
    return NormEstimate(
        operator=op.describe(), p="weak-1",
        lower_bound=float(val),
        witness={"positions": pos.tolist(), "weights": w.tolist()},
        search_budget=budget, seed=seed)


def recompute_lower_bound(est: NormEstimate, cap: int = 20_000_000) -> float:
    """Re-evaluate the stored witness from scratch (verification path)."""
    op_spec = {"space": est.operator["space"], "body": est.operator["body"],
               "dim": est.operator["dim"],
               "t_set": {"kind": "explicit",
                         "values": [t for t in est.operator["t_values"] if t > 1e-5]}}
    op = resolve_operator(op_spec, cap=cap)
    pos = np.asarray(est.witness["positions"], dtype=np.int64)
    w = np.asarray(est.witness["weights"], dtype=float)
    if est.p == "weak-1":
        return weak11_ratio(op, pos, w)
    return lp_ratio(op, pos, w, float(est.p))
