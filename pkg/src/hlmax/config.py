"""Run configuration: built-in defaults, optionally overridden from TOML.

Every gating tolerance used by the suite lives here (and in the shipped
``default.toml``, which mirrors these values), so a reviewer can re-run the
whole gate tighter or looser without touching code.  Overrides are merged
key-by-key into the defaults; unknown keys are rejected to catch typos.
"""

from __future__ import annotations

import copy

try:
    import tomllib  # Python >= 3.11
except ModuleNotFoundError:  # pragma: no cover
    import tomli as tomllib

DEFAULTS = {
    "seed": 20260823,
    "threads": 1,
    "sampling": {
        "rejection_floor": 1e-4,
        "point_cap": 20_000_000,
    },
    "multiplier_oracle": {          # cube MC vs product formula
        "dims": [1, 2, 3, 4, 5, 6, 7, 8],
        "xi_per_dim": 25,
        "n_samples": 1_000_000,
        "sigmas": 3.0,
        "xi_norm_min": 0.05,
        "xi_norm_max": 5.0,
    },
    "multiplier_bounds": {
        "bodies": ["qball:1", "qball:2", "qball:inf", "ellipsoid:auto"],
        "dims": [2, 3, 4, 5, 6, 7, 8],
        "n_xi": 1000,
        "n_samples": 20_000,
        "constant": 150.0,
        "sigmas": 3.0,
        "xi_norm_min": 1e-2,
        "xi_norm_max": 1e2,
    },
    "sections": {
        "bodies": ["qball:1", "qball:2", "qball:inf", "ellipsoid:auto"],
        "dims": [2, 5, 8],
        "n_samples": 150_000,
        "n_grid": 129,
        "sigmas": 3.0,
        "mass_tol": 0.05,
        "extra_random_directions": 1,
    },
    "symbol_sum": {
        "grid_points": 10_000,
        "sup_tol": 1e-9,
        "terms_each_side": 60,
        "invariance_tol": 1e-9,
    },
    "rademacher_menshov": {
        "trials_per_level": 10_000,
        "levels": [1, 2, 3, 4, 5, 6, 7, 8, 9, 10],
    },
    "counting": {
        "dims": [1, 2, 3, 4],
        "n_max": 25,
        "n_max_low_dim": 200,
    },
    "halfspace": {
        "dims": [2, 3, 4, 5, 6, 7, 8, 9, 10],
        "s_values": [0.25, 0.5, 1.0],
        "n_samples": 100_000,
        "sigmas": 3.0,
    },
    "reverse_count": {
        "cases": [[1, 74.0], [2, 148.0]],
    },
    "chain": {
        "cases": [[1, 74.0], [2, 148.0]],
        "n_atoms": 20,
        "n_inputs": 20,
        "n_eval": 12,
        "n_mc": 10_000,
        "sigmas": 3.0,
    },
    "gridops": {
        "box_1d": 8.0,
        "spacing_1d": 0.015625,
        "box_2d": 8.0,
        "spacing_2d": 0.0625,
        "algebra_tol": 1e-12,
        "semigroup_tol": 1e-12,
        "telescoping_tol": 1e-12,
        "per_octave": 3,
        "poisson_tail_factor": 20.0,
        "poisson_grid_coeff": 2.0,
        "poisson_tail_coeff": 2.0,
        "spherical_dirs": 64,
        "spherical_grid_coeff": 2.0,
        "spherical_r_per_octave": 6,
        "sigmas": 3.0,
    },
    "isotropic": {
        "n_samples": 200_000,
        "idempotence_tol": 0.05,
        "sigmas": 3.0,
        "ball_dims": [2, 3, 4, 5, 6, 7, 8, 9, 10],
        "shadow_dims": [2, 3, 4, 5, 6, 7, 8, 9],
        "shadow_rel_tol": 0.01,
        "L_upper": 1.0,
    },
    "trends": {
        "lp_dims": [2, 4, 8, 16],
        "lp_budget": 120,
        "lp_t_max": 2.0,
        "weak_dims": [1, 2, 3],
        "weak_budget": 120,
        "weak_t_max": 4.0,
        "conjectural_t": [2.0, 4.0, 8.0, 16.0, 32.0],
        "conjectural_n_xi": 40,
        "count_ratio_N": [5, 10, 20, 50, 100, 200],
    },
}


def _merge(base: dict, override: dict, path: str = "") -> dict:
    out = copy.deepcopy(base)
    for key, val in override.items():
        here = f"{path}.{key}" if path else key
        if key not in base:
            raise ValueError(f"unknown config key {here!r}")
        if isinstance(base[key], dict):
            if not isinstance(val, dict):
                raise ValueError(f"config key {here!r} must be a table")
            out[key] = _merge(base[key], val, here)
        else:
            out[key] = val
    return out


def load_config(path: str | None = None) -> dict:
    """Defaults, with the TOML file at ``path`` merged over them."""
    if path is None:
        return copy.deepcopy(DEFAULTS)
    with open(path, "rb") as fh:
        data = tomllib.load(fh)
    return _merge(DEFAULTS, data)
