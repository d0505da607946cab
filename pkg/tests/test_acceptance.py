"""End-to-end gate: every criterion of the check suite, at full size.

Run with ``pytest tests/test_acceptance.py -s`` to see the per-criterion
PASS/FAIL lines as they complete.  The same checks back the ``hlmax suite``
command; here each one must pass for the build to be considered good.
"""

import pytest

from hlmax import suite
from hlmax.config import load_config


@pytest.fixture(scope="module")
def cfg():
    return load_config(None)


def _run(fn, cfg, budget=None):
    res = fn(cfg)
    print()
    print(res.line())
    assert res.error is None, res.detail
    assert res.passed, res.detail
    if budget is not None:
        assert res.wall_time < budget, \
            f"{res.name} took {res.wall_time:.1f}s (budget {budget:.0f}s)"
    return res


def test_criterion_01_cube_multiplier_oracle(cfg):
    _run(suite.criterion_01, cfg, budget=120.0)


def test_criterion_02_multiplier_bounds(cfg):
    _run(suite.criterion_02, cfg, budget=600.0)


def test_criterion_03_section_profiles(cfg):
    _run(suite.criterion_03, cfg)


def test_criterion_04_dyadic_symbol_sum(cfg):
    _run(suite.criterion_04, cfg)


def test_criterion_05_oscillation_inequality(cfg):
    _run(suite.criterion_05, cfg, budget=60.0)


def test_criterion_06_exact_counting(cfg):
    _run(suite.criterion_06, cfg)


def test_criterion_07_halfspace_tails(cfg):
    _run(suite.criterion_07, cfg)


def test_criterion_08_reverse_count_constants(cfg):
    _run(suite.criterion_08, cfg)


def test_criterion_09_comparison_chain(cfg):
    _run(suite.criterion_09, cfg)


def test_criterion_10_operator_algebra(cfg):
    _run(suite.criterion_10, cfg)


def test_criterion_11_isotropic_suite(cfg):
    _run(suite.criterion_11, cfg)


def test_criterion_12_trend_series(cfg):
    res = _run(suite.criterion_12, cfg)
    assert not res.gating  # informational: trends never gate the build
