"""End-to-end acceptance gate.

Each test runs one numbered verification criterion at its pinned production
scale and records the standard one-line summary (also echoed into the pytest
terminal summary via conftest).  These are slow: the full file takes roughly
forty minutes on one core.  Scales, seeds, and tolerances live in
kaclandau.verification and are not repeated here.

Criterion 7 is expected to fail and is marked strict-xfail: from uniform-ball
initial data the fourth moment provably rises toward its Gaussian equilibrium
value (5/3) m2^2, which exceeds m4(0) = (3/7) r0^4, so a no-increase check on
the moment trajectory cannot hold for any correct simulator.  The companion
test right after it verifies the uniform-in-time support-radius bound
m_p <= (2 r0^2 p)^(p/2) on the same run, which is the content that is
actually attainable from this initial condition.
"""

import sys

import pytest

import conftest
from kaclandau.verification import maxwellian_uniform_bound_companion, run_criterion


def _announce(res):
    line = res.line()
    print(line)
    conftest.ACCEPTANCE_LINES.append(line)
    out = getattr(sys, "__stdout__", None)
    if out is not None and sys.stdout is not out:
        try:
            out.write(line + "\n")
            out.flush()
        except (OSError, ValueError):
            pass
    return line


def _check(number):
    res = run_criterion(number)
    line = _announce(res)
    assert res.passed, line


def test_criterion_01_momentum_energy_conservation():
    _check(1)


def test_criterion_02_energy_drift_order():
    _check(2)


def test_criterion_03_kernel_identities():
    _check(3)


def test_criterion_04_moment_ode_comparison_bound():
    _check(4)


def test_criterion_05_ladder_bounds():
    _check(5)


def test_criterion_06_maxwellian_m4_relaxation():
    _check(6)


@pytest.mark.xfail(
    strict=True,
    reason=(
        "from a uniform-ball start the fourth moment rises toward its "
        "Gaussian equilibrium (5/3) m2^2 > m4(0), so a no-increase check "
        "on the moment trajectory cannot pass; the companion test below "
        "verifies the attainable uniform support-radius bound instead"
    ),
)
def test_criterion_07_moment_no_increase():
    _check(7)


def test_criterion_07_companion_uniform_moment_bound():
    res = maxwellian_uniform_bound_companion()
    line = _announce(res)
    assert res.passed, line


def test_criterion_08_exponential_moment_boundedness():
    _check(8)


def test_criterion_09_moment_growth_exponent():
    _check(9)


def test_criterion_10_chaos_w2_decay_rate():
    _check(10)


def test_criterion_11_bbgky_residual_order():
    _check(11)


def test_criterion_12_perturbation_stability():
    _check(12)
