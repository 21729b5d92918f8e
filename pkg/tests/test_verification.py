import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from transport_inverse.verification import (
    ManufacturedCase,
    exact_row,
    manufactured_intensity,
    manufactured_source,
    relative_l2_error,
    run_manufactured,
    write_table1,
)


def d_fd(f, z, h=1e-3):
    """Fourth-order central difference."""
    return (-f(z + 2 * h) + 8 * f(z + h) - 8 * f(z - h) + f(z - 2 * h)) / (12 * h)


def transport_residual(t, x, mu, kappa, sigma_t, c=1.0):
    """LHS - RHS of the transport equation for the manufactured pair, derivatives by FD."""
    I = lambda tt, xx: manufactured_intensity(tt, xx, mu, sigma_t)  # noqa: E731
    dI_dt = d_fd(lambda tt: I(tt, x), t)
    dI_dx = d_fd(lambda xx: I(t, xx), x)
    sigma_s = sigma_t - kappa
    psi = I(t, x)  # isotropic, so the angular average equals the intensity
    return (dI_dt / c + mu * dI_dx + sigma_t * I(t, x)
            - sigma_s * psi - manufactured_source(t, x, mu, kappa, sigma_t))


def test_manufactured_intensity_values():
    assert manufactured_intensity(1.0, 1.0, 0.3, 1.0) == 1.0
    assert manufactured_intensity(1.0, 0.0, -0.7, 1.0) == pytest.approx(0.36787944117144233, abs=1e-16)
    assert manufactured_intensity(0.0, 0.0, 0.5, 1.0) == 1.0


def test_manufactured_source_values():
    assert manufactured_source(0.4, 0.4, -0.3, 0.7, 1.0) == pytest.approx(0.7)
    assert manufactured_source(0.2, 0.9, 1.0, 0.3, 1.0) == pytest.approx(0.3 * math.exp(-0.49))


def test_residual_vanishes_at_random_points():
    rng = np.random.default_rng(2024)
    worst = 0.0
    for _ in range(100):
        t, x = rng.uniform(0, 1, size=2)
        mu = rng.uniform(-1, 1)
        kappa = rng.uniform(0, 1)
        worst = max(worst, abs(transport_residual(t, x, mu, kappa, 1.0)))
    assert worst < 1e-10


def test_residual_detects_wrong_speed():
    # The identity only balances for c = 1.
    assert abs(transport_residual(0.3, 0.8, 0.2, 0.5, 1.0, c=2.0)) > 1e-3


def test_relative_error_examples():
    exact = np.array([1.0, 2.0, 3.0])
    assert relative_l2_error(exact, exact) == 0.0
    assert relative_l2_error(1.01 * exact, exact) == pytest.approx(0.01, rel=1e-12)
    with pytest.raises(ValueError):
        relative_l2_error(exact, np.zeros(3))
    with pytest.raises(ValueError):
        relative_l2_error(exact, exact[:2])


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**31), st.floats(0.01, 100).flatmap(lambda v: st.sampled_from([v, -v])))
def test_relative_error_scale_invariant(seed, lam):
    rng = np.random.default_rng(seed)
    a, e = rng.normal(size=(2, 9))
    assert relative_l2_error(lam * a, lam * e) == pytest.approx(relative_l2_error(a, e), rel=1e-12)


def test_case_validation():
    assert ManufacturedCase(0.3).sigma_s == pytest.approx(0.7)
    with pytest.raises(ValueError):
        ManufacturedCase(1.5)


# Reference approximations at t_f = 1 (kappa -> psi(0), psi(0.5), psi(1), eps_rel).
TABLE1 = {
    0.9: (3.667e-1, 7.748e-1, 9.974e-1, 4.5e-3),
    0.5: (3.664e-1, 7.740e-1, 9.971e-1, 5.3e-3),
    0.1: (3.660e-1, 7.730e-1, 9.968e-1, 6.4e-3),
}


@pytest.mark.parametrize("kappa", sorted(TABLE1))
def test_table1_row(kappa):
    row, sol = run_manufactured(kappa)
    *psi_ref, _ = TABLE1[kappa]
    np.testing.assert_allclose(row.psi, psi_ref, rtol=0, atol=5e-3)
    assert row.eps_rel < 1e-2
    assert all(n >= 1 for n in sol.si_iterations)


def test_exact_row_matches_reference():
    np.testing.assert_allclose(exact_row(), (3.679e-1, 7.788e-1, 1.0), atol=5e-5)


def test_write_table1(tmp_path):
    row, _ = run_manufactured(0.5, n_x=20, n_q=8, h_t=0.05)
    write_table1([row], tmp_path / "t.csv")
    lines = (tmp_path / "t.csv").read_text().splitlines()
    assert lines[0] == "kappa,psi_0,psi_05,psi_1,eps_rel"
    assert lines[1].startswith("0.5,")
    assert lines[2].startswith("exact,") and lines[2].endswith(",")
