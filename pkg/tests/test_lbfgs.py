import numpy as np
import pytest
from scipy.optimize import rosen, rosen_der

from cs_variational.lbfgs import LineSearchError, minimize_lbfgs, strong_wolfe


def test_quadratic_is_solved_to_tolerance():
    rng = np.random.default_rng(0)
    Q = rng.standard_normal((20, 20))
    A = Q @ Q.T + np.eye(20)
    b = rng.standard_normal(20)
    res = minimize_lbfgs(lambda x: (0.5 * x @ A @ x - b @ x, A @ x - b), np.zeros(20), gtol=1e-10)
    assert res.converged
    np.testing.assert_allclose(res.x, np.linalg.solve(A, b), rtol=1e-8, atol=1e-10)


def test_rosenbrock():
    res = minimize_lbfgs(lambda x: (rosen(x), rosen_der(x)), np.full(6, -1.2), gtol=1e-10)
    assert res.converged
    np.testing.assert_allclose(res.x, np.ones(6), atol=1e-6)
    # each accepted step lowers f, up to the rounding allowance of the line search
    assert all(b <= a + 1e-14 * abs(a) for a, b in zip(res.f_trace, res.f_trace[1:]))
    assert len(res.f_trace) == res.n_iter + 1


def test_budget_is_respected():
    res = minimize_lbfgs(lambda x: (rosen(x), rosen_der(x)), np.full(4, -1.2), max_evals=15)
    assert not res.converged and res.n_eval <= 15 + 1
    res = minimize_lbfgs(lambda x: (rosen(x), rosen_der(x)), np.full(4, -1.2), max_iter=3)
    assert res.n_iter == 3


def test_ftol_stops_a_flat_descent():
    # f = 1/x on x > 0 decreases forever with vanishing gradient
    fun = lambda x: (float(1 / x[0] + 0 * x[0]), np.array([-1 / x[0] ** 2]))
    res = minimize_lbfgs(fun, np.array([1.0]), ftol=1e-6, gtol=0.0, max_evals=10_000)
    assert res.converged and "ftol" in res.message


def test_infinite_start_is_rejected():
    with pytest.raises(FloatingPointError):
        minimize_lbfgs(lambda x: (np.inf, x), np.zeros(2))


def test_line_search_satisfies_strong_wolfe():
    f = lambda x: (x - 3.0) ** 4 + x
    df = lambda x: 4 * (x - 3.0) ** 3 + 1
    phi = lambda t: (f(t), df(t), None)
    t, ft, _, _ = strong_wolfe(phi, f(0.0), df(0.0), 1.0, c1=1e-4, c2=0.9)
    assert ft <= f(0.0) + 1e-4 * t * df(0.0)
    assert abs(df(t)) <= 0.9 * abs(df(0.0))
    with pytest.raises(LineSearchError):
        strong_wolfe(phi, 0.0, 1.0, 1.0)


def test_line_search_accepts_steps_lost_in_rounding():
    # around the minimum of a quadratic at f ~ 1e3 the change in f over the step
    # is below one ulp, so only the slope conditions can decide
    f0 = 1e3
    phi = lambda t: (f0 + 1e-20 * (t - 1.0) ** 2 - 1e-20, 2e-20 * (t - 1.0), None)
    t, ft, _, _ = strong_wolfe(phi, f0, -2e-20, 1.0)
    assert t == 1.0 and ft == f0


def test_line_search_backs_off_from_non_finite_values():
    phi = lambda t: (np.inf, np.nan, None) if t > 0.5 else ((t - 0.3) ** 2, 2 * (t - 0.3), None)
    t, ft, _, _ = strong_wolfe(phi, 0.09, -0.6, 1.0)
    assert 0 < t <= 0.5 and ft < 0.09
