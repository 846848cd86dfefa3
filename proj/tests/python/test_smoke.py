"""Smoke tests for the python bindings."""

import math

import numpy as np
import pytest

import exitrate as xr


def test_version():
    assert xr.__version__


def test_closed_loop():
    sys = xr.MultiChannelSystem(np.zeros((2, 2)), [np.eye(2)])
    fb = xr.FeedbackTuple([np.diag([-1.0, -3.0])])
    M = xr.closed_loop(sys, fb)
    assert np.allclose(M, np.diag([-1.0, -3.0]))


def test_dimension_error_is_raised():
    sys = xr.MultiChannelSystem(np.zeros((2, 2)), [np.eye(2)])
    with pytest.raises(xr.ToolkitError):
        xr.closed_loop(sys, xr.FeedbackTuple([np.zeros((3, 3))]))


def test_principal_eigenvalue_analytic():
    D = xr.Domain.box(np.array([-1.0]), np.array([1.0]))
    diff = xr.DiffusionSpec(np.eye(1))
    pair = xr.principal_eigenvalue(np.zeros((1, 1)), diff, 2.0, D, [202])
    exact = math.pi**2 / 4
    assert abs(pair.lam - exact) / exact < 0.01
    assert pair.psi.min() > 0.0


def test_simulation_determinism():
    D = xr.Domain.box(np.array([-1.0]), np.array([1.0]))
    diff = xr.DiffusionSpec(np.eye(1))
    M = np.array([[-1.0]])
    s1 = xr.sample_exit_times(M, diff, 0.5, np.zeros(1), D, 1e-3, 20.0, 50, 7, 1)
    s2 = xr.sample_exit_times(M, diff, 0.5, np.zeros(1), D, 1e-3, 20.0, 50, 7, 2)
    assert s1.exit_times == s2.exit_times
    assert s1.censored_count == s2.censored_count


def test_action_zero_anchor():
    D = xr.Domain.ball(np.zeros(2), 1.0)
    diff = xr.DiffusionSpec(np.eye(2))
    rep = xr.minimize_action(np.zeros(2), 2.0, 32, -np.eye(2), diff, D)
    assert rep.value <= 1e-6


def test_pareto_front_and_scalarize():
    rates = [[1.0, 2.0], [2.0, 1.0], [2.0, 2.0]]
    front, dominated = xr.pareto_front(rates)
    assert front == [0, 1]
    assert dominated == [False, False, True]
    assert xr.scalarize(rates, [0.99, 0.01]) == 0


def test_exponent_extrapolation():
    pairs = [(eps, math.exp(-1.3 / eps)) for eps in (0.5, 0.25, 0.125)]
    fit = xr.extrapolate_rate_exponent(pairs)
    assert abs(fit.r - 1.3) < 1e-9


def test_policy_iteration_beats_uncontrolled():
    D = xr.Domain.box(np.array([-1.0]), np.array([1.0]))
    diff = xr.DiffusionSpec(np.eye(1))
    sys = xr.MultiChannelSystem(np.array([[0.5]]), [np.array([[1.0]])])
    fb = xr.FeedbackTuple([np.zeros((1, 1))])
    grid = xr.build_grid(D, [201])
    sol = xr.policy_iteration(sys, fb, 0, xr.ControlBox(np.array([-1.0]), np.array([1.0])),
                              diff, 0.5, grid)
    unc = xr.principal_eigenvalue(np.array([[0.5]]), diff, 0.5, D, [201])
    assert sol.lam <= unc.lam + 1e-8
    assert sol.trace == sorted(sol.trace, reverse=True)
