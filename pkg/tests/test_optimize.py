import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from forge.graph import GraphInstance, generate_regular_graph
from forge.optimize.bfgs import bfgs_minimize, wolfe_line_search
from forge.optimize.gradient import Problem, energy, energy_and_angle_gradient, energy_and_coeff_gradient
from forge.optimize.methods import (
    OptimizerOptions,
    interp_seed,
    loginterp_seed_end_zero,
    loginterp_seed_start_zero,
    run_ccrab_direct,
    run_crab_direct,
    run_fcrab_iterative,
    run_fourier_zhou,
    run_interp,
    run_linear,
    run_loginterp,
    run_method,
)
from forge.quantum import AngleSchedule, evolve_digitized, expectation_z
from forge.graph import problem_diagonal
from forge.schedules import Basis, CrabCoefficients, linear_dqa_angles, sample_noise
from oracles import central_difference, dense_hx, dense_hz, layer_unitary, random_instance, random_schedule, rel_error

EDGE = GraphInstance(2, ((0, 1, 1.0),), "edge")
FAST = OptimizerOptions(gtol=1e-7, ftol=1e-12, max_iter=300)


@pytest.fixture(scope="module")
def hard6():
    return Problem(generate_regular_graph(6, 3, 17))


# --- gradients ----------------------------------------------------------------


def test_zero_schedule_is_stationary():
    prob = Problem(generate_regular_graph(6, 3, 2))
    _, g = energy_and_angle_gradient(prob, AngleSchedule(np.zeros(5), np.zeros(5)))
    assert np.max(np.abs(g)) <= 1e-14


def test_random_p8_gradient_matches_central_differences(rng):
    prob = Problem(random_instance(rng, 6))
    sched = random_schedule(rng, 8)
    e, g = energy_and_angle_gradient(prob, sched)
    fd = central_difference(lambda v: energy(prob, AngleSchedule.from_vector(v)), sched.as_vector(), 1e-5)
    assert e == pytest.approx(energy(prob, sched), abs=1e-14)
    assert rel_error(g, fd) <= 1e-6


def test_single_edge_gradient_matches_dense_closed_form():
    hx, hz = dense_hx(2), dense_hz(EDGE)
    psi0 = np.full(4, 0.5, complex)

    def dense_energy(v):
        psi = layer_unitary(hx, hz, v[0], v[1]) @ psi0
        return float(np.real(psi.conj() @ hz @ psi))

    x = np.array([0.4, 0.3])
    e, g = energy_and_angle_gradient(Problem(EDGE), AngleSchedule.from_vector(x))
    assert e == pytest.approx(dense_energy(x), abs=1e-14)
    assert rel_error(g, central_difference(dense_energy, x, 1e-6)) <= 1e-7


@pytest.mark.parametrize("basis", list(Basis))
def test_coefficient_gradient_matches_central_differences(rng, basis):
    prob = Problem(random_instance(rng, 6))
    c = CrabCoefficients(0.8, rng.normal(scale=0.3, size=3), rng.normal(scale=0.3, size=3),
                         sample_noise(3, rng), basis, 10)
    _, g = energy_and_coeff_gradient(prob, c)
    fd = central_difference(lambda v: energy_and_coeff_gradient(prob, c.with_vector(v))[0], c.as_vector(), 1e-5)
    assert rel_error(g, fd) <= 1e-6


def test_coefficient_gradient_vanishes_at_zero_angles():
    prob = Problem(generate_regular_graph(6, 3, 3))
    c = CrabCoefficients(0.0, np.zeros(2), np.zeros(2), [0.1, 0.2], Basis.FOURIER_SINE, 6)
    _, g = energy_and_coeff_gradient(prob, c)
    assert np.max(np.abs(g)) <= 1e-14


@given(st.integers(0, 2**16), st.integers(1, 16))
def test_gradient_property_on_random_cases(seed, p):
    rng = np.random.default_rng(seed)
    prob = Problem(random_instance(rng, int(rng.choice([4, 6, 8]))))
    sched = random_schedule(rng, p)
    _, g = energy_and_angle_gradient(prob, sched)
    fd = central_difference(lambda v: energy(prob, AngleSchedule.from_vector(v)), sched.as_vector(), 1e-5)
    np.testing.assert_allclose(g, fd, rtol=1e-6, atol=1e-8)


# --- BFGS ----------------------------------------------------------------------


def test_bfgs_quadratic():
    res = bfgs_minimize(lambda x: (float(x @ x), 2 * x), np.array([3.0, -1.0, 2.0]))
    assert res.fun <= 1e-10 and np.linalg.norm(res.x) <= 1e-5 and res.converged


def test_bfgs_rosenbrock():
    def rosen(x):
        a, b = x
        f = (1 - a) ** 2 + 100 * (b - a * a) ** 2
        g = np.array([-2 * (1 - a) - 400 * a * (b - a * a), 200 * (b - a * a)])
        return f, g

    res = bfgs_minimize(rosen, np.array([-1.2, 1.0]))
    assert res.fun <= 1e-12
    np.testing.assert_allclose(res.x, [1.0, 1.0], atol=1e-6)
    energies = [e for _, e in res.trace]
    assert all(b <= a for a, b in zip(energies, energies[1:]))


def test_bfgs_at_optimum_uses_one_evaluation():
    res = bfgs_minimize(lambda x: (float(x @ x), 2 * x), np.zeros(3))
    assert res.n_evaluations == 1 and res.n_iter == 0
    np.testing.assert_array_equal(res.x, np.zeros(3))


def test_bfgs_degrades_instead_of_raising():
    calls = []

    def nasty(x):  # gradient points the wrong way: no descent direction exists along -g
        calls.append(1)
        return float(x[0]), np.array([-1.0])

    res = bfgs_minimize(nasty, np.array([0.0]), max_iter=5)
    assert res.degraded and not res.converged


def test_wolfe_search_satisfies_strong_wolfe():
    fg = lambda x: (float((x[0] - 3) ** 2), np.array([2 * (x[0] - 3)]))
    x = np.array([0.0])
    f0, g0 = fg(x)
    a, f, g = wolfe_line_search(fg, x, f0, g0, -g0)
    assert f <= f0 + 1e-4 * a * float(g0 @ -g0)
    assert abs(float(g @ -g0)) <= 0.9 * abs(float(g0 @ -g0))


# --- drivers -------------------------------------------------------------------


def _check_result(prob, res):
    psi = evolve_digitized(prob.instance, res.final_angles)
    assert res.energy == pytest.approx(expectation_z(psi, problem_diagonal(prob.instance)), abs=1e-10)
    assert prob.solution.e_min - 1e-12 <= res.energy <= prob.solution.e_max + 1e-12
    energies = [e for _, e in res.trace]
    assert all(b <= a + 1e-15 for a, b in zip(energies, energies[1:]))


def test_linear_search_improves_on_unit_time_step(hard6):
    res = run_linear(hard6, 8, opts=FAST)
    assert res.energy <= energy(hard6, linear_dqa_angles(8, 1.0)) + 1e-12
    assert res.final_coeffs.nc == 0
    _check_result(hard6, res)


def test_ccrab_without_modes_is_linear_dqa(hard6):
    res = run_ccrab_direct(hard6, 8, 0, n_r=3, seed=1, opts=FAST)
    np.testing.assert_allclose(res.final_angles.as_vector(), linear_dqa_angles(8, res.final_coeffs.c0).as_vector())
    assert len(res.seed_ledger) == 1


def test_ccrab_beats_its_linear_start(hard6):
    res = run_ccrab_direct(hard6, 8, 4, n_r=2, seed=3, opts=FAST)
    assert res.energy <= energy(hard6, linear_dqa_angles(8, 1.0))
    assert len(res.seed_ledger) == 2
    _check_result(hard6, res)


def test_fcrab_single_round_is_plain_best_of_crab(hard6):
    a = run_fcrab_iterative(hard6, 8, nc_max=2, n_r=3, seed=5, opts=FAST)
    b = run_crab_direct(hard6, 8, 2, n_r=3, seed=5, basis=Basis.FOURIER_SINE, opts=FAST)
    np.testing.assert_array_equal(a.final_angles.as_vector(), b.final_angles.as_vector())
    assert a.seed_ledger == b.seed_ledger


def test_fcrab_rounds_never_increase_energy(hard6):
    res = run_fcrab_iterative(hard6, 16, nc_max=8, nc_step=2, n_r=2, seed=9, opts=FAST)
    rounds = [r["energy"] for r in res.extra["rounds"]]
    assert [r["nc"] for r in res.extra["rounds"]] == [2, 4, 6, 8]
    assert all(b <= a + 1e-12 for a, b in zip(rounds, rounds[1:]))
    _check_result(hard6, res)


def test_interp_seed_examples():
    np.testing.assert_allclose(interp_seed(np.full(5, 0.7)), np.full(6, 0.7))
    np.testing.assert_allclose(interp_seed(np.array([1.0, 3.0])), [1.0, 2.0, 3.0])
    th = np.array([0.2, 0.9, 0.4, 1.3])
    seed = interp_seed(th)
    assert (seed[0], seed[-1]) == (th[0], th[-1])


def test_loginterp_seed_examples():
    a, b = 1.0, 3.0
    np.testing.assert_allclose(loginterp_seed_start_zero(np.array([a, b])), [a / 2, a, (a + b) / 2, b])
    np.testing.assert_allclose(loginterp_seed_end_zero(np.array([a, b])), [a, (a + b) / 2, b, b / 2])


@given(st.lists(st.floats(0, 5), min_size=2, max_size=12))
def test_loginterp_seed_preserves_monotonicity(values):
    up = np.sort(values)
    assert np.all(np.diff(loginterp_seed_start_zero(up)) >= 0)
    down = up[::-1]
    assert np.all(np.diff(loginterp_seed_end_zero(down)) <= 0)


def test_interp_and_loginterp_respect_warm_start_dominance(hard6):
    for res in list(run_interp(hard6, 5, opts=FAST).values()) + list(run_loginterp(hard6, 8, opts=FAST).values()):
        assert res.energy <= res.extra["seed_energy"] + 1e-12
        _check_result(hard6, res)
    with pytest.raises(ValueError):
        run_loginterp(hard6, 12)


def test_fourier_lineages_and_padding(hard6):
    res = run_fourier_zhou(hard6, 4, "a", opts=FAST)
    assert sorted(res) == [1, 2, 3, 4]
    for p, r in res.items():
        assert r.final_coeffs.nc == p
        assert "star" in r.extra and "best" in r.extra
    resb = run_fourier_zhou(hard6, 4, "b", r=3, seed=2, opts=FAST)
    assert resb[4].energy <= res[4].energy + 1e-9
    resc = run_fourier_zhou(hard6, 5, "c", nc_fixed=2, r=2, seed=2, opts=FAST)
    assert resc[5].final_coeffs.nc == 2
    with pytest.raises(ValueError):
        run_fourier_zhou(hard6, 3, "c")


def test_fourier_without_perturbation_repeats_the_best_lineage(hard6):
    res = run_fourier_zhou(hard6, 3, "b", r=3, alpha=0.0, seed=4, opts=FAST)
    # with alpha = 0 every kick is zero: all perturbed candidates equal the r = 0 start
    assert res[3].energy <= run_fourier_zhou(hard6, 3, "a", opts=FAST)[3].energy + 1e-9


def test_runs_are_deterministic_per_seed(hard6):
    a = run_method(hard6, "fcrab", 8, seed=11, n_r=2, opts=FAST)[8]
    b = run_method(hard6, "fcrab", 8, seed=11, n_r=2, opts=FAST)[8]
    assert a.to_dict() == b.to_dict()
    with pytest.raises(ValueError):
        run_method(hard6, "nope", 4)
