import numpy as np
import pytest

from forge.experiments import (
    TransferReport,
    TransferRow,
    compare_methods,
    fd_hessian,
    run_hessian_analysis,
    run_smooth_vs_irregular,
    run_transferability,
    smoothness,
    sta_signature,
)
from forge.graph import generate_regular_graph
from forge.optimize.gradient import Problem, energy
from forge.optimize.methods import OptimizerOptions, run_method
from forge.quantum import AngleSchedule
from forge.schedules import linear_dqa_angles
from forge.spectral import PopulationTrace

FAST = OptimizerOptions(gtol=1e-7, ftol=1e-12, max_iter=300)


@pytest.fixture(scope="module")
def inst():
    return generate_regular_graph(6, 3, 17, label="a")


@pytest.fixture(scope="module")
def targets():
    return [generate_regular_graph(6, 3, s, label=f"t{s}") for s in (2, 3, 4)]


def test_compare_methods_rows_and_ladders(inst):
    cmp = compare_methods(inst, [2, 4], ["lin", "fcrab", "loginterp", "interp"], seed=1, n_r=2, nc_step=2, opts=FAST)
    rows = cmp.rows()
    assert len(rows) == 8
    for label, method, p, eps, infid, n_eval in rows:
        assert label == "a" and 0 <= eps <= 1 and 0 <= infid <= 1 and n_eval >= 1
        res = cmp.results[(method, p)]
        assert energy(Problem(inst), res.final_angles) == pytest.approx(res.energy, abs=1e-10)
    assert -1.0 <= cmp.rank_agreement() <= 1.0


def test_transfer_to_self_has_zero_excess(inst):
    prob = Problem(inst)
    src = run_method(prob, "fcrab", 4, seed=3, n_r=2, opts=FAST)[4]
    rep = run_transferability(src, [inst], native_results={"a": src}, source_label="a", opts=FAST)
    row = rep.rows[0]
    assert row.eps_trans == pytest.approx(row.eps_native, abs=1e-12)
    assert row.eps_lo <= row.eps_trans
    assert rep.delta_trans == pytest.approx(0.0, abs=1e-12)


def test_local_optimisation_never_hurts(inst, targets):
    src = run_method(Problem(inst), "lin", 4, seed=0, opts=FAST)[4]
    rep = run_transferability(src, targets, seed=5, source_label="a", opts=FAST)
    assert len(rep.rows) == 3
    assert all(r.eps_lo <= r.eps_trans for r in rep.rows)
    assert rep.delta_lo <= rep.delta_trans


def test_transfer_aggregates_are_row_means_with_unbiased_sem():
    rows = [TransferRow("x", 0.1, 0.3, 0.2), TransferRow("y", 0.2, 0.3, 0.25), TransferRow("z", 0.0, 0.4, 0.1)]
    rep = TransferReport("s", "lin", 4, rows)
    d = np.array([0.2, 0.1, 0.4])
    assert rep.delta_trans == pytest.approx(np.mean(d))
    assert rep.sem_trans == pytest.approx(np.std(d, ddof=1) / np.sqrt(3))
    assert rep.to_dict()["delta_lo"] == pytest.approx(np.mean([0.1, 0.05, 0.1]))


def test_hessian_matches_second_differences_of_the_energy(inst, rng):
    prob = Problem(inst)
    theta = AngleSchedule(rng.uniform(0.1, 0.8, 4), rng.uniform(0.1, 0.8, 4))
    hess = fd_hessian(prob, theta)
    assert np.max(np.abs(hess - hess.T)) <= 10 * 1e-4
    x0 = theta.as_vector()
    for _ in range(3):
        u = rng.normal(size=x0.size)
        u /= np.linalg.norm(u)
        h = 1e-3
        e = [energy(prob, AngleSchedule.from_vector(x0 + k * h * u)) for k in (-1, 0, 1)]
        second = (e[0] - 2 * e[1] + e[2]) / h ** 2
        assert u @ hess @ u == pytest.approx(second, rel=1e-4)


def test_landscape_report_shapes(inst):
    prob = Problem(inst)
    a = run_method(prob, "lin", 3, opts=FAST)[3]
    b = run_method(prob, "fcrab", 3, seed=2, n_r=2, opts=FAST)[3]
    rep = run_hessian_analysis(inst, [a, b], n_scan=5, n_path=7, problem=prob)
    assert len(rep.hessians) == 2 and len(rep.paths) == 1
    h = rep.hessians[0]
    assert h.lambda_min <= h.lambda_max and h.eps_mu.size == 5
    path = rep.paths[0]
    assert path.eps[0] == a.residual and path.eps[-1] == b.residual
    assert path.barrier_ratio >= 1.0
    with pytest.raises(ValueError):
        run_hessian_analysis(inst, [a])


def test_smoothness_examples():
    assert smoothness(linear_dqa_angles(5, 1.0))["total"] == pytest.approx(2 * 4 * 0.2 ** 2)
    flat = AngleSchedule(np.full(4, 0.3), np.full(4, 0.6))
    assert smoothness(flat) == {"x": 0.0, "z": 0.0, "total": 0.0}


def test_sta_signature_counts_inversions():
    pops = np.array([[0.9, 0.1], [0.4, 0.6], [0.3, 0.7], [0.8, 0.2]])
    tr = PopulationTrace(np.arange(4), pops, np.zeros(4), np.array([1.0, 0.5, 2.0]), 2.0)
    sig = sta_signature(tr)
    assert sig["inversions"] == 2 and sig["p1_exceeds_before_gap"]
    assert sig["p0_final"] == 0.8 and sig["min_gap_layer"] == 2.0


def test_smooth_vs_irregular_report(inst):
    rep = run_smooth_vs_irregular(inst, p=4, seed=1, n_r=1, nc_step=2, dt_c=0.1, k_levels=2, stride=5, opts=FAST)
    d = rep.to_dict()
    assert d["p"] == 4 and set(d["digital"]) == {"smooth", "irregular"}
    assert rep.irregular.final_coeffs.nc == 4 and rep.smooth.final_coeffs.nc == 2
    assert rep.digital_ratio > 0 and rep.continuum_ratio > 0
    assert set(rep.continuum_traces) == {"smooth", "irregular"}
