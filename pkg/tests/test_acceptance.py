"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

The 20-seed bundles (clean and disturbed, several horizons) are built once
in module-scoped fixtures and shared across criteria; building them is the
bulk of the wall time (a few minutes).  Run with ``pytest -s`` to see the
per-criterion lines as they complete.
"""

import time
from dataclasses import dataclass, field

import numpy as np
import pytest

from olcontrol import (
    LtiSystem,
    QuadraticCost,
    adjoint_input_gradients,
    best_fixed_input,
    best_steady_state,
    certify_strong_stability,
    default_config,
    grid_oracle_fixed_input,
    nominal_cost,
    simulate,
    simulate_decomposed,
    steady_state_of_input,
)
from olcontrol.benchmarks import (
    _adjoint_states,
    _cost_grads,
    _cost_values,
    _dac_inputs,
    _disturbance_response,
)
from olcontrol.harness import (
    RunRecord,
    derive_run_params,
    generate_costs,
    generate_disturbances,
    make_rng,
    run_experiment,
    run_single,
    solve_run_benchmarks,
)
from olcontrol.system import BoxSet

SEEDS = 20
BASE_SEED = 1


def verdict(number: int, name: str, ok: bool, detail: str = "") -> None:
    print(f"[criterion {number:02d}] {'PASS' if ok else 'FAIL'} {name}" + (f" ({detail})" if detail else ""))
    assert ok, f"criterion {number} ({name}) failed: {detail}"


@dataclass
class Bundle:
    cfg: object
    records: list[RunRecord] = field(default_factory=list)
    build_seconds: float = 0.0  # runs + the benchmarks the criterion clocks


def _build_bundle(t: int, with_m: bool) -> Bundle:
    cfg = default_config(t=t, n_runs=SEEDS, seed=BASE_SEED, disturbances_on=True)
    bundle = Bundle(cfg=cfg)
    start = time.perf_counter()
    for k in range(SEEDS):
        rng = make_rng(cfg.seed + k)
        costs = generate_costs(cfg, rng)
        w_seq = generate_disturbances(cfg, rng)
        params = derive_run_params(cfg, costs)
        traces = {kind: run_single(cfg, kind, costs, w_seq, params) for kind in ("olc", "dac")}
        record = RunRecord(run_index=k, seed=cfg.seed + k, costs=costs, w_seq=w_seq,
                           params=params, traces=traces)
        solve_run_benchmarks(cfg, record, with_dac=with_m, with_steady=False)
        bundle.records.append(record)
    bundle.build_seconds = time.perf_counter() - start
    return bundle


@pytest.fixture(scope="module")
def clean_100():
    # criterion 1 clocks the runs plus the steady-state benchmark; the
    # fixed-input benchmark (criterion 3) is solved outside the clock
    cfg = default_config(t=100, n_runs=SEEDS, seed=BASE_SEED, disturbances_on=False)
    return _timed_clean_bundle(cfg)


@pytest.fixture(scope="module")
def clean_1000():
    cfg = default_config(t=1000, n_runs=SEEDS, seed=BASE_SEED, disturbances_on=False)
    return _timed_clean_bundle(cfg)


def _timed_clean_bundle(cfg) -> Bundle:
    bundle = Bundle(cfg=cfg)
    sys = cfg.system()
    start = time.perf_counter()
    for k in range(SEEDS):
        rng = make_rng(cfg.seed + k)
        costs = generate_costs(cfg, rng)
        w_seq = generate_disturbances(cfg, rng)
        params = derive_run_params(cfg, costs)
        traces = {"olc": run_single(cfg, "olc", costs, w_seq, params)}
        record = RunRecord(run_index=k, seed=cfg.seed + k, costs=costs, w_seq=w_seq,
                           params=params, traces=traces)
        record.bench_x = best_steady_state(costs, sys, cfg.u_box)
        bundle.records.append(record)
    bundle.build_seconds = time.perf_counter() - start
    return bundle


@pytest.fixture(scope="module")
def dist_100():
    return _build_bundle(100, with_m=False)


@pytest.fixture(scope="module")
def dist_250():
    return _build_bundle(250, with_m=True)


@pytest.fixture(scope="module")
def dist_1000():
    return _build_bundle(1000, with_m=True)


def _regret_x(record) -> float:
    return record.traces["olc"].total_cost - record.bench_x.value


def _regret_u(record, kind="olc") -> float:
    return record.traces[kind].total_cost - record.bench_u.value


def _regret_limit(record, t: int, kappa_factor: float) -> float:
    p = record.params
    kappa, gamma = p.cert.kappa, p.cert.gamma
    return (2.0 * p.smooth.l * p.smooth.d**2 / gamma) * (
        np.sqrt(t * (1.0 + 4.0 * kappa**2)) + kappa_factor * kappa
    )


def test_criterion_01_disturbance_free_regret_bound(clean_100, clean_1000):
    worst = -np.inf
    for bundle, t in ((clean_100, 100), (clean_1000, 1000)):
        for record in bundle.records:
            slack = _regret_limit(record, t, 1.0) - _regret_x(record)
            worst = max(worst, _regret_x(record) / _regret_limit(record, t, 1.0))
            assert slack >= 0.0, f"seed {record.seed} at T={t}: regret exceeds the bound by {-slack}"
    elapsed = clean_100.build_seconds + clean_1000.build_seconds
    ok = elapsed < 30.0
    verdict(1, "disturbance-free regret bound", ok and worst <= 1.0,
            f"max regret/bound {worst:.4f}, runtime {elapsed:.1f}s < 30s")


def test_criterion_02_disturbed_regret_bound(dist_100, dist_1000):
    worst = -np.inf
    for bundle, t in ((dist_100, 100), (dist_1000, 1000)):
        for record in bundle.records:
            ratio = _regret_u(record) / _regret_limit(record, t, 2.0)
            worst = max(worst, ratio)
    verdict(2, "disturbed regret bound", worst <= 1.0, f"max regret/bound {worst:.4f}")


def test_criterion_03_regret_gap(clean_100, clean_1000):
    # |R_u - R_x| <= 2 kappa L D^2 / gamma; the spec's two zero lower
    # bounds negate each other and are dropped (see decisions ledger)
    worst = -np.inf
    for bundle in (clean_100, clean_1000):
        for record in bundle.records:
            if record.bench_u is None:
                record.bench_u = best_fixed_input(
                    bundle.cfg.system(), bundle.cfg.x1, record.w_seq, record.costs, bundle.cfg.u_box
                )
            p = record.params
            limit = 2.0 * p.cert.kappa * p.smooth.l * p.smooth.d**2 / p.cert.gamma
            gap = abs(_regret_u(record) - _regret_x(record))
            worst = max(worst, gap / limit)
    verdict(3, "regret gap within the tracking constant", worst <= 1.0, f"max |gap|/limit {worst:.2e}")


def test_criterion_04_target_path_increments(clean_100, clean_1000, dist_100, dist_250, dist_1000):
    worst = -np.inf
    for bundle in (clean_100, clean_1000, dist_100, dist_250, dist_1000):
        for record in bundle.records:
            trace = record.traces["olc"]
            z = trace.targets
            ld = record.params.smooth.l * record.params.smooth.d
            for tau in range(1, 21):
                if tau >= z.shape[0]:
                    break
                moves = np.linalg.norm(z[tau:] - z[:-tau], axis=1)
                limit = trace.eta * tau * ld + 1e-9
                worst = max(worst, float(np.max(moves) - limit))
                assert np.max(moves) <= limit
    verdict(4, "target-state increments bounded by eta*tau*L*D", worst <= 0.0,
            f"max excess {worst:.2e}")


def test_criterion_05_sublinear_fixed_input_regret(dist_250, dist_1000):
    mean_250 = np.mean([_regret_u(r) / 250.0 for r in dist_250.records])
    mean_1000 = np.mean([_regret_u(r) / 1000.0 for r in dist_1000.records])
    verdict(5, "per-step regret shrinks with the horizon", mean_1000 < mean_250,
            f"R_u/T: {mean_1000:.3f} at T=1000 vs {mean_250:.3f} at T=250")


def test_criterion_06_fixed_input_benchmark_wins(dist_1000):
    wins = sum(r.bench_u.value <= r.bench_m.value for r in dist_1000.records)
    verdict(6, "best fixed input beats best disturbance-action policy", wins >= 0.8 * SEEDS,
            f"{wins}/{SEEDS} seeds")


def test_criterion_07_olc_beats_dac_against_fixed_input(dist_1000):
    wins = sum(_regret_u(r, "olc") < _regret_u(r, "dac") for r in dist_1000.records)
    verdict(7, "target-state controller beats the baseline on fixed-input regret",
            wins >= 0.9 * SEEDS, f"{wins}/{SEEDS} seeds")


def test_criterion_08_dac_benchmark_trends(dist_250, dist_1000):
    dac_250 = np.mean([(r.traces["dac"].total_cost - r.bench_m.value) / 250.0 for r in dist_250.records])
    dac_1000 = np.mean([(r.traces["dac"].total_cost - r.bench_m.value) / 1000.0 for r in dist_1000.records])
    sublinear = dac_1000 < dac_250
    negative = sum(r.traces["olc"].total_cost < r.bench_m.value for r in dist_1000.records)
    verdict(8, "baseline sublinear vs its own benchmark; controller beats that benchmark",
            sublinear and negative > SEEDS / 2,
            f"dac regret/T {dac_1000:.3f} < {dac_250:.3f}; olc below bench_m in {negative}/{SEEDS}")


def _central_diff(fn, point: np.ndarray) -> np.ndarray:
    # quadratic objectives have no truncation error, so a generous step
    # keeps the roundoff noise far below the 1e-6 comparison level
    h = 1e-4 * (1.0 + float(np.linalg.norm(point)))
    flat = point.ravel()
    out = np.empty_like(flat)
    for i in range(flat.size):
        bump = np.zeros_like(flat)
        bump[i] = h
        out[i] = (fn((flat + bump).reshape(point.shape)) - fn((flat - bump).reshape(point.shape))) / (2 * h)
    return out.reshape(point.shape)


def _rel_vec_err(analytic: np.ndarray, numeric: np.ndarray) -> float:
    return float(np.linalg.norm((analytic - numeric).ravel()) / max(np.linalg.norm(numeric.ravel()), 1e-9))


def test_criterion_09_gradient_oracles():
    rng = np.random.default_rng(99)
    start = time.perf_counter()
    worst = 0.0
    h_mem = 2
    for instance in range(50):
        a = rng.standard_normal((3, 3))
        a *= 0.6 / np.max(np.abs(np.linalg.eigvals(a)))
        sys = LtiSystem(a, rng.standard_normal((3, 2)))
        horizon = 20
        costs = []
        for _ in range(horizon):
            s = rng.standard_normal((3, 3))
            costs.append(QuadraticCost(q=s.T @ s / 3 + 0.1 * np.eye(3), c=rng.uniform(0, 3, 3)))
        w_seq = rng.uniform(-0.3, 0.3, (horizon - 1, 3))
        x1 = rng.standard_normal(3)

        # fixed-input parametrization: summed adjoint gradient vs central differences
        u0 = rng.uniform(-1, 1, 2)

        def total_fixed(u):
            states = simulate(sys, x1, np.tile(u, (horizon - 1, 1)), w_seq)
            return float(np.sum(_cost_values(costs, states)))

        states = simulate(sys, x1, np.tile(u0, (horizon - 1, 1)), w_seq)
        lam = _adjoint_states(sys, _cost_grads(costs, states))
        grad_fixed = lam[1:].sum(axis=0) @ sys.b
        worst = max(worst, _rel_vec_err(grad_fixed, _central_diff(total_fixed, u0)))

        # disturbance-action parametrization
        blocks = rng.standard_normal((h_mem, 2, 3)) * 0.3
        xd = _disturbance_response(sys, w_seq)

        def total_dac(bl):
            nominal = simulate(sys, x1, _dac_inputs(bl, w_seq))
            return float(np.sum(_cost_values(costs, nominal + xd)))

        nominal = simulate(sys, x1, _dac_inputs(blocks, w_seq))
        lam = _adjoint_states(sys, _cost_grads(costs, nominal + xd))
        q = lam[1:] @ sys.b
        grad_blocks = np.zeros_like(blocks)
        for j in range(1, h_mem + 1):
            grad_blocks[j - 1] = q[j:].T @ w_seq[: horizon - 1 - j]
        worst = max(worst, _rel_vec_err(grad_blocks, _central_diff(total_dac, blocks)))

        # cost gradients
        x = rng.standard_normal(3)
        cost = costs[instance % horizon]
        worst = max(worst, _rel_vec_err(cost.grad(x), _central_diff(cost.value, x)))

        # per-slot adjoint gradients on a few instances
        if instance < 5:
            u_seq = rng.uniform(-1, 1, (horizon - 1, 2))
            grads = adjoint_input_gradients(sys, x1, u_seq, w_seq, costs)

            def total_seq(useq):
                states = simulate(sys, x1, useq, w_seq)
                return float(np.sum(_cost_values(costs, states)))

            worst = max(worst, _rel_vec_err(grads, _central_diff(total_seq, u_seq)))

    elapsed = time.perf_counter() - start
    verdict(9, "gradient oracles match finite differences", worst <= 1e-6 and elapsed < 5.0,
            f"max rel err {worst:.2e}, runtime {elapsed:.2f}s < 5s")


def test_criterion_10_solver_matches_grid_oracle():
    rng = np.random.default_rng(1234)
    worst = 0.0
    for _ in range(10):
        a = rng.standard_normal((3, 3))
        a *= rng.uniform(0.3, 0.7) / np.max(np.abs(np.linalg.eigvals(a)))
        sys = LtiSystem(a, rng.standard_normal((3, 2)))
        horizon = 50
        costs = []
        for _ in range(horizon):
            s = rng.standard_normal((3, 3))
            costs.append(QuadraticCost(q=s.T @ s / 3 + 0.1 * np.eye(3), c=rng.uniform(-1, 1, 3)))
        w_seq = rng.uniform(-0.1, 0.1, (horizon - 1, 3))
        box = BoxSet.symmetric(0.5, 2)
        solved = best_fixed_input(sys, np.zeros(3), w_seq, costs, box)
        grid = grid_oracle_fixed_input(sys, np.zeros(3), w_seq, costs, box, resolution=400)
        worst = max(worst, abs(solved.value - grid.value))
    verdict(10, "fixed-input solver matches the grid oracle", worst <= 1e-3,
            f"max |value gap| {worst:.2e}")


def test_criterion_11_superposition_and_cost_equivalence(dist_1000):
    worst_super = 0.0
    worst_cost = 0.0
    worst_bench = 0.0
    for record in dist_1000.records:
        cfg = dist_1000.cfg
        sys = cfg.system()
        for trace in record.traces.values():
            nominal, dist, full = simulate_decomposed(sys, cfg.x1, trace.inputs, record.w_seq)
            scale = np.maximum(np.abs(trace.states), 1.0)
            worst_super = max(worst_super, float(np.max(np.abs(full - trace.states) / scale)))
            for t in range(0, cfg.t, 97):
                f_val = record.costs[t].value(trace.states[t])
                g_val = nominal_cost(record.costs[t], dist[t]).value(nominal[t])
                worst_cost = max(worst_cost, abs(g_val - f_val) / max(abs(f_val), 1.0))
        for bench in (record.bench_u, record.bench_m):
            worst_bench = max(worst_bench, abs(bench.value - bench.value_nominal) / max(abs(bench.value), 1.0))
    ok = worst_super <= 1e-9 and worst_cost <= 1e-9 and worst_bench <= 1e-9
    verdict(11, "superposition and nominal-cost equivalence",
            ok, f"superposition {worst_super:.1e}, costs {worst_cost:.1e}, benchmarks {worst_bench:.1e}")


def test_criterion_12_geometric_tracking():
    rng = np.random.default_rng(777)
    cfg = default_config()
    sys = cfg.system()
    cert = certify_strong_stability(sys.a)
    horizon = 25
    ok = True
    for _ in range(SEEDS):
        u = rng.uniform(cfg.u_box.lower, cfg.u_box.upper)
        z = steady_state_of_input(sys, u)
        x1 = rng.standard_normal(3) * 2
        states = simulate(sys, x1, np.tile(u, (horizon - 1, 1)))
        e0 = np.linalg.norm(x1 - z)
        for t in range(horizon):
            bound = cert.kappa * (1.0 - cert.gamma) ** t * e0
            if np.linalg.norm(states[t] - z) > bound:
                ok = False
    verdict(12, "geometric tracking of constant-input steady states", ok)


def test_criterion_13_deterministic_csv_output(tmp_path):
    cfg = default_config(t=12, n_runs=2, seed=3)
    run_experiment(cfg, output_dir=tmp_path / "a")
    run_experiment(cfg, output_dir=tmp_path / "b")
    identical = True
    for name in ("run_0.csv", "run_1.csv", "summary.csv", "benchmarks.csv"):
        if (tmp_path / "a" / name).read_bytes() != (tmp_path / "b" / name).read_bytes():
            identical = False
    verdict(13, "byte-identical output for identical config and seed", identical)
