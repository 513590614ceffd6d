import numpy as np
import pytest

from vnf_balancer.network.paths import build_sdn_catalogs
from vnf_balancer.optim import exact
from vnf_balancer.optim.exact import _unfixed_branch_variable, root_certificate, solve_exact
from vnf_balancer.optim.heuristic import solve_heuristic
from vnf_balancer.optim.model import Method, build_initial_placement_model, count_migrations, cost_terms
from vnf_balancer.optim.solution import SolveBudget, SolveStatus
from vnf_balancer.optim.verify import verify
from vnf_balancer.workload.chains import Workload

from instances import make_chain, tiny_instance, wider_instance
from oracle import MAX_BINARIES, brute_force_optimum

METHODS = [m.value for m in Method]


def _check_against_oracle(instance, method, alpha):
    model = instance.model(method, alpha=alpha)
    expected = brute_force_optimum(model)
    solution = solve_exact(model)
    if expected is None:
        assert solution.status == SolveStatus.INFEASIBLE
        return
    assert solution.status == SolveStatus.OPTIMAL
    assert solution.objective_value == pytest.approx(expected, abs=1e-7)
    assert verify(model, solution.values, claimed_objective=solution.objective_value).ok


@pytest.mark.parametrize("routing", ["sdn", "ecmp"])
@pytest.mark.parametrize("seed", range(4))
@pytest.mark.parametrize("method", METHODS)
def test_matches_brute_force(seed, routing, method):
    _check_against_oracle(tiny_instance(seed, routing), method, alpha=0.5)


@pytest.mark.slow
@pytest.mark.parametrize("routing", ["sdn", "ecmp"])
@pytest.mark.parametrize("seed", range(4, 24))
def test_matches_brute_force_many_seeds(seed, routing):
    instance = tiny_instance(seed, routing)
    for method in METHODS:
        for alpha in (0.1, 0.9):
            _check_against_oracle(instance, method, alpha)


@pytest.mark.parametrize("routing", ["sdn", "ecmp"])
def test_wider_shapes_fit_the_oracle(routing):
    instance = wider_instance(0, routing)
    assert int(instance.model("mgr_rep").binary_mask.sum()) <= MAX_BINARIES
    if routing == "sdn":
        assert any(len(p.service_nodes) == 3 for p in instance.catalog.paths("sfc0"))
    else:
        assert len(instance.workload.chains) == 2
        assert len(instance.workload.chains[0].demands) == 2
        assert all(len(instance.catalog.subsets(c.id)) == 2 for c in instance.workload.chains)


@pytest.mark.parametrize("routing", ["sdn", "ecmp"])
@pytest.mark.parametrize("seed", range(3))
@pytest.mark.parametrize("method", METHODS)
def test_wider_shapes_match_brute_force(seed, routing, method):
    _check_against_oracle(wider_instance(seed, routing), method, alpha=0.5)


@pytest.mark.slow
@pytest.mark.parametrize("routing", ["sdn", "ecmp"])
@pytest.mark.parametrize("seed", range(3, 13))
def test_wider_shapes_match_brute_force_many_seeds(seed, routing):
    instance = wider_instance(seed, routing)
    for method in METHODS:
        for alpha in (0.1, 0.9):
            _check_against_oracle(instance, method, alpha)


def test_contradictory_capacity_is_infeasible(two_leaves):
    chain = make_chain("sfc0", "leaf_0", "leaf_1", [2.0], [900.0])
    workload = Workload(chains=(chain,))
    model = build_initial_placement_model(two_leaves, workload, build_sdn_catalogs(two_leaves, workload))
    solution = solve_exact(model)
    assert solution.status == SolveStatus.INFEASIBLE
    assert solution.values is None
    assert solution.certificate


def test_root_certificate_is_empty_for_feasible_models(sdn_instance):
    assert root_certificate(sdn_instance.model("mgr_rep")) is None


def test_pure_migration_weight_keeps_the_initial_placement(sdn_instance):
    solution = solve_exact(sdn_instance.model("mgr", alpha=1.0, beta=0.0))
    assert solution.status == SolveStatus.OPTIMAL
    assert solution.objective_value == pytest.approx(0.0, abs=1e-9)
    assert count_migrations(sdn_instance.initial, solution) == 0


@pytest.mark.parametrize("method", ["mgr", "mgr_rep"])
def test_migration_cost_does_not_grow_with_alpha(sdn_instance, method):
    spent = []
    for alpha in (0.1, 0.5, 0.9):
        model = sdn_instance.model(method, alpha=alpha, beta=0.0)
        solution = solve_exact(model)
        spent.append(cost_terms(model, solution.values)["migration"] / alpha)
    assert spent[1] <= spent[0] + 1e-6
    assert spent[2] <= spent[1] + 1e-6


def test_warm_start_keeps_the_optimum(sdn_instance):
    model = sdn_instance.model("mgr_rep", alpha=0.3)
    cold = solve_exact(model)
    warm = solve_exact(model, warm_start=solve_heuristic(model, rng_seed=5))
    assert warm.objective_value == pytest.approx(cold.objective_value, abs=1e-9)


def test_node_budget_is_respected(sdn_instance):
    solution = solve_exact(sdn_instance.model("mgr_rep"), SolveBudget(max_nodes=1))
    assert solution.stats.nodes <= 1
    assert solution.status in (SolveStatus.BUDGET_EXHAUSTED, SolveStatus.OPTIMAL)


def test_unfixed_branch_variable():
    x = np.array([1.0, 0.0, 1.0 - 1e-8, 0.5])
    binaries = np.array([0, 1, 2])
    assert _unfixed_branch_variable(x, binaries, ()) == 2
    assert _unfixed_branch_variable(x, binaries, ((2, 1.0),)) == 0
    assert _unfixed_branch_variable(x, binaries, ((0, 1.0), (1, 0.0), (2, 1.0))) is None


def test_rejected_rounding_is_branched_on(sdn_instance, monkeypatch):
    model = sdn_instance.model("mgr_rep", alpha=0.5)
    expected = solve_exact(model).objective_value
    real = exact._integral_candidate
    calls = []

    def reject_first(model, x, binaries):
        calls.append(x)
        return None if len(calls) == 1 else real(model, x, binaries)

    monkeypatch.setattr(exact, "_integral_candidate", reject_first)
    solution = solve_exact(model)
    assert len(calls) > 1
    assert solution.status == SolveStatus.OPTIMAL
    assert solution.objective_value == pytest.approx(expected, abs=1e-9)
