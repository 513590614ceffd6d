import numpy as np
import pytest

from vnf_balancer.optim.exact import solve_exact
from vnf_balancer.optim.heuristic import solve_heuristic
from vnf_balancer.optim.model import Method, build_initial_placement_model, count_migrations
from vnf_balancer.optim.solution import SolveBudget, SolveStatus
from vnf_balancer.optim.verify import verify

from instances import tiny_instance, wider_instance

METHODS = [m.value for m in Method]


def test_without_moves_the_greedy_start_is_returned(sdn_instance):
    model = sdn_instance.model("mgr_rep")
    solution = solve_heuristic(model, budget=SolveBudget(max_iterations=0))
    assert solution.status == SolveStatus.FEASIBLE
    assert solution.stats.iterations == 0
    assert count_migrations(sdn_instance.initial, solution) == 0
    assert verify(model, solution.values).ok


def test_search_never_worsens_the_greedy_start(sdn_instance):
    model = sdn_instance.model("mgr", alpha=0.2)
    greedy = solve_heuristic(model, budget=SolveBudget(max_iterations=0))
    searched = solve_heuristic(model, rng_seed=3, budget=SolveBudget(max_iterations=2000), restarts=2)
    assert searched.objective_value <= greedy.objective_value + 1e-12


def test_same_seed_same_result(sdn_instance):
    model = sdn_instance.model("mgr_rep", alpha=0.4)
    first = solve_heuristic(model, rng_seed=11, annealing=True)
    second = solve_heuristic(model, rng_seed=11, annealing=True)
    assert first.objective_value == second.objective_value
    assert np.array_equal(first.values, second.values)


def test_initial_placement_model(sdn_instance):
    model = build_initial_placement_model(
        sdn_instance.topology, sdn_instance.workload, sdn_instance.catalog, "sdn",
    )
    heuristic = solve_heuristic(model)
    exact = solve_exact(model)
    assert verify(model, heuristic.values).ok
    assert heuristic.objective_value >= exact.objective_value - 1e-9


def _heuristic_and_exact(seed, routing, method, make=tiny_instance):
    model = make(seed, routing).model(method, alpha=0.5)
    exact = solve_exact(model)
    heuristic = solve_heuristic(model, rng_seed=seed, budget=SolveBudget(max_iterations=2000), restarts=3)
    return model, exact, heuristic


@pytest.mark.parametrize("routing", ["sdn", "ecmp"])
def test_close_to_the_exact_optimum(routing):
    close, total = 0, 0
    for seed in range(5):
        for method in METHODS:
            model, exact, heuristic = _heuristic_and_exact(seed, routing, method)
            if exact.values is None:
                continue
            assert heuristic.status == SolveStatus.FEASIBLE
            assert heuristic.objective_value >= exact.objective_value - 1e-9
            total += 1
            if heuristic.objective_value <= 1.10 * exact.objective_value + 1e-6:
                close += 1
    assert total > 0
    assert close >= 0.9 * total


@pytest.mark.slow
@pytest.mark.parametrize("routing", ["sdn", "ecmp"])
@pytest.mark.parametrize("seed", range(5, 105))
@pytest.mark.parametrize("make", [tiny_instance, wider_instance], ids=["tiny", "wider"])
def test_every_answer_verifies(seed, routing, make):
    for method in METHODS:
        model, exact, heuristic = _heuristic_and_exact(seed, routing, method, make)
        if heuristic.values is None:
            continue
        assert verify(model, heuristic.values, claimed_objective=heuristic.objective_value).ok
        assert exact.values is not None
        assert heuristic.objective_value >= exact.objective_value - 1e-9
