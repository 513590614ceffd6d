import pytest
import yaml

from vnf_balancer.exceptions import ReportError
from vnf_balancer.network.paths import build_sdn_catalogs
from vnf_balancer.optim.exact import solve_exact
from vnf_balancer.optim.model import build_initial_placement_model, var_key
from vnf_balancer.reporting.metrics import (
    COMPARISON_FILE,
    LINK_CDF_FILE,
    SERVER_CDF_FILE,
    SUMMARY_FILE,
    UTILIZATION_TOLERANCE,
    UtilizationReport,
    cdf,
    comparison_table,
    compute_report,
    recompute_utilizations,
    write_comparison,
    write_cost_function,
    write_report,
)
from vnf_balancer.workload.chains import Workload

from instances import make_chain, tiny_instance, wider_instance


def _report(method, alpha, migrations=0, replicas=0):
    return UtilizationReport(
        method=method, routing="sdn", alpha=alpha, status="optimal", objective=0.1,
        migrations=migrations, replicas=replicas,
        per_server=[("leaf_0.srv0", 0.25), ("leaf_1.srv0", 0.5)],
        per_link=[("leaf_0->spine_0", 0.1)],
    )


def _solved_initial(topology, workload):
    model = build_initial_placement_model(topology, workload, build_sdn_catalogs(topology, workload))
    return model, solve_exact(model)


def test_cdf():
    assert cdf([0.2, 0.1, 0.2, 0.5]) == [(0.1, 0.25), (0.2, 0.75), (0.5, 1.0)]
    assert cdf([]) == []


def test_comparison_table_layout():
    reports = [
        _report(method, alpha, migrations=i, replicas=j)
        for i, method in enumerate(["mgr_rep", "rep", "mgr"])
        for j, alpha in enumerate([0.9, 0.1, 0.5])
    ]
    table = comparison_table(reports)
    assert table.shape == (3, 3)
    assert list(table.index) == ["mgr", "rep", "mgr_rep"]
    assert list(table.columns) == ["0.1", "0.5", "0.9"]
    assert table.loc["mgr", "0.5"] == "2-2"
    assert table.loc["mgr_rep", "0.9"] == "0-0"
    assert comparison_table([]).empty


def test_write_report_files(tmp_path):
    files = write_report(_report("rep", 0.5, replicas=2), tmp_path / "rep_a0.5")
    assert [f.name for f in files] == [SUMMARY_FILE, SERVER_CDF_FILE, LINK_CDF_FILE, COMPARISON_FILE]
    assert all(f.exists() for f in files)
    summary = yaml.safe_load(files[0].read_text())
    assert summary["replicas"] == 2
    assert summary["servers"]["utilization"]["leaf_1.srv0"] == 0.5
    assert files[1].read_text().splitlines()[1:] == ["0.250000 0.500000", "0.500000 1.000000"]
    assert files[3].read_text().splitlines() == ["method,0.5", "rep,0-2"]


def test_comparison_and_cost_curve_files(tmp_path, costs):
    write_comparison([_report("mgr", 0.1), _report("rep", 0.1, replicas=1)], tmp_path / "comparison.csv")
    assert (tmp_path / "comparison.csv").read_text().splitlines() == ["method,0.1", "mgr,0-0", "rep,0-1"]
    write_cost_function(costs, tmp_path / "cost.dat", points=11)
    lines = (tmp_path / "cost.dat").read_text().splitlines()
    assert len(lines) == 12
    assert lines[1] == "0.000000 0.000000"
    assert lines[-1] == "1.000000 1.000000"


def test_single_demand_link_utilization(two_leaves):
    workload = Workload(chains=(make_chain("sfc0", "leaf_0", "leaf_1", [0.4], [30.0]),))
    model, solution = _solved_initial(two_leaves, workload)
    report = compute_report(model, solution)
    assert report.link_max == pytest.approx(0.03)
    assert report.link_mean == pytest.approx(0.06 / 8)
    assert report.server_max == pytest.approx(0.012)
    assert sorted(u for _, u in report.per_link).count(0.0) == 6
    assert report.method is None and report.migrations == 0


def test_empty_workload_reports_zeros(two_leaves):
    model, solution = _solved_initial(two_leaves, Workload())
    report = compute_report(model, solution)
    assert report.server_max == 0.0 and report.link_max == 0.0
    assert report.servers_above == {"0.8": 0.0, "0.9": 0.0}
    assert report.count_pair == "0-0"


def test_unsolved_model_cannot_be_reported(two_leaves):
    chain = make_chain("sfc0", "leaf_0", "leaf_1", [2.0], [900.0])
    model, solution = _solved_initial(two_leaves, Workload(chains=(chain,)))
    with pytest.raises(ReportError):
        compute_report(model, solution)


def test_report_of_a_main_model(sdn_instance):
    model = sdn_instance.model("rep", alpha=0.5)
    solution = solve_exact(model)
    report = compute_report(model, solution, sdn_instance.initial, seed=4)
    assert report.method == "rep" and report.alpha == 0.5 and report.seed == 4
    assert report.migrations == 0
    assert report.objective == pytest.approx(sum(report.cost_terms.values()))
    assert 0.0 < report.server_max <= 1.0


@pytest.mark.parametrize("make", [tiny_instance, wider_instance])
@pytest.mark.parametrize("routing", ["sdn", "ecmp"])
@pytest.mark.parametrize("method", ["mgr", "rep", "mgr_rep"])
def test_recomputed_utilizations_match_the_solver(make, routing, method):
    model = make(2, routing).model(method, alpha=0.3)
    solution = solve_exact(model)
    assert solution.values is not None
    server, link = recompute_utilizations(model, solution)
    key_routing = model.context.routing
    for x in range(len(model.context.servers)):
        solved = solution.value(var_key("ux", (x,), key_routing))
        assert abs(server[x] - solved) <= UTILIZATION_TOLERANCE
    for e in range(len(model.context.links)):
        solved = solution.value(var_key("ul", (e,), key_routing))
        assert abs(link[e] - solved) <= UTILIZATION_TOLERANCE
