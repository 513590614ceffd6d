import numpy as np
import pytest

from vnf_balancer.exceptions import ModelError, ParameterError
from vnf_balancer.optim.exact import solve_exact
from vnf_balancer.optim.model import (
    InitialPlacement,
    Method,
    VarKey,
    build_main_model,
    complete_assignment,
    count_migrations,
    count_replicas,
    cost_terms,
    MethodParams,
    var_key,
)


def _assign(model, **named):
    values = np.zeros(len(model.variables))
    for name, value in named.items():
        values[model.position(VarKey.parse(name))] = value
    return complete_assignment(model, values)


def test_row_names_follow_indices(sdn_instance):
    model = sdn_instance.model("mgr_rep")
    names = {c.name for c in model.constraints}
    assert {"eq14_s0_l0", "eq14_s0_l1", "eq6a_s0", "eq6b_s0", "eq7_s0_v1", "eq10_x1"} <= names
    assert "eq15a_s0_l1_p0" in names
    assert "eq8_x0_y4" in names


def test_variable_names():
    assert var_key("fd", (0, 1, 0, 0)).name == "fd_s0_v1_x0_l0"
    assert var_key("rd", (0, 1, 2)).name == "rd_s0_l1_p2"
    assert var_key("rd", (0, 1, 2), "ecmp").name == "rd_s0_l1_i2"
    assert VarKey.parse("fd_s0_v1_x0_l0") == var_key("fd", (0, 1, 0, 0))
    with pytest.raises(ModelError):
        VarKey.parse("fd_sx")


def test_families_per_method(sdn_instance):
    mgr = sdn_instance.model("mgr").families()
    rep = sdn_instance.model("rep").families()
    both = sdn_instance.model("mgr_rep").families()
    assert mgr["single"] == 2 and mgr["eq5"] == 1
    assert "eq6a" not in mgr and "eq7" not in mgr and "pin" not in mgr
    assert rep["pin"] == 2 and rep["eq7"] == 2 and "single" not in rep
    assert both["eq7"] == 2 and "pin" not in both


def test_migration_only_model_has_no_replica_overhead(sdn_instance):
    model = sdn_instance.model("mgr")
    values = _assign(model, f_s0_v1_x0=1.0, fd_s0_v1_x0_l0=1.0)
    assert values[model.position(var_key("uv", (0, 1, 0)))] == pytest.approx(0.108)
    assert values[model.position(var_key("ux", (0,)))] == pytest.approx(0.108)


def test_replica_overhead_on_server_utilization(sdn_instance):
    model = sdn_instance.model("rep")
    values = _assign(model, f_s0_v1_x0=1.0, fd_s0_v1_x0_l0=1.0)
    # 1.05 * 0.108 + 1 / (1000 * 0.05)
    assert values[model.position(var_key("ux", (0,)))] == pytest.approx(0.1334)
    row = next(c for c in model.constraints if c.name == "eq10_x0")
    assert row.coefs[model.position(var_key("f", (0, 1, 0)))] == pytest.approx(-0.02)


def test_link_utilization_follows_demand_routes(sdn_instance):
    model = sdn_instance.model("mgr")
    values = _assign(model, rd_s0_l0_p0=1.0)
    used = set(model.context.choices[0][0].paths[0].links)
    for e, link in enumerate(model.context.links):
        expected = 0.12 if link.id in used else 0.0
        assert values[model.position(var_key("ul", (e,)))] == pytest.approx(expected)


def test_cost_epigraph_takes_the_envelope(sdn_instance, costs):
    model = sdn_instance.model("mgr", alpha=0.0, beta=0.0)
    values = _assign(model, f_s0_v1_x0=1.0, fd_s0_v1_x0_l0=1.0)
    k = values[model.position(var_key("kx", (0,)))]
    assert k == pytest.approx(max(0.0, max(s.at(0.108) for s in costs.segments)))
    terms = cost_terms(model, values)
    assert terms["migration"] == 0.0 and terms["link"] == 0.0
    assert terms["server"] == pytest.approx(k / 2)


def test_optimal_counts_respect_the_method(sdn_instance):
    mgr = solve_exact(sdn_instance.model("mgr", alpha=0.1))
    rep = solve_exact(sdn_instance.model("rep", alpha=0.1))
    assert mgr.status.has_solution and rep.status.has_solution
    assert count_replicas(mgr) == 0
    assert count_migrations(sdn_instance.initial, rep) == 0


def test_initial_placement_covers_every_demand(sdn_instance):
    assert len(sdn_instance.initial.placement) == 2
    assert sdn_instance.initial.usage.keys() == {(0, v, l) for v in range(2) for l in range(2)}


def test_main_model_needs_a_complete_initial_placement(sdn_instance, costs):
    partial = InitialPlacement(placement={(0, 0): 0}, usage={})
    with pytest.raises(ParameterError):
        build_main_model(
            sdn_instance.topology, sdn_instance.workload, sdn_instance.catalog, partial,
            Method.MIGRATION, "sdn", MethodParams(alpha=0.5), costs,
        )


def test_unknown_method_is_rejected(sdn_instance):
    with pytest.raises(ParameterError):
        sdn_instance.model("swap")
