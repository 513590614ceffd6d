import pytest
import yaml

from vnf_balancer.config.settings import (
    Backend,
    ExperimentConfig,
    Scenario,
    resolve_config_path,
    validate_config,
)
from vnf_balancer.exceptions import ConfigurationError
from vnf_balancer.optim.model import Method, Routing
from vnf_balancer.workload.chains import LEAF_SPINE_SFC, CountInterval, Interval

PRESETS = ["paper-ecmp-desk", "paper-sdn-desk", "paper-ecmp", "paper-sdn"]


def _fields(data):
    return [d.field for d in validate_config(data)]


@pytest.mark.parametrize("name", PRESETS)
def test_bundled_presets_are_valid(name):
    config = ExperimentConfig.load_from_file(name)
    assert config.name == name
    assert len(config.cells) == 9


def test_desk_presets_use_the_exact_backend():
    ecmp = ExperimentConfig.load_from_file("paper-ecmp-desk")
    sdn = ExperimentConfig.load_from_file("paper-sdn-desk")
    assert ecmp.routing == Routing.ECMP and sdn.routing == Routing.SDN
    assert ecmp.solver.backend == sdn.solver.backend == Backend.EXACT
    assert ExperimentConfig.load_from_file("paper-sdn").solver.backend == Backend.HEURISTIC


def test_desk_presets_bound_every_exact_solve():
    for name in ("paper-ecmp-desk", "paper-sdn-desk"):
        solver = ExperimentConfig.load_from_file(name).solver
        assert solver.max_wall_time is not None and solver.max_wall_time <= 60
        assert solver.budget().max_wall_time == solver.max_wall_time


def test_defaults(tiny_config_data):
    config = ExperimentConfig(**tiny_config_data)
    assert config.scenario == Scenario.SDN_LEAF_SPINE
    assert config.cells[0] == (Method.MIGRATION, 0.1)
    assert config.workload.sfc_for(config.scenario) == LEAF_SPINE_SFC
    assert config.workload.demands_for(config.scenario) == CountInterval(low=1, high=2)
    assert config.workload.bandwidth_for(Scenario.ECMP_FAT_TREE) == Interval(low=70.0, high=110.0)
    assert ExperimentConfig().workload.bandwidth_for(Scenario.ECMP_FAT_TREE) == Interval(low=1.0, high=30.0)
    assert config.model.method_params(0.9).e_r == 0.05
    assert config.solver.budget().max_iterations == 500


def test_every_violated_field_is_listed(tiny_config_data):
    data = dict(tiny_config_data)
    data["alphas"] = [1.5, 0.2]
    data["topology"] = {"pods": 3}
    data["workload"] = {"demands_per_chain": [20, 10]}
    fields = _fields(data)
    assert "alphas.0" in fields
    assert "topology.pods" in fields
    assert "workload.demands_per_chain" in fields
    assert "alphas.1" not in fields


def test_cross_field_checks(tiny_config_data):
    assert _fields(tiny_config_data) == []
    assert _fields({**tiny_config_data, "alphas": [0.1, 0.1]}) == ["alphas"]
    assert _fields({**tiny_config_data, "topology": {"flavor": "fat_tree"}}) == ["topology.flavor"]
    assert _fields({**tiny_config_data, "workload": {"pairs": [["leaf_0", "leaf_1"]]}}) == ["workload.pairs"]
    ecmp = {"scenario": "ecmp_fat_tree", "topology": {"pods": 2}, "workload": {"num_sampled_pairs": 5}}
    assert _fields(ecmp) == ["workload.num_sampled_pairs"]


def test_invalid_cost_segments(tiny_config_data):
    assert _fields({**tiny_config_data, "cost": {"segments": [[1.0, 0.3]]}}) == ["cost"]


def test_load_from_file(tmp_path, tiny_config_data):
    path = tmp_path / "tiny.yaml"
    path.write_text(yaml.safe_dump(tiny_config_data))
    assert ExperimentConfig.load_from_file(path).seed == 3
    path.write_text(yaml.safe_dump({**tiny_config_data, "seed": -1}))
    with pytest.raises(ConfigurationError, match="seed"):
        ExperimentConfig.load_from_file(path)


def test_unreadable_documents(tmp_path):
    with pytest.raises(ConfigurationError):
        resolve_config_path(tmp_path / "missing.yaml")
    broken = tmp_path / "broken.yaml"
    broken.write_text("- just\n- a list\n")
    with pytest.raises(ConfigurationError):
        ExperimentConfig.load_from_file(broken)


def test_environment_overrides(monkeypatch):
    monkeypatch.setenv("VNFBAL_SEED", "17")
    monkeypatch.setenv("VNFBAL_SOLVER__WORKERS", "2")
    config = ExperimentConfig()
    assert config.seed == 17
    assert config.solver.workers == 2
