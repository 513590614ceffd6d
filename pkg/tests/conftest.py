import pytest

from vnf_balancer.network.topology import build_fat_tree, build_leaf_spine
from vnf_balancer.optim.costs import make_exponential_approx
from vnf_balancer.optim.model import Routing
from vnf_balancer.workload.chains import Workload

from instances import build_instance, make_chain


@pytest.fixture
def fat_tree_k4():
    return build_fat_tree(4, 4)


@pytest.fixture
def leaf_spine_4x4():
    return build_leaf_spine(4, spines=4, servers_per_leaf=4)


@pytest.fixture
def two_leaves():
    return build_leaf_spine(2, spines=2, servers_per_leaf=1)


@pytest.fixture
def costs():
    return make_exponential_approx()


@pytest.fixture
def sdn_instance(two_leaves):
    """One chain of two VNFs with two demands between two single-server leaves."""
    chain = make_chain("sfc0", "leaf_0", "leaf_1", [0.4, 0.9], [120.0, 80.0], [False, True])
    return build_instance(two_leaves, Workload(chains=(chain,)), Routing.SDN)


@pytest.fixture
def tiny_config_data(tmp_path):
    return {
        "name": "tiny",
        "scenario": "sdn_leaf_spine",
        "seed": 3,
        "methods": ["mgr", "rep", "mgr_rep"],
        "alphas": [0.1, 0.9],
        "topology": {"leaves": 2, "spines": 1, "servers_per_leaf": 1},
        "workload": {"chains_per_direction": 1, "demands_per_chain": [1, 2], "bandwidth": [70, 110]},
        "solver": {"backend": "exact", "max_iterations": 500},
        "logging": {"level": "WARNING"},
        "output": {"directory": str(tmp_path / "results")},
    }
