import pytest

from vnf_balancer.exceptions import CatalogTooLargeError, ParameterError
from vnf_balancer.network.paths import (
    build_ecmp_catalog,
    build_ecmp_route_catalog,
    build_route_set,
    build_sdn_catalog,
    enumerate_equal_cost_paths,
    keeps_chain_order,
    placement_skeleton,
)
from vnf_balancer.workload.chains import FAT_TREE_SFC, LEAF_SPINE_SFC

from instances import make_chain


def test_intra_pod_tor_pairs_have_two_paths(fat_tree_k4):
    paths = enumerate_equal_cost_paths(fat_tree_k4, "tor_p0_0", "tor_p0_1")
    assert len(paths) == 2
    assert all(p.hops == 2 for p in paths)


def test_inter_pod_tor_pairs_have_four_paths(fat_tree_k4):
    paths = enumerate_equal_cost_paths(fat_tree_k4, "tor_p0_0", "tor_p3_1")
    assert len(paths) == 4
    assert all(p.hops == 4 for p in paths)
    assert [p.nodes for p in paths] == sorted(p.nodes for p in paths)


def test_leaf_pairs_have_one_path_per_spine(leaf_spine_4x4):
    assert len(enumerate_equal_cost_paths(leaf_spine_4x4, "leaf_0", "leaf_3")) == 4


def test_same_node_gives_single_node_path(leaf_spine_4x4):
    (path,) = enumerate_equal_cost_paths(leaf_spine_4x4, "leaf_1", "leaf_1")
    assert path.nodes == ("leaf_1",)
    assert path.links == ()


def test_transit_switch_is_not_an_endpoint(leaf_spine_4x4):
    with pytest.raises(ParameterError):
        enumerate_equal_cost_paths(leaf_spine_4x4, "spine_0", "leaf_1")


def test_path_records_service_nodes(leaf_spine_4x4):
    path = enumerate_equal_cost_paths(leaf_spine_4x4, "leaf_0", "leaf_2")[0]
    assert path.service_nodes == ("leaf_0", "leaf_2")
    assert path.traverses("leaf_0->spine_0")


def _leaf_chain(demands=(100.0,)):
    return make_chain("sfc0", "leaf_0", "leaf_3", [v.load_ratio for v in LEAF_SPINE_SFC], list(demands))


def test_route_set_orders_by_length_then_name(leaf_spine_4x4):
    skeletons = build_route_set(leaf_spine_4x4, _leaf_chain(), 1)
    assert skeletons == [("leaf_0", "leaf_3"), ("leaf_0", "leaf_1", "leaf_3"), ("leaf_0", "leaf_2", "leaf_3")]


def test_route_set_without_intermediates(leaf_spine_4x4):
    assert build_route_set(leaf_spine_4x4, _leaf_chain(), 0) == [("leaf_0", "leaf_3")]


def test_sdn_catalog_combines_segment_choices(leaf_spine_4x4):
    catalog = build_sdn_catalog(leaf_spine_4x4, _leaf_chain(), max_intermediate=1)
    routes = catalog.paths("sfc0")
    # 4 direct routes plus 4 x 4 through each of the two middle leaves
    assert len(routes) == 36
    assert len({r.nodes for r in routes}) == 36
    assert routes[0].service_nodes == ("leaf_0", "leaf_3")


def test_sdn_catalog_size_guard(leaf_spine_4x4):
    with pytest.raises(CatalogTooLargeError):
        build_sdn_catalog(leaf_spine_4x4, _leaf_chain(), max_intermediate=2, max_paths=10)


def test_placement_skeleton_skips_endpoints_and_repeats():
    assert placement_skeleton("a", "d", ["a", "b", "b", "c"]) == ("a", "b", "c", "d")
    assert placement_skeleton("a", "d", ["a", "d", "d"]) == ("a", "d")


def test_ecmp_route_catalog_is_seeded(fat_tree_k4):
    chain = make_chain("sfc0", "tor_p0_0", "tor_p2_1", [v.load_ratio for v in FAT_TREE_SFC], [10.0])
    first = build_ecmp_route_catalog(fat_tree_k4, chain, rng_seed=5)
    second = build_ecmp_route_catalog(fat_tree_k4, chain, rng_seed=5)
    assert [p.nodes for p in first.paths("sfc0")] == [p.nodes for p in second.paths("sfc0")]
    # one pre-selected path per skeleton: direct plus six middle TORs
    assert len(first.paths("sfc0")) == 7


def test_ecmp_catalog_shape(fat_tree_k4):
    chain = make_chain(
        "sfc0", "tor_p0_0", "tor_p1_0", [v.load_ratio for v in FAT_TREE_SFC], [10.0, 20.0, 30.0],
        [v.replicable for v in FAT_TREE_SFC],
    )
    catalog = build_ecmp_catalog(
        fat_tree_k4, chain, ["tor_p0_0", "tor_p0_0", "tor_p1_0"],
        movable=[1], candidates=["tor_p2_0", "tor_p3_0"], rng_seed=1,
    )
    subsets = catalog.subsets("sfc0")
    assert subsets[0].is_baseline
    moved = [s for s in subsets if not s.is_baseline]
    assert len(moved) == 2
    assert sum(len(s.paths) for s in moved) == 6
    assert {s.node for s in moved} == {"tor_p2_0", "tor_p3_0"}
    for subset in moved:
        assert subset.skeleton == ("tor_p0_0", subset.node, "tor_p1_0")
        assert all(p.nodes[0] == "tor_p0_0" and subset.node in p.nodes for p in subset.paths)


def test_ecmp_catalog_skips_alternatives_beyond_intermediate_cap(fat_tree_k4):
    chain = make_chain("sfc0", "tor_p0_0", "tor_p1_0", [0.2, 1.0], [10.0])
    catalog = build_ecmp_catalog(
        fat_tree_k4, chain, ["tor_p0_0", "tor_p1_0"], max_intermediate=0,
        movable=[0], candidates=["tor_p2_0"],
    )
    assert len(catalog.subsets("sfc0")) == 1
    assert len(catalog.warnings) == 1


def test_ecmp_catalog_rejects_wrong_initial_length(fat_tree_k4):
    chain = make_chain("sfc0", "tor_p0_0", "tor_p1_0", [0.2, 1.0], [10.0])
    with pytest.raises(ParameterError):
        build_ecmp_catalog(fat_tree_k4, chain, ["tor_p0_0"])


def test_keeps_chain_order():
    assert keeps_chain_order(("a", "b", "c", "d"), ["a", "b", "b", "c"])
    assert keeps_chain_order(("a", "b", "a"), ["b", "a"])
    assert not keeps_chain_order(("a", "b", "c", "d"), ["c", "b"])
    assert not keeps_chain_order(("a", "d"), ["d", "a"])


def test_ecmp_catalog_skips_alternatives_that_reorder_the_chain(fat_tree_k4):
    chain = make_chain("sfc0", "tor_p0_0", "tor_p1_0", [0.2, 1.0, 0.8], [10.0])
    catalog = build_ecmp_catalog(
        fat_tree_k4, chain, ["tor_p0_0", "tor_p2_0", "tor_p3_0"],
        movable=[2], candidates=["tor_p2_0", "tor_p0_0"],
    )
    subsets = catalog.subsets("sfc0")
    # vnf2 back on tor_p2_0 still follows vnf1; on the source TOR it would precede it
    assert [s.node for s in subsets] == [None, "tor_p2_0"]
    assert subsets[1].skeleton == ("tor_p0_0", "tor_p2_0", "tor_p1_0")
    assert catalog.warnings == ("chain sfc0: alternative vnf2@tor_p0_0 breaks chain order",)
