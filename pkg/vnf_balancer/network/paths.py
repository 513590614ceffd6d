"""Equal-cost path enumeration and the SDN / ECMP route catalogs."""
from itertools import permutations, product
from math import prod
from typing import Any, Dict, List, Optional, Sequence, Tuple
import logging

import networkx as nx
import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from ..exceptions import CatalogTooLargeError, ParameterError, PathError
from ..utils import derive_seed
from ..workload.chains import ServiceChain, TrafficDemand, Workload
from .topology import Topology, link_id

logger = logging.getLogger(__name__)

DEFAULT_MAX_PATHS = 5000


class Path(BaseModel):
    """A directed route through the fabric."""
    model_config = ConfigDict(frozen=True)

    nodes: Tuple[str, ...] = Field(min_length=1)
    links: Tuple[str, ...] = ()
    service_nodes: Tuple[str, ...] = ()

    @model_validator(mode="after")
    def _links_follow_nodes(self) -> "Path":
        expected = tuple(link_id(a, b) for a, b in zip(self.nodes, self.nodes[1:]))
        if self.links != expected:
            raise ValueError(f"links {self.links} do not join nodes {self.nodes}")
        return self

    @property
    def source(self) -> str:
        return self.nodes[0]

    @property
    def dest(self) -> str:
        return self.nodes[-1]

    @property
    def hops(self) -> int:
        return len(self.links)

    def traverses(self, link: str) -> bool:
        return link in self.links

    def label(self) -> str:
        return " ".join(self.nodes)


def _make_path(topology: Topology, nodes: Sequence[str]) -> Path:
    for a, b in zip(nodes, nodes[1:]):
        topology.link(a, b)
    service = tuple(n for n in nodes if topology.node(n).kind.hosts_servers)
    return Path(
        nodes=tuple(nodes),
        links=tuple(link_id(a, b) for a, b in zip(nodes, nodes[1:])),
        service_nodes=service,
    )


def _concat(topology: Topology, segments: Sequence[Path]) -> Path:
    nodes: List[str] = list(segments[0].nodes)
    for segment in segments[1:]:
        nodes.extend(segment.nodes[1:])
    return _make_path(topology, nodes)


def _require_service_node(topology: Topology, node_id: str):
    if not topology.node(node_id).kind.hosts_servers:
        raise ParameterError(f"{node_id} is not a service node")


def enumerate_equal_cost_paths(topology: Topology, src_node: str, dst_node: str) -> List[Path]:
    """All minimum-hop paths between two service nodes, ordered by node-id sequence."""
    _require_service_node(topology, src_node)
    _require_service_node(topology, dst_node)

    def compute() -> List[Path]:
        if src_node == dst_node:
            return [_make_path(topology, [src_node])]
        found = sorted(tuple(p) for p in nx.all_shortest_paths(topology.graph, src_node, dst_node))
        return [_make_path(topology, nodes) for nodes in found]

    return topology.cached(("ecmp", src_node, dst_node), compute)


def _default_intermediate(chain: ServiceChain) -> int:
    return max(0, len(chain.vnfs) - 2)


def build_route_set(topology: Topology, chain: ServiceChain, max_intermediate: int) -> List[Tuple[str, ...]]:
    """Skeletons ⟨source, m1, ..., mq, dest⟩ of distinct service nodes with q <= max_intermediate.

    Ordered by length, then lexicographically.
    """
    _require_service_node(topology, chain.source_node)
    _require_service_node(topology, chain.dest_node)
    source, dest = chain.source_node, chain.dest_node
    if source == dest and max_intermediate == 0:
        return [(source,)]
    middle_pool = sorted(n.id for n in topology.service_nodes() if n.id not in (source, dest))
    skeletons: List[Tuple[str, ...]] = []
    if source == dest:
        skeletons.append((source,))
    else:
        skeletons.append((source, dest))
    for q in range(1, max_intermediate + 1):
        for middle in sorted(permutations(middle_pool, q)):
            skeletons.append((source, *middle, dest))
    return skeletons


class RouteCatalog(BaseModel):
    """Per chain, the end-to-end routes a chain may choose from (P_s)."""
    model_config = ConfigDict(frozen=True)

    chains: Dict[str, Tuple[Path, ...]] = Field(default_factory=dict)

    def paths(self, chain_id: str) -> Tuple[Path, ...]:
        try:
            return self.chains[chain_id]
        except KeyError:
            raise PathError(f"catalog has no routes for chain {chain_id}")

    @property
    def size(self) -> int:
        return sum(len(p) for p in self.chains.values())

    def to_document(self) -> Dict[str, Any]:
        return {cid: [list(p.nodes) for p in paths] for cid, paths in self.chains.items()}


class SdnCatalog(RouteCatalog):
    """All routes through every skeleton, combining every equal-cost segment choice."""


class EcmpSubset(BaseModel):
    """One placement alternative: a pre-selected path per traffic demand."""
    model_config = ConfigDict(frozen=True)

    index: int
    moved_vnf: Optional[int] = Field(default=None, description="None for the baseline subset")
    node: Optional[str] = None
    skeleton: Tuple[str, ...]
    paths: Tuple[Path, ...]

    @property
    def is_baseline(self) -> bool:
        return self.moved_vnf is None


class EcmpCatalog(BaseModel):
    """Per chain, the subsets of pre-selected ECMP paths."""
    model_config = ConfigDict(frozen=True)

    chains: Dict[str, Tuple[EcmpSubset, ...]] = Field(default_factory=dict)
    warnings: Tuple[str, ...] = ()

    def subsets(self, chain_id: str) -> Tuple[EcmpSubset, ...]:
        try:
            return self.chains[chain_id]
        except KeyError:
            raise PathError(f"catalog has no subsets for chain {chain_id}")

    @property
    def size(self) -> int:
        return sum(len(s.paths) for subsets in self.chains.values() for s in subsets)

    def to_document(self) -> Dict[str, Any]:
        return {
            cid: [
                {
                    "index": s.index,
                    "moved_vnf": s.moved_vnf,
                    "node": s.node,
                    "paths": [list(p.nodes) for p in s.paths],
                }
                for s in subsets
            ]
            for cid, subsets in self.chains.items()
        }


def build_sdn_catalog(
    topology: Topology,
    chain: ServiceChain,
    max_intermediate: Optional[int] = None,
    max_paths: int = DEFAULT_MAX_PATHS,
) -> SdnCatalog:
    """Expand every skeleton of the chain into all its equal-cost concatenations."""
    if max_intermediate is None:
        max_intermediate = _default_intermediate(chain)
    skeletons = build_route_set(topology, chain, max_intermediate)
    options_per_skeleton = [
        [enumerate_equal_cost_paths(topology, a, b) for a, b in zip(sk, sk[1:])]
        for sk in skeletons
    ]
    total = sum(prod(len(o) for o in options) for options in options_per_skeleton)
    if total > max_paths:
        logger.error(f"Route catalog for chain {chain.id} would hold {total} paths (cap {max_paths})")
        raise CatalogTooLargeError(
            f"chain {chain.id}: {total} routes exceed max_paths={max_paths}; "
            f"lower max_intermediate or raise the cap"
        )

    routes: List[Path] = []
    seen = set()
    for skeleton, options in zip(skeletons, options_per_skeleton):
        if not options:
            combos = [(enumerate_equal_cost_paths(topology, skeleton[0], skeleton[0])[0],)]
        else:
            combos = product(*options)
        for combo in combos:
            path = _concat(topology, combo)
            if path.nodes not in seen:
                seen.add(path.nodes)
                routes.append(path)
    logger.debug(f"Chain {chain.id}: {len(skeletons)} skeletons, {len(routes)} routes")
    return SdnCatalog(chains={chain.id: tuple(routes)})


def build_sdn_catalogs(
    topology: Topology,
    workload: Workload,
    max_intermediate: Optional[int] = None,
    max_paths: int = DEFAULT_MAX_PATHS,
) -> SdnCatalog:
    chains: Dict[str, Tuple[Path, ...]] = {}
    for chain in workload.chains:
        chains.update(build_sdn_catalog(topology, chain, max_intermediate, max_paths).chains)
    catalog = SdnCatalog(chains=chains)
    logger.info(f"SDN catalog: {catalog.size} routes over {len(chains)} chains")
    return catalog


def _pick(topology: Topology, rng: np.random.Generator, skeleton: Sequence[str]) -> Path:
    if len(skeleton) == 1:
        return enumerate_equal_cost_paths(topology, skeleton[0], skeleton[0])[0]
    segments = []
    for a, b in zip(skeleton, skeleton[1:]):
        options = enumerate_equal_cost_paths(topology, a, b)
        if not options:
            raise PathError(f"no path between {a} and {b}")
        segments.append(options[int(rng.integers(len(options)))])
    return _concat(topology, segments)


def build_ecmp_route_catalog(
    topology: Topology,
    chain: ServiceChain,
    max_intermediate: Optional[int] = None,
    rng_seed: int = 0,
) -> RouteCatalog:
    """One randomly pre-selected equal-cost path per skeleton.

    The initial-placement model routes over these before any ECMP subset exists.
    """
    if max_intermediate is None:
        max_intermediate = _default_intermediate(chain)
    rng = np.random.default_rng(derive_seed(rng_seed, "ecmp-route", chain.id))
    routes: List[Path] = []
    seen = set()
    for skeleton in build_route_set(topology, chain, max_intermediate):
        path = _pick(topology, rng, skeleton)
        if path.nodes not in seen:
            seen.add(path.nodes)
            routes.append(path)
    return RouteCatalog(chains={chain.id: tuple(routes)})


def build_ecmp_route_catalogs(
    topology: Topology,
    workload: Workload,
    max_intermediate: Optional[int] = None,
    rng_seed: int = 0,
) -> RouteCatalog:
    chains: Dict[str, Tuple[Path, ...]] = {}
    for chain in workload.chains:
        chains.update(build_ecmp_route_catalog(topology, chain, max_intermediate, rng_seed).chains)
    catalog = RouteCatalog(chains=chains)
    logger.info(f"ECMP route catalog: {catalog.size} pre-selected routes over {len(chains)} chains")
    return catalog


def placement_skeleton(source: str, dest: str, vnf_nodes: Sequence[str]) -> Tuple[str, ...]:
    """Route skeleton through the VNF locations in chain order.

    Nodes equal to the endpoints or already visited are not repeated.
    """
    middle: List[str] = []
    for node in vnf_nodes:
        if node not in (source, dest) and node not in middle:
            middle.append(node)
    if source == dest and not middle:
        return (source,)
    return (source, *middle, dest)


def keeps_chain_order(skeleton: Sequence[str], vnf_nodes: Sequence[str]) -> bool:
    """Whether the VNF locations can be visited in chain order along ``skeleton``."""
    position = 0
    for node in vnf_nodes:
        later = [i for i in range(position, len(skeleton)) if skeleton[i] == node]
        if not later:
            return False
        position = later[0]
    return True


def build_ecmp_catalog(
    topology: Topology,
    chain: ServiceChain,
    initial_nodes: Sequence[str],
    demands: Optional[Sequence[TrafficDemand]] = None,
    max_intermediate: Optional[int] = None,
    rng_seed: int = 0,
    movable: Optional[Sequence[int]] = None,
    candidates: Optional[Sequence[str]] = None,
) -> EcmpCatalog:
    """Pre-select one ECMP path per demand for every single-VNF placement alternative.

    Subset 0 keeps the initial placement; every further subset moves one VNF
    (index into the chain) to one candidate service node. Alternatives whose
    skeleton is unreachable, longer than ``max_intermediate`` or visits the
    VNFs out of chain order are skipped and recorded in ``warnings``.
    """
    if len(initial_nodes) != len(chain.vnfs):
        raise ParameterError(
            f"chain {chain.id}: initial placement names {len(initial_nodes)} nodes "
            f"for {len(chain.vnfs)} VNFs"
        )
    for node in initial_nodes:
        _require_service_node(topology, node)
    demands = tuple(chain.demands if demands is None else demands)
    movable = list(range(len(chain.vnfs))) if movable is None else list(movable)
    if candidates is None:
        candidates = [n.id for n in topology.service_nodes()]
    for node in candidates:
        _require_service_node(topology, node)

    alternatives: List[Tuple[Optional[int], Optional[str], Tuple[str, ...], Tuple[str, ...]]] = [
        (None, None, placement_skeleton(chain.source_node, chain.dest_node, initial_nodes), tuple(initial_nodes))
    ]
    for v in movable:
        for node in candidates:
            if node == initial_nodes[v]:
                continue
            nodes = list(initial_nodes)
            nodes[v] = node
            alternatives.append((v, node, placement_skeleton(chain.source_node, chain.dest_node, nodes), tuple(nodes)))

    rng = np.random.default_rng(derive_seed(rng_seed, "ecmp-subsets", chain.id))
    subsets: List[EcmpSubset] = []
    warnings: List[str] = []
    for moved, node, skeleton, nodes in alternatives:
        if moved is not None and not keeps_chain_order(skeleton, nodes):
            warnings.append(f"chain {chain.id}: alternative vnf{moved}@{node} breaks chain order")
            continue
        if max_intermediate is not None and len(skeleton) - 2 > max_intermediate:
            warnings.append(f"chain {chain.id}: alternative vnf{moved}@{node} exceeds max_intermediate")
            continue
        try:
            paths = tuple(_pick(topology, rng, skeleton) for _ in demands)
        except (PathError, nx.NetworkXNoPath) as e:
            warnings.append(f"chain {chain.id}: alternative vnf{moved}@{node} skipped: {str(e)}")
            continue
        subsets.append(EcmpSubset(
            index=len(subsets), moved_vnf=moved, node=node, skeleton=skeleton, paths=paths,
        ))
    for message in warnings:
        logger.warning(message)
    return EcmpCatalog(chains={chain.id: tuple(subsets)}, warnings=tuple(warnings))


def build_ecmp_catalogs(
    topology: Topology,
    workload: Workload,
    initial_nodes: Dict[str, Sequence[str]],
    max_intermediate: Optional[int] = None,
    rng_seed: int = 0,
    candidates: Optional[Sequence[str]] = None,
) -> EcmpCatalog:
    """ECMP catalogs for a whole workload; ``initial_nodes`` maps chain id to VNF nodes."""
    chains: Dict[str, Tuple[EcmpSubset, ...]] = {}
    warnings: List[str] = []
    for chain in workload.chains:
        part = build_ecmp_catalog(
            topology, chain, initial_nodes[chain.id],
            max_intermediate=max_intermediate, rng_seed=rng_seed, candidates=candidates,
        )
        chains.update(part.chains)
        warnings.extend(part.warnings)
    catalog = EcmpCatalog(chains=chains, warnings=tuple(warnings))
    logger.info(
        f"ECMP catalog: {sum(len(s) for s in chains.values())} subsets, "
        f"{catalog.size} pre-selected paths, {len(warnings)} skipped alternatives"
    )
    return catalog
