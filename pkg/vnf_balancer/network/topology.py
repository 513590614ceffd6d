"""Fat-tree and leaf-spine data-center topologies."""
from enum import Enum
from typing import Any, Callable, Dict, List, Optional, Tuple
import logging

import networkx as nx
from pydantic import BaseModel, ConfigDict, Field, PrivateAttr, ValidationError, model_validator

from ..exceptions import ParameterError, TopologyError

logger = logging.getLogger(__name__)

DEFAULT_SERVER_CAPACITY = 1000.0
DEFAULT_LINK_CAPACITY = 1000.0
DEFAULT_SPINES = 4


class NodeKind(str, Enum):
    TOR = "tor"
    AGGREGATION = "aggregation"
    CORE = "core"
    LEAF = "leaf"
    SPINE = "spine"

    @property
    def hosts_servers(self) -> bool:
        return self in (NodeKind.TOR, NodeKind.LEAF)


class Flavor(str, Enum):
    FAT_TREE = "fat_tree"
    LEAF_SPINE = "leaf_spine"


class Server(BaseModel):
    """A server attached to a service node."""
    model_config = ConfigDict(frozen=True)

    id: str
    capacity: float = Field(gt=0, description="Processing units (C_x)")


class Node(BaseModel):
    """A switch; TOR and leaf switches host servers."""
    model_config = ConfigDict(frozen=True)

    id: str
    kind: NodeKind
    servers: Tuple[Server, ...] = ()

    @model_validator(mode="after")
    def _servers_match_kind(self) -> "Node":
        if self.kind.hosts_servers and not self.servers:
            raise ValueError(f"{self.kind.value} node {self.id} must host at least one server")
        if not self.kind.hosts_servers and self.servers:
            raise ValueError(f"{self.kind.value} node {self.id} cannot host servers")
        return self


class Link(BaseModel):
    """A directed link; every cable yields one link per direction."""
    model_config = ConfigDict(frozen=True)

    id: str
    source: str
    target: str
    capacity: float = Field(gt=0, description="Bandwidth in Gbps (C_l)")

    @model_validator(mode="after")
    def _distinct_endpoints(self) -> "Link":
        if self.source == self.target:
            raise ValueError(f"link {self.id} has identical endpoints")
        return self

    @property
    def endpoints(self) -> Tuple[str, str]:
        return (self.source, self.target)


def link_id(source: str, target: str) -> str:
    return f"{source}->{target}"


class Topology(BaseModel):
    """Immutable data-center graph with server and link capacities."""
    model_config = ConfigDict(frozen=True)

    flavor: Flavor
    nodes: Tuple[Node, ...]
    links: Tuple[Link, ...]

    _graph: Optional[nx.DiGraph] = PrivateAttr(default=None)
    _node_index: Optional[Dict[str, Node]] = PrivateAttr(default=None)
    _link_index: Optional[Dict[Tuple[str, str], Link]] = PrivateAttr(default=None)
    _memo: Dict[Any, Any] = PrivateAttr(default_factory=dict)

    @model_validator(mode="after")
    def _check_invariants(self) -> "Topology":
        node_ids = [n.id for n in self.nodes]
        if len(set(node_ids)) != len(node_ids):
            raise ValueError("node ids must be unique within a topology")
        server_ids = [s.id for n in self.nodes for s in n.servers]
        if len(set(server_ids)) != len(server_ids):
            raise ValueError("server ids must be unique within a topology")
        known = set(node_ids)
        pairs = set()
        for link in self.links:
            if link.source not in known or link.target not in known:
                raise ValueError(f"link {link.id} references an unknown node")
            if link.endpoints in pairs:
                raise ValueError(f"duplicate link {link.id}")
            pairs.add(link.endpoints)
        graph = nx.Graph()
        graph.add_nodes_from(node_ids)
        graph.add_edges_from(pairs)
        if node_ids and not nx.is_connected(graph):
            raise ValueError("topology graph must be connected")
        if self.flavor == Flavor.LEAF_SPINE:
            _check_leaf_spine(self.nodes, pairs)
        else:
            _check_fat_tree(self.nodes, pairs)
        return self

    @property
    def graph(self) -> nx.DiGraph:
        """Directed networkx view of the topology (built once)."""
        if self._graph is None:
            graph = nx.DiGraph()
            for node in self.nodes:
                graph.add_node(node.id, kind=node.kind.value)
            for link in self.links:
                graph.add_edge(link.source, link.target, id=link.id, capacity=link.capacity)
            self._graph = graph
        return self._graph

    def node(self, node_id: str) -> Node:
        if self._node_index is None:
            self._node_index = {n.id: n for n in self.nodes}
        try:
            return self._node_index[node_id]
        except KeyError:
            raise ParameterError(f"unknown node {node_id}")

    def link(self, source: str, target: str) -> Link:
        if self._link_index is None:
            self._link_index = {l.endpoints: l for l in self.links}
        try:
            return self._link_index[(source, target)]
        except KeyError:
            raise ParameterError(f"no link {source} -> {target}")

    def cached(self, key: Any, factory: Callable[[], Any]) -> Any:
        """Memoise a value derived from this (immutable) topology."""
        if key not in self._memo:
            self._memo[key] = factory()
        return self._memo[key]

    def service_nodes(self) -> List[Node]:
        return [n for n in self.nodes if n.kind.hosts_servers]

    def servers(self) -> List[Tuple[str, Server]]:
        """All servers with their hosting node id, in node order."""
        return [(n.id, s) for n in self.nodes for s in n.servers]

    def nodes_of_kind(self, kind: NodeKind) -> List[Node]:
        return [n for n in self.nodes if n.kind == kind]

    def uplinks(self, node_id: str) -> List[Link]:
        return [l for l in self.links if l.source == node_id]

    def to_document(self) -> Dict[str, Any]:
        """YAML-ready description of nodes, servers and links."""
        return {
            "flavor": self.flavor.value,
            "nodes": [
                {
                    "id": n.id,
                    "kind": n.kind.value,
                    "servers": [{"id": s.id, "capacity": s.capacity} for s in n.servers],
                }
                for n in self.nodes
            ],
            "links": [
                {"id": l.id, "source": l.source, "target": l.target, "capacity": l.capacity}
                for l in self.links
            ],
        }


def _check_leaf_spine(nodes: Tuple[Node, ...], pairs: set):
    leaves = [n.id for n in nodes if n.kind == NodeKind.LEAF]
    spines = [n.id for n in nodes if n.kind == NodeKind.SPINE]
    if len(leaves) + len(spines) != len(nodes):
        raise ValueError("leaf-spine topologies only contain leaf and spine nodes")
    expected = {(l, s) for l in leaves for s in spines} | {(s, l) for l in leaves for s in spines}
    if pairs != expected:
        raise ValueError("every leaf must connect to every spine and nothing else")


def _check_fat_tree(nodes: Tuple[Node, ...], pairs: set):
    kinds = {n.id: n.kind for n in nodes}
    tors = [i for i, k in kinds.items() if k == NodeKind.TOR]
    aggs = [i for i, k in kinds.items() if k == NodeKind.AGGREGATION]
    cores = [i for i, k in kinds.items() if k == NodeKind.CORE]
    if len(tors) + len(aggs) + len(cores) != len(nodes):
        raise ValueError("fat-tree topologies only contain tor, aggregation and core nodes")
    half = int(round(len(cores) ** 0.5))
    pods = 2 * half
    if half < 1 or len(tors) != pods * half or len(aggs) != pods * half or len(cores) != half * half:
        raise ValueError("switch counts do not form a k-ary fat-tree")
    for tor in tors:
        ups = [b for (a, b) in pairs if a == tor]
        if len(ups) != half or any(kinds[b] != NodeKind.AGGREGATION for b in ups):
            raise ValueError(f"tor {tor} must have exactly {half} aggregation uplinks")
    for agg in aggs:
        ups = [b for (a, b) in pairs if a == agg and kinds[b] == NodeKind.CORE]
        if len(ups) != half:
            raise ValueError(f"aggregation {agg} must have exactly {half} core uplinks")


def _cable(a: str, b: str, capacity: float) -> List[Link]:
    return [
        Link(id=link_id(a, b), source=a, target=b, capacity=capacity),
        Link(id=link_id(b, a), source=b, target=a, capacity=capacity),
    ]


def _assemble(flavor: Flavor, nodes: List[Node], links: List[Link]) -> Topology:
    try:
        return Topology(flavor=flavor, nodes=tuple(nodes), links=tuple(links))
    except ValidationError as e:
        logger.error(f"Invalid {flavor.value} topology: {str(e)}")
        raise TopologyError(f"Failed to assemble {flavor.value} topology: {str(e)}")


def _servers(node_id: str, count: int, capacity: float) -> Tuple[Server, ...]:
    return tuple(Server(id=f"{node_id}.srv{i}", capacity=capacity) for i in range(count))


def build_fat_tree(
    pods: int,
    servers_per_tor: int,
    server_capacity: float = DEFAULT_SERVER_CAPACITY,
    link_capacity: float = DEFAULT_LINK_CAPACITY,
) -> Topology:
    """Build a k-ary fat-tree with k = pods.

    Each pod holds k/2 TOR and k/2 aggregation switches; (k/2)^2 core switches
    are grouped so that aggregation switch j of every pod reaches cores
    ``core_j_*``. Servers attach logically to TOR switches.
    """
    if pods < 2 or pods % 2 != 0:
        raise ParameterError(f"fat-tree pod count must be an even integer >= 2, got {pods}")
    if servers_per_tor < 1:
        raise ParameterError(f"servers_per_tor must be >= 1, got {servers_per_tor}")
    if server_capacity <= 0 or link_capacity <= 0:
        raise ParameterError("capacities must be positive")

    half = pods // 2
    nodes: List[Node] = []
    links: List[Link] = []
    for j in range(half):
        for m in range(half):
            nodes.append(Node(id=f"core_{j}_{m}", kind=NodeKind.CORE))
    for p in range(pods):
        for j in range(half):
            agg = f"agg_p{p}_{j}"
            nodes.append(Node(id=agg, kind=NodeKind.AGGREGATION))
            for m in range(half):
                links.extend(_cable(agg, f"core_{j}_{m}", link_capacity))
        for i in range(half):
            tor = f"tor_p{p}_{i}"
            nodes.append(Node(id=tor, kind=NodeKind.TOR, servers=_servers(tor, servers_per_tor, server_capacity)))
            for j in range(half):
                links.extend(_cable(tor, f"agg_p{p}_{j}", link_capacity))

    topology = _assemble(Flavor.FAT_TREE, nodes, links)
    logger.info(
        f"Built fat-tree k={pods}: {len(topology.servers())} servers, "
        f"{len(nodes)} switches, {len(links)} directed links"
    )
    return topology


def build_leaf_spine(
    leaves: int,
    spines: int = DEFAULT_SPINES,
    servers_per_leaf: int = 4,
    server_capacity: float = DEFAULT_SERVER_CAPACITY,
    link_capacity: float = DEFAULT_LINK_CAPACITY,
) -> Topology:
    """Build a full bipartite leaf-spine fabric; servers attach to leaves."""
    if leaves < 2:
        raise ParameterError(f"leaf count must be >= 2, got {leaves}")
    if spines < 1 or servers_per_leaf < 1:
        raise ParameterError("spines and servers_per_leaf must be positive")
    if server_capacity <= 0 or link_capacity <= 0:
        raise ParameterError("capacities must be positive")

    nodes: List[Node] = []
    links: List[Link] = []
    for i in range(leaves):
        leaf = f"leaf_{i}"
        nodes.append(Node(id=leaf, kind=NodeKind.LEAF, servers=_servers(leaf, servers_per_leaf, server_capacity)))
    for j in range(spines):
        nodes.append(Node(id=f"spine_{j}", kind=NodeKind.SPINE))
    for i in range(leaves):
        for j in range(spines):
            links.extend(_cable(f"leaf_{i}", f"spine_{j}", link_capacity))

    topology = _assemble(Flavor.LEAF_SPINE, nodes, links)
    logger.info(
        f"Built leaf-spine {leaves}x{spines}: {len(topology.servers())} servers, "
        f"{len(links) // 2} cables"
    )
    return topology
