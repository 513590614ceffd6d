"""VNF types, service chains, traffic demands and the seeded experiment workloads."""
from itertools import permutations
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union
import logging

import numpy as np
import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from ..exceptions import ConfigurationError, ParameterError
from ..network.topology import NodeKind, Topology

logger = logging.getLogger(__name__)

BANDWIDTH_GRANULARITY = 0.1

PairSelection = Union[str, Sequence[Tuple[str, str]]]


class VnfType(BaseModel):
    """A VNF type with its load ratio (L_v) and replicability (R_v)."""
    model_config = ConfigDict(frozen=True)

    name: str
    load_ratio: float = Field(gt=0, description="Compute units per Gbps of processed traffic")
    replicable: bool = Field(default=False, description="Whether replicas may be instantiated")


class TrafficDemand(BaseModel):
    """One flow of a service chain."""
    model_config = ConfigDict(frozen=True)

    id: str
    bandwidth: float = Field(gt=0, description="Gbps")


class ServiceChain(BaseModel):
    """An ordered VNF sequence between two service nodes with its demands."""
    model_config = ConfigDict(frozen=True)

    id: str
    source_node: str
    dest_node: str
    vnfs: Tuple[VnfType, ...] = Field(min_length=1)
    demands: Tuple[TrafficDemand, ...] = Field(min_length=1)
    allow_loop: bool = Field(default=False, description="Permit source == destination")

    @model_validator(mode="after")
    def _check_endpoints(self) -> "ServiceChain":
        if self.source_node == self.dest_node and not self.allow_loop:
            raise ValueError(f"chain {self.id} has identical source and destination")
        return self

    @property
    def total_bandwidth(self) -> float:
        return sum(d.bandwidth for d in self.demands)


class Workload(BaseModel):
    """All service chains of an experiment."""
    model_config = ConfigDict(frozen=True)

    chains: Tuple[ServiceChain, ...] = ()
    rng_seed: int = 0

    @model_validator(mode="after")
    def _unique_ids(self) -> "Workload":
        ids = [c.id for c in self.chains]
        if len(set(ids)) != len(ids):
            raise ValueError("chain ids must be unique")
        return self

    @property
    def vnf_count(self) -> int:
        return sum(len(c.vnfs) for c in self.chains)

    def to_document(self) -> Dict[str, Any]:
        return self.model_dump(mode="json")


def _pair_to_dict(data: Any) -> Any:
    if isinstance(data, (list, tuple)) and len(data) == 2:
        return {"low": data[0], "high": data[1]}
    return data


class Interval(BaseModel):
    """Closed real interval [low, high] with positive bounds."""
    model_config = ConfigDict(frozen=True)

    low: float = Field(gt=0)
    high: float = Field(gt=0)

    @model_validator(mode="before")
    @classmethod
    def _from_pair(cls, data: Any) -> Any:
        return _pair_to_dict(data)

    @model_validator(mode="after")
    def _ordered(self) -> "Interval":
        if self.low > self.high:
            raise ValueError(f"interval low {self.low} exceeds high {self.high}")
        return self


class CountInterval(BaseModel):
    """Closed integer interval [low, high] with positive bounds."""
    model_config = ConfigDict(frozen=True)

    low: int = Field(ge=1)
    high: int = Field(ge=1)

    @model_validator(mode="before")
    @classmethod
    def _from_pair(cls, data: Any) -> Any:
        return _pair_to_dict(data)

    @model_validator(mode="after")
    def _ordered(self) -> "CountInterval":
        if self.low > self.high:
            raise ValueError(f"interval low {self.low} exceeds high {self.high}")
        return self


FAT_TREE_SFC: Tuple[VnfType, ...] = (
    VnfType(name="vnf1", load_ratio=0.2),
    VnfType(name="vnf2", load_ratio=1.0, replicable=True),
    VnfType(name="vnf3", load_ratio=0.2),
)

LEAF_SPINE_SFC: Tuple[VnfType, ...] = (
    VnfType(name="vnf1", load_ratio=0.4),
    VnfType(name="vnf2", load_ratio=0.9, replicable=True),
    VnfType(name="vnf3", load_ratio=0.4),
)


def _coerce(kind, value):
    if isinstance(value, kind):
        return value
    try:
        if isinstance(value, dict):
            return kind(**value)
        low, high = value
        return kind(low=low, high=high)
    except (ValidationError, TypeError, ValueError) as e:
        raise ParameterError(f"Invalid interval {value!r}: {str(e)}")


def _draw_bandwidths(rng: np.random.Generator, bandwidth: Interval, count: int) -> List[float]:
    raw = rng.uniform(bandwidth.low, bandwidth.high, size=count)
    values = []
    for value in raw:
        rounded = round(round(float(value) / BANDWIDTH_GRANULARITY) * BANDWIDTH_GRANULARITY, 1)
        values.append(min(max(rounded, bandwidth.low), bandwidth.high))
    return values


def _make_chain(
    rng: np.random.Generator,
    chain_id: str,
    source: str,
    dest: str,
    sfc: Sequence[VnfType],
    demands: CountInterval,
    bandwidth: Interval,
) -> ServiceChain:
    count = int(rng.integers(demands.low, demands.high + 1))
    flows = tuple(
        TrafficDemand(id=f"{chain_id}.d{j}", bandwidth=bw)
        for j, bw in enumerate(_draw_bandwidths(rng, bandwidth, count))
    )
    return ServiceChain(
        id=chain_id, source_node=source, dest_node=dest, vnfs=tuple(sfc), demands=flows,
        allow_loop=source == dest,
    )


def select_pairs(
    topology: Topology,
    pairs: PairSelection,
    rng: np.random.Generator,
    num_sampled_pairs: int = 4,
) -> List[Tuple[str, str]]:
    """Resolve a pair selection: "all" ordered TOR pairs, "sampled" ones, or an explicit list."""
    tors = [n.id for n in topology.nodes_of_kind(NodeKind.TOR)] or [n.id for n in topology.service_nodes()]
    every = list(permutations(tors, 2))
    if isinstance(pairs, str):
        if pairs == "all":
            return every
        if pairs == "sampled":
            size = min(num_sampled_pairs, len(every))
            picked = sorted(int(i) for i in rng.choice(len(every), size=size, replace=False))
            return [every[i] for i in picked]
        raise ParameterError(f"Unknown pair selection '{pairs}'")
    service = {n.id for n in topology.service_nodes()}
    for src, dst in pairs:
        if src not in service or dst not in service:
            raise ParameterError(f"pair ({src}, {dst}) is not between service nodes")
    return [(src, dst) for src, dst in pairs]


def generate_fat_tree_workload(
    topology: Topology,
    pairs: PairSelection = "sampled",
    demands_per_pair: Union[CountInterval, Tuple[int, int]] = (10, 20),
    bandwidth: Union[Interval, Tuple[float, float]] = (1.0, 30.0),
    sfc: Sequence[VnfType] = FAT_TREE_SFC,
    rng_seed: int = 0,
    num_sampled_pairs: int = 4,
) -> Workload:
    """One chain per selected source-destination pair with uniformly drawn demands."""
    demands = _coerce(CountInterval, demands_per_pair)
    bandwidth = _coerce(Interval, bandwidth)
    rng = np.random.default_rng(rng_seed)
    selected = select_pairs(topology, pairs, rng, num_sampled_pairs)
    chains = [
        _make_chain(rng, f"sfc{i}", src, dst, sfc, demands, bandwidth)
        for i, (src, dst) in enumerate(selected)
    ]
    workload = Workload(chains=tuple(chains), rng_seed=rng_seed)
    logger.info(
        f"Generated fat-tree workload: {len(chains)} chains, "
        f"{sum(len(c.demands) for c in chains)} demands"
    )
    return workload


def generate_leaf_spine_workload(
    topology: Topology,
    chains_per_direction: int = 3,
    demands_per_chain: Union[CountInterval, Tuple[int, int]] = (6, 12),
    bandwidth: Union[Interval, Tuple[float, float]] = (70.0, 110.0),
    sfc: Sequence[VnfType] = LEAF_SPINE_SFC,
    rng_seed: int = 0,
) -> Workload:
    """Chains from the first leaf to the last leaf and vice versa."""
    if chains_per_direction < 0:
        raise ParameterError(f"chains_per_direction must be >= 0, got {chains_per_direction}")
    demands = _coerce(CountInterval, demands_per_chain)
    bandwidth = _coerce(Interval, bandwidth)
    leaves = [n.id for n in topology.nodes_of_kind(NodeKind.LEAF)]
    if len(leaves) < 2:
        raise ParameterError("leaf-spine workload needs at least two leaves")
    rng = np.random.default_rng(rng_seed)
    first, last = leaves[0], leaves[-1]
    chains: List[ServiceChain] = []
    for src, dst in ((first, last), (last, first)):
        for _ in range(chains_per_direction):
            chains.append(_make_chain(rng, f"sfc{len(chains)}", src, dst, sfc, demands, bandwidth))
    workload = Workload(chains=tuple(chains), rng_seed=rng_seed)
    logger.info(
        f"Generated leaf-spine workload: {len(chains)} chains, "
        f"{sum(len(c.demands) for c in chains)} demands"
    )
    return workload


def store_workload(workload: Workload, path: Path):
    """Write a workload as YAML so an experiment can be replayed."""
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as f:
        yaml.safe_dump(workload.to_document(), f, sort_keys=False)


def load_workload(path: Path) -> Workload:
    try:
        with open(path) as f:
            data = yaml.safe_load(f) or {}
        return Workload(**data)
    except (OSError, ValidationError, yaml.YAMLError) as e:
        logger.error(f"Error loading workload from {path}: {str(e)}")
        raise ConfigurationError(f"Failed to load workload {path}: {str(e)}")
