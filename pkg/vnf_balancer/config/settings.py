"""Configuration management for VNF balancer experiments."""
from enum import Enum
from pathlib import Path
from typing import Annotated, Any, Dict, List, Literal, Optional, Tuple, Union
import logging

import yaml
from pydantic import BaseModel, Field, ValidationError, field_validator, model_validator
from pydantic_settings import BaseSettings, SettingsConfigDict

from ..exceptions import ConfigurationError, ParameterError
from ..network.paths import DEFAULT_MAX_PATHS
from ..network.topology import DEFAULT_LINK_CAPACITY, DEFAULT_SERVER_CAPACITY, Flavor
from ..optim.costs import (
    DEFAULT_SEGMENTS,
    DEFAULT_STEEPNESS,
    CostFunctionSet,
    from_pairs,
    make_exponential_approx,
)
from ..optim.model import Method, MethodParams, Routing
from ..optim.solution import SolveBudget
from ..workload.chains import (
    FAT_TREE_SFC,
    LEAF_SPINE_SFC,
    CountInterval,
    Interval,
    VnfType,
)

logger = logging.getLogger(__name__)

PRESETS_DIR = Path("config/presets")
PACKAGE_ROOT = Path(__file__).resolve().parents[2]

Alpha = Annotated[float, Field(ge=0, le=1)]


class Scenario(str, Enum):
    ECMP_FAT_TREE = "ecmp_fat_tree"
    SDN_LEAF_SPINE = "sdn_leaf_spine"

    @property
    def routing(self) -> Routing:
        return Routing.ECMP if self == Scenario.ECMP_FAT_TREE else Routing.SDN

    @property
    def flavor(self) -> Flavor:
        return Flavor.FAT_TREE if self == Scenario.ECMP_FAT_TREE else Flavor.LEAF_SPINE


class Backend(str, Enum):
    EXACT = "exact"
    HEURISTIC = "heuristic"


class TopologyConfig(BaseModel):
    """Topology configuration settings."""
    flavor: Optional[Flavor] = Field(default=None, description="Defaults to the scenario's fabric")
    pods: int = Field(default=4, description="Fat-tree pod count k")
    servers_per_tor: int = Field(default=4, ge=1, description="Servers attached to every TOR switch")
    leaves: int = Field(default=4, ge=2, description="Leaf switch count")
    spines: int = Field(default=4, ge=1, description="Spine switch count")
    servers_per_leaf: int = Field(default=4, ge=1, description="Servers attached to every leaf")
    server_capacity: float = Field(default=DEFAULT_SERVER_CAPACITY, gt=0, description="Compute units per server")
    link_capacity: float = Field(default=DEFAULT_LINK_CAPACITY, gt=0, description="Gbps per directed link")

    @field_validator("pods")
    @classmethod
    def _even_pods(cls, value: int) -> int:
        if value < 2 or value % 2:
            raise ValueError(f"pod count must be an even integer >= 2, got {value}")
        return value


class WorkloadConfig(BaseModel):
    """Workload configuration settings; unset fields take the scenario defaults."""
    pairs: Union[Literal["all", "sampled"], List[Tuple[str, str]]] = Field(
        default="sampled",
        description="Fat-tree source/destination TOR pairs: all, sampled or an explicit list",
    )
    num_sampled_pairs: int = Field(default=4, ge=1, description="Pairs drawn when pairs is 'sampled'")
    demands_per_chain: Optional[CountInterval] = Field(default=None, description="Demands drawn per chain")
    bandwidth: Optional[Interval] = Field(default=None, description="Gbps per demand")
    chains_per_direction: int = Field(default=3, ge=1, description="Leaf-spine chains in each direction")
    sfc: Optional[List[VnfType]] = Field(default=None, min_length=1, description="VNF types in chain order")

    def demands_for(self, scenario: Scenario) -> CountInterval:
        if self.demands_per_chain is not None:
            return self.demands_per_chain
        low, high = (10, 20) if scenario == Scenario.ECMP_FAT_TREE else (6, 12)
        return CountInterval(low=low, high=high)

    def bandwidth_for(self, scenario: Scenario) -> Interval:
        if self.bandwidth is not None:
            return self.bandwidth
        low, high = (1.0, 30.0) if scenario == Scenario.ECMP_FAT_TREE else (70.0, 110.0)
        return Interval(low=low, high=high)

    def sfc_for(self, scenario: Scenario) -> Tuple[VnfType, ...]:
        if self.sfc is not None:
            return tuple(self.sfc)
        return FAT_TREE_SFC if scenario == Scenario.ECMP_FAT_TREE else LEAF_SPINE_SFC


class ModelConfig(BaseModel):
    """Model parameters shared by every (method, alpha) cell."""
    beta: float = Field(default=0.1, ge=0, description="Weight of the link cost")
    e_m: float = Field(default=1.0, ge=0, le=1, description="Migration penalty ratio")
    e_r: float = Field(default=0.05, gt=0, description="Replication overhead ratio")
    r_max: Optional[int] = Field(default=None, ge=0, description="Replicas per chain; unset caps by server count")
    max_intermediate: Optional[int] = Field(default=None, ge=0, description="Intermediate service nodes per route")
    max_paths_per_chain: int = Field(default=DEFAULT_MAX_PATHS, ge=1, description="SDN catalog size cap per chain")

    def method_params(self, alpha: float) -> MethodParams:
        return MethodParams(alpha=alpha, beta=self.beta, e_m=self.e_m, e_r=self.e_r, r_max=self.r_max)


class CostConfig(BaseModel):
    """Piecewise-linear cost: explicit (slope, intercept) segments or an exponential fit."""
    segments: Optional[List[Tuple[float, float]]] = Field(default=None, description="Explicit segments")
    num_segments: int = Field(default=DEFAULT_SEGMENTS, ge=1, description="Segments of the exponential fit")
    steepness: float = Field(default=DEFAULT_STEEPNESS, gt=0, description="Exponent of the fitted curve")

    @model_validator(mode="after")
    def _buildable(self) -> "CostConfig":
        self.build()
        return self

    def build(self) -> CostFunctionSet:
        try:
            if self.segments:
                return from_pairs(self.segments)
            return make_exponential_approx(self.num_segments, self.steepness)
        except (ValidationError, ParameterError) as e:
            raise ValueError(f"invalid cost function: {str(e)}")


class SolverConfig(BaseModel):
    """Solver configuration settings."""
    backend: Backend = Field(default=Backend.EXACT, description="Backend for the (method, alpha) cells")
    initial_backend: Optional[Backend] = Field(default=None, description="Backend for the initial placement")
    max_wall_time: Optional[float] = Field(default=None, gt=0, description="Seconds per solver call")
    max_nodes: Optional[int] = Field(default=100000, gt=0, description="Branch-and-bound node limit")
    max_iterations: int = Field(default=5000, ge=0, description="Local-search moves per restart")
    gap: float = Field(default=1e-9, ge=0, description="Relative optimality gap")
    restarts: int = Field(default=1, ge=1, description="Local-search restarts")
    annealing: bool = Field(default=False, description="Simulated-annealing acceptance")
    initial_temperature: float = Field(default=0.05, ge=0, description="Annealing start temperature")
    cooling: float = Field(default=0.995, gt=0, le=1, description="Geometric cooling factor")
    warm_start: bool = Field(default=True, description="Seed branch-and-bound with a heuristic incumbent")
    workers: int = Field(default=1, ge=1, description="Cells solved in parallel")

    def budget(self) -> SolveBudget:
        return SolveBudget(
            max_wall_time=self.max_wall_time,
            max_nodes=self.max_nodes,
            max_iterations=self.max_iterations,
            gap=self.gap,
        )


class LoggingConfig(BaseModel):
    """Logging configuration settings."""
    level: str = Field(default="INFO", description="Logging level")
    file: Optional[str] = Field(default=None, description="Log file path")
    format: str = Field(
        default="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
        description="Log format string"
    )


class OutputConfig(BaseModel):
    """Output configuration settings."""
    directory: str = Field(default="results", description="Directory receiving every report")
    store_inputs: bool = Field(default=True, description="Also write topology, workload and placement documents")


class ExperimentConfig(BaseSettings):
    """Main experiment settings."""
    model_config = SettingsConfigDict(env_prefix="VNFBAL_", env_nested_delimiter="__", populate_by_name=True)

    name: Optional[str] = Field(default=None, description="Preset or experiment name")
    scenario: Scenario = Field(default=Scenario.ECMP_FAT_TREE, description="Topology and routing setup")
    seed: int = Field(default=0, ge=0, description="Master seed")
    methods: List[Method] = Field(default_factory=lambda: list(Method), min_length=1)
    alphas: List[Alpha] = Field(default_factory=lambda: [0.1, 0.5, 0.9], min_length=1)
    topology: TopologyConfig = Field(default_factory=TopologyConfig)
    workload: WorkloadConfig = Field(default_factory=WorkloadConfig)
    model: ModelConfig = Field(default_factory=ModelConfig)
    cost: CostConfig = Field(default_factory=CostConfig)
    solver: SolverConfig = Field(default_factory=SolverConfig)
    logging: LoggingConfig = Field(default_factory=LoggingConfig)
    output: OutputConfig = Field(default_factory=OutputConfig)

    @property
    def routing(self) -> Routing:
        return self.scenario.routing

    @property
    def cells(self) -> List[Tuple[Method, float]]:
        return [(m, a) for m in self.methods for a in self.alphas]

    @classmethod
    def load_from_file(cls, config_path: Union[str, Path]) -> "ExperimentConfig":
        """Load settings from a YAML file or a bundled preset name."""
        path = resolve_config_path(config_path)
        data = read_document(path)
        diagnostics = validate_config(data)
        if diagnostics:
            for d in diagnostics:
                logger.error(f"Invalid configuration: {d}")
            raise ConfigurationError(
                f"Invalid configuration {path}: " + "; ".join(str(d) for d in diagnostics)
            )
        return cls(**data)


class Diagnostic(BaseModel):
    field: str
    reason: str

    def __str__(self) -> str:
        return f"{self.field}: {self.reason}"


def resolve_config_path(name_or_path: Union[str, Path]) -> Path:
    """A file path as given, else a preset under ``config/presets`` (working dir first)."""
    path = Path(name_or_path)
    if path.is_file():
        return path
    stem = path.name if path.suffix else f"{path.name}.yaml"
    for root in (Path.cwd(), PACKAGE_ROOT):
        candidate = root / PRESETS_DIR / stem
        if candidate.is_file():
            return candidate
    logger.error(f"Config file not found at {name_or_path}")
    raise ConfigurationError(f"No config file or preset named '{name_or_path}'")


def read_document(path: Path) -> Dict[str, Any]:
    try:
        with open(path) as f:
            data = yaml.safe_load(f) or {}
    except (OSError, yaml.YAMLError) as e:
        logger.error(f"Error loading config: {str(e)}")
        raise ConfigurationError(f"Failed to load configuration: {str(e)}")
    if not isinstance(data, dict):
        raise ConfigurationError(f"Configuration {path} must be a mapping, got {type(data).__name__}")
    return data


def _field(loc: Tuple[Any, ...]) -> str:
    return ".".join(str(part) for part in loc) or "config"


def _cross_checks(config: ExperimentConfig) -> List[Diagnostic]:
    found: List[Diagnostic] = []
    topo = config.topology
    if topo.flavor is not None and topo.flavor != config.scenario.flavor:
        found.append(Diagnostic(
            field="topology.flavor",
            reason=f"{topo.flavor.value} does not match scenario {config.scenario.value}",
        ))
    if len(set(config.methods)) != len(config.methods):
        found.append(Diagnostic(field="methods", reason="methods must not repeat"))
    if len(set(config.alphas)) != len(config.alphas):
        found.append(Diagnostic(field="alphas", reason="alphas must not repeat"))
    if config.scenario == Scenario.ECMP_FAT_TREE:
        tors = topo.pods * (topo.pods // 2)
        if config.workload.pairs == "sampled" and config.workload.num_sampled_pairs > tors * (tors - 1):
            found.append(Diagnostic(
                field="workload.num_sampled_pairs",
                reason=f"only {tors * (tors - 1)} ordered TOR pairs exist for {topo.pods} pods",
            ))
    elif config.workload.pairs not in ("all", "sampled"):
        found.append(Diagnostic(field="workload.pairs", reason="explicit pairs apply to the fat-tree scenario only"))
    return found


def validate_config(data: Dict[str, Any]) -> List[Diagnostic]:
    """Every violated field with its reason; empty when the document is valid."""
    try:
        config = ExperimentConfig(**data)
    except ValidationError as e:
        return [Diagnostic(field=_field(err["loc"]), reason=err["msg"]) for err in e.errors()]
    return _cross_checks(config)
