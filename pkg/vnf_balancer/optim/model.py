"""ILP instances for the initial placement and the migration / replication models.

Variables are addressed by a ``VarKey`` (kind plus integer indices) and rows carry
names such as ``eq14_s0_l2`` so that exported models and verifier reports can be
read back against the formulation.
"""
from collections import Counter
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple, Union
import logging

import numpy as np
from pydantic import BaseModel, ConfigDict, Field
from scipy import sparse

from ..exceptions import ModelError, ParameterError
from ..network.paths import EcmpCatalog, Path, RouteCatalog
from ..network.topology import Link, Server, Topology
from ..workload.chains import Workload
from .costs import CostFunctionSet
from .solution import Solution

logger = logging.getLogger(__name__)

BINARY_THRESHOLD = 0.5


class Method(str, Enum):
    MIGRATION = "mgr"
    REPLICATION = "rep"
    COMBINED = "mgr_rep"

    @classmethod
    def parse(cls, value: Union[str, "Method"]) -> "Method":
        try:
            return cls(value)
        except ValueError:
            raise ParameterError(f"Unknown method '{value}' (expected mgr, rep or mgr_rep)")

    @property
    def allows_replicas(self) -> bool:
        return self != Method.MIGRATION


class Routing(str, Enum):
    ECMP = "ecmp"
    SDN = "sdn"

    @classmethod
    def parse(cls, value: Union[str, "Routing"]) -> "Routing":
        try:
            return cls(value)
        except ValueError:
            raise ParameterError(f"Unknown routing '{value}' (expected ecmp or sdn)")


class MethodParams(BaseModel):
    model_config = ConfigDict(frozen=True)

    alpha: float = Field(ge=0, le=1, description="Weight of the migration cost")
    beta: float = Field(default=0.1, ge=0, description="Weight of the link cost")
    e_m: float = Field(default=1.0, ge=0, le=1, description="Migration penalty ratio (E_m)")
    e_r: float = Field(default=0.05, gt=0, description="Replication overhead ratio (E_r)")
    r_max: Optional[int] = Field(default=None, ge=0, description="Replicas per chain; None caps by servers")

    def for_method(self, method: Method) -> "MethodParams":
        if method == Method.MIGRATION:
            return self.model_copy(update={"r_max": 0})
        return self


@dataclass(frozen=True)
class VarKey:
    kind: str
    index: Tuple[int, ...]
    letters: str

    @property
    def name(self) -> str:
        return self.kind + "".join(f"_{c}{i}" for c, i in zip(self.letters, self.index))

    @classmethod
    def parse(cls, name: str) -> "VarKey":
        kind, *parts = name.split("_")
        try:
            return cls(kind=kind, index=tuple(int(p[1:]) for p in parts), letters="".join(p[0] for p in parts))
        except (ValueError, IndexError):
            raise ModelError(f"Malformed variable name '{name}'")


@dataclass
class Variable:
    key: VarKey
    lower: float = 0.0
    upper: Optional[float] = 1.0
    binary: bool = False

    @property
    def name(self) -> str:
        return self.key.name


@dataclass
class Constraint:
    name: str
    coefs: Dict[int, float]
    sense: str
    rhs: float

    @property
    def family(self) -> str:
        return self.name.split("_", 1)[0]


@dataclass
class Derivation:
    """How a non-decision variable follows from the others.

    ``equal`` solves one equality row for the variable; ``epigraph`` takes the
    smallest value above the variable's lower bound satisfying every listed row.
    """
    var: int
    rows: List[int]
    mode: str


@dataclass(frozen=True)
class RouteChoice:
    """One route option of a chain: the physical path used by each demand."""
    label: str
    paths: Tuple[Path, ...]


@dataclass
class ModelContext:
    topology: Topology
    workload: Workload
    servers: List[Tuple[str, Server]]
    links: List[Link]
    choices: List[List[RouteChoice]]
    routing: Routing
    method: Optional[Method] = None
    params: Optional[MethodParams] = None
    costs: Optional[CostFunctionSet] = None
    initial: Optional["InitialPlacement"] = None

    @property
    def is_initial(self) -> bool:
        return self.method is None

    @property
    def overhead(self) -> bool:
        return self.method is not None and self.method.allows_replicas

    @property
    def server_nodes(self) -> List[str]:
        return [node for node, _ in self.servers]

    def servers_at(self, node_id: str) -> List[int]:
        return [x for x, (node, _) in enumerate(self.servers) if node == node_id]


@dataclass
class ModelInstance:
    variables: List[Variable]
    constraints: List[Constraint]
    objective: Dict[int, float]
    metadata: Dict[str, Any] = field(default_factory=dict)
    derivations: List[Derivation] = field(default_factory=list)
    context: Optional[ModelContext] = field(default=None, repr=False)
    objective_constant: float = 0.0

    def __post_init__(self):
        self._index = {v.key: i for i, v in enumerate(self.variables)}
        self._matrix = None

    def position(self, key: VarKey) -> int:
        try:
            return self._index[key]
        except KeyError:
            raise ModelError(f"Unknown variable {key.name}")

    def has(self, key: VarKey) -> bool:
        return key in self._index

    def families(self) -> Counter:
        return Counter(c.family for c in self.constraints)

    def rows(self, family: str) -> List[Constraint]:
        return [c for c in self.constraints if c.family == family]

    @property
    def binary_mask(self) -> np.ndarray:
        return np.array([v.binary for v in self.variables], dtype=bool)

    @property
    def lower_bounds(self) -> np.ndarray:
        return np.array([v.lower for v in self.variables], dtype=float)

    @property
    def upper_bounds(self) -> np.ndarray:
        return np.array([np.inf if v.upper is None else v.upper for v in self.variables], dtype=float)

    @property
    def cost_vector(self) -> np.ndarray:
        c = np.zeros(len(self.variables))
        for i, coef in self.objective.items():
            c[i] = coef
        return c

    def matrix(self) -> Tuple[sparse.csr_matrix, np.ndarray, np.ndarray]:
        """Row matrix with per-row lower and upper activity limits."""
        if self._matrix is None:
            data, rows, cols = [], [], []
            lo = np.full(len(self.constraints), -np.inf)
            hi = np.full(len(self.constraints), np.inf)
            for r, con in enumerate(self.constraints):
                for j, a in con.coefs.items():
                    rows.append(r)
                    cols.append(j)
                    data.append(a)
                if con.sense in ("<=", "="):
                    hi[r] = con.rhs
                if con.sense in (">=", "="):
                    lo[r] = con.rhs
            a = sparse.csr_matrix(
                (data, (rows, cols)), shape=(len(self.constraints), len(self.variables))
            )
            self._matrix = (a, lo, hi)
        return self._matrix

    def objective_value(self, values: np.ndarray) -> float:
        return float(self.cost_vector @ values) + self.objective_constant


class _Builder:
    def __init__(self):
        self.variables: List[Variable] = []
        self.index: Dict[VarKey, int] = {}
        self.constraints: List[Constraint] = []
        self.derivations: List[Derivation] = []

    def var(self, kind: str, index: Tuple[int, ...], letters: str, lower=0.0, upper=1.0, binary=False) -> int:
        key = VarKey(kind=kind, index=index, letters=letters)
        if key in self.index:
            raise ModelError(f"Duplicate variable {key.name}")
        self.index[key] = len(self.variables)
        self.variables.append(Variable(key=key, lower=lower, upper=upper, binary=binary))
        return self.index[key]

    def row(self, family: str, labels: Iterable[Tuple[str, int]], terms: Iterable[Tuple[int, float]], sense: str, rhs: float) -> int:
        coefs: Dict[int, float] = {}
        for j, a in terms:
            coefs[j] = coefs.get(j, 0.0) + a
        name = family + "".join(f"_{c}{i}" for c, i in labels)
        self.constraints.append(Constraint(name=name, coefs=coefs, sense=sense, rhs=float(rhs)))
        return len(self.constraints) - 1

    def derive(self, var: int, rows: List[int], mode: str):
        self.derivations.append(Derivation(var=var, rows=rows, mode=mode))


@dataclass
class InitialPlacement:
    """F parameters: where every VNF and every demand's VNF instance sits initially."""
    placement: Dict[Tuple[int, int], int]
    usage: Dict[Tuple[int, int, int], int]
    routes: Dict[int, Path] = field(default_factory=dict)

    def __post_init__(self):
        for (s, v, l), x in self.usage.items():
            if self.placement.get((s, v)) != x:
                raise ModelError(f"demand {l} of chain {s} uses VNF {v} on server {x} outside its initial placement")

    def server(self, s: int, v: int) -> int:
        return self.placement[(s, v)]

    def is_placed(self, s: int, v: int, x: int) -> bool:
        return self.placement.get((s, v)) == x

    def vnf_nodes(self, s: int, chain_len: int, server_nodes: Sequence[str]) -> List[str]:
        return [server_nodes[self.placement[(s, v)]] for v in range(chain_len)]

    def initial_utilization(self, context: ModelContext, s: int, v: int) -> float:
        """u_v of the VNF at its initial server, from the fixed usage parameters."""
        chain = context.workload.chains[s]
        x0 = self.placement[(s, v)]
        capacity = context.servers[x0][1].capacity
        load = sum(
            d.bandwidth for l, d in enumerate(chain.demands) if self.usage.get((s, v, l)) == x0
        )
        return chain.vnfs[v].load_ratio * load / capacity

    @classmethod
    def from_solution(cls, solution: Solution) -> "InitialPlacement":
        model = solution.model
        context = model.context
        if solution.values is None or context is None:
            raise ModelError("initial placement needs a solved model with context")
        placement, usage, routes = {}, {}, {}
        for s, chain in enumerate(context.workload.chains):
            for c, choice in enumerate(context.choices[s]):
                if solution.value(_key("rs", (s, c), context)) > BINARY_THRESHOLD:
                    routes[s] = choice.paths[0]
            for v in range(len(chain.vnfs)):
                for x in range(len(context.servers)):
                    if solution.value(_key("f", (s, v, x), context)) > BINARY_THRESHOLD:
                        placement[(s, v)] = x
                    for l in range(len(chain.demands)):
                        if solution.value(_key("fd", (s, v, x, l), context)) > BINARY_THRESHOLD:
                            usage[(s, v, l)] = x
        return cls(placement=placement, usage=usage, routes=routes)

    def to_document(self, context: ModelContext) -> Dict[str, Any]:
        doc = {}
        for s, chain in enumerate(context.workload.chains):
            doc[chain.id] = {
                "vnfs": [context.servers[self.placement[(s, v)]][1].id for v in range(len(chain.vnfs))],
                "route": list(self.routes[s].nodes) if s in self.routes else None,
            }
        return doc


_LETTERS = {
    "rs": "s{r}", "rd": "sl{r}", "f": "svx", "fd": "svxl", "uv": "svx",
    "ux": "x", "ul": "e", "kx": "x", "kl": "e", "kv": "sv", "z": "x",
}


def _letters(kind: str, routing: Routing) -> str:
    return _LETTERS[kind].format(r="p" if routing == Routing.SDN else "i")


def _key(kind: str, index: Tuple[int, ...], context: ModelContext) -> VarKey:
    return VarKey(kind=kind, index=index, letters=_letters(kind, context.routing))


def var_key(kind: str, index: Tuple[int, ...], routing: Union[str, Routing] = Routing.SDN) -> VarKey:
    """Public helper to address a variable of a built model."""
    return VarKey(kind=kind, index=tuple(index), letters=_letters(kind, Routing.parse(routing)))


def _route_choices(catalog: Union[RouteCatalog, EcmpCatalog], workload: Workload, routing: Routing) -> List[List[RouteChoice]]:
    choices = []
    for chain in workload.chains:
        n = len(chain.demands)
        if routing == Routing.SDN:
            if not isinstance(catalog, RouteCatalog):
                raise ParameterError("SDN routing needs a route catalog")
            choices.append([
                RouteChoice(label=p.label(), paths=(p,) * n) for p in catalog.paths(chain.id)
            ])
        else:
            if not isinstance(catalog, EcmpCatalog):
                raise ParameterError("ECMP routing needs an ECMP subset catalog")
            subsets = catalog.subsets(chain.id)
            for subset in subsets:
                if len(subset.paths) != n:
                    raise ModelError(f"subset {subset.index} of chain {chain.id} has {len(subset.paths)} paths for {n} demands")
            choices.append([
                RouteChoice(label=f"subset{sub.index}", paths=sub.paths) for sub in subsets
            ])
    return choices


def _single_path_choices(catalog: RouteCatalog, workload: Workload) -> List[List[RouteChoice]]:
    if not isinstance(catalog, RouteCatalog):
        raise ParameterError("the initial placement model routes over a route catalog")
    return [
        [RouteChoice(label=p.label(), paths=(p,) * len(chain.demands)) for p in catalog.paths(chain.id)]
        for chain in workload.chains
    ]


def _add_chain_structure(b: _Builder, ctx: ModelContext, s: int, node_servers: Dict[str, List[int]]):
    """Routing cardinality, placement, ordering and per-VNF utilization rows of chain s."""
    chain = ctx.workload.chains[s]
    choices = ctx.choices[s]
    n_srv = len(ctx.servers)
    V, L, C = len(chain.vnfs), len(chain.demands), len(choices)
    if C == 0:
        raise ModelError(f"chain {chain.id} has no route choices")
    rl = _letters("rs", ctx.routing)[-1]

    rs = [b.var("rs", (s, c), _letters("rs", ctx.routing), binary=True) for c in range(C)]
    rd = [[b.var("rd", (s, l, c), _letters("rd", ctx.routing), binary=True) for c in range(C)] for l in range(L)]
    f = [[b.var("f", (s, v, x), "svx", binary=True) for x in range(n_srv)] for v in range(V)]
    fd = [[[b.var("fd", (s, v, x, l), "svxl", binary=True) for l in range(L)] for x in range(n_srv)] for v in range(V)]
    uv = [[b.var("uv", (s, v, x), "svx") for x in range(n_srv)] for v in range(V)]

    if ctx.is_initial or ctx.method == Method.MIGRATION:
        b.row("eq5", [("s", s)], [(j, 1.0) for j in rs], "=", 1.0)
        for v in range(V):
            b.row("single", [("s", s), ("v", v)], [(f[v][x], 1.0) for x in range(n_srv)], "=", 1.0)
    else:
        r_max = ctx.params.r_max if ctx.params.r_max is not None else n_srv
        b.row("eq6a", [("s", s)], [(j, 1.0) for j in rs], ">=", 1.0)
        b.row("eq6b", [("s", s)], [(j, 1.0) for j in rs], "<=", float(r_max + 1))
        for v, vnf in enumerate(chain.vnfs):
            r_v = 1.0 if vnf.replicable else 0.0
            terms = [(f[v][x], 1.0) for x in range(n_srv)] + [(j, -r_v) for j in rs]
            b.row("eq7", [("s", s), ("v", v)], terms, "<=", 1.0 - r_v)

    for l in range(L):
        b.row("eq14", [("s", s), ("l", l)], [(rd[l][c], 1.0) for c in range(C)], "=", 1.0)
        for c in range(C):
            b.row("eq15a", [("s", s), ("l", l), (rl, c)], [(rd[l][c], 1.0), (rs[c], -1.0)], "<=", 0.0)
    for c in range(C):
        b.row("eq15b", [("s", s), (rl, c)], [(rs[c], 1.0)] + [(rd[l][c], -1.0) for l in range(L)], "<=", 0.0)

    for l in range(L):
        for c, choice in enumerate(choices):
            path = choice.paths[l]
            positions = list(path.service_nodes)
            on_path = sorted({x for n in positions for x in node_servers.get(n, [])})
            for v in range(V):
                b.row(
                    "eq16", [("s", s), ("l", l), (rl, c), ("v", v)],
                    [(rd[l][c], 1.0)] + [(fd[v][x][l], -1.0) for x in on_path], "<=", 0.0,
                )
            prefix: List[int] = []
            for k, node in enumerate(positions[:-1]):
                for x in node_servers.get(node, []):
                    if x not in prefix:
                        prefix.append(x)
                if len(prefix) == len(on_path):
                    break
                for v in range(1, V):
                    terms = [(fd[v][x][l], 1.0) for x in prefix] + [(fd[v - 1][x][l], -1.0) for x in prefix]
                    b.row("eq19", [("s", s), ("l", l), (rl, c), ("v", v), ("k", k)], terms + [(rd[l][c], 1.0)], "<=", 1.0)

    for v, vnf in enumerate(chain.vnfs):
        for l in range(L):
            b.row("eq17", [("s", s), ("v", v), ("l", l)], [(fd[v][x][l], 1.0) for x in range(n_srv)], "=", 1.0)
        for x in range(n_srv):
            for l in range(L):
                b.row("eq18a", [("s", s), ("v", v), ("x", x), ("l", l)], [(fd[v][x][l], 1.0), (f[v][x], -1.0)], "<=", 0.0)
            b.row("eq18b", [("s", s), ("v", v), ("x", x)], [(f[v][x], 1.0)] + [(fd[v][x][l], -1.0) for l in range(L)], "<=", 0.0)
            capacity = ctx.servers[x][1].capacity
            terms = [(uv[v][x], 1.0)] + [
                (fd[v][x][l], -vnf.load_ratio * d.bandwidth / capacity) for l, d in enumerate(chain.demands)
            ]
            b.derive(uv[v][x], [b.row("eq11", [("s", s), ("v", v), ("x", x)], terms, "=", 0.0)], "equal")
    return rs, rd, f, uv


def _link_terms(ctx: ModelContext, rd_vars: List[List[List[int]]]) -> Dict[str, List[Tuple[int, float]]]:
    terms: Dict[str, List[Tuple[int, float]]] = {link.id: [] for link in ctx.links}
    for s, chain in enumerate(ctx.workload.chains):
        for l, demand in enumerate(chain.demands):
            for c, choice in enumerate(ctx.choices[s]):
                for link, count in Counter(choice.paths[l].links).items():
                    terms[link].append((rd_vars[s][l][c], demand.bandwidth * count))
    return terms


def _build(ctx: ModelContext) -> ModelInstance:
    b = _Builder()
    node_servers: Dict[str, List[int]] = {}
    for x, (node, _) in enumerate(ctx.servers):
        node_servers.setdefault(node, []).append(x)

    per_chain = [_add_chain_structure(b, ctx, s, node_servers) for s in range(len(ctx.workload.chains))]

    ux = [b.var("ux", (x,), "x") for x in range(len(ctx.servers))]
    ul = [b.var("ul", (e,), "e") for e in range(len(ctx.links))]
    e_r = ctx.params.e_r if ctx.params is not None else 0.0
    for x, (_, server) in enumerate(ctx.servers):
        terms = [(ux[x], 1.0)]
        for s, (_, _, f, uv) in enumerate(per_chain):
            for v in range(len(f)):
                if ctx.overhead:
                    terms.append((uv[v][x], -(1.0 + e_r)))
                    terms.append((f[v][x], -1.0 / (server.capacity * e_r)))
                else:
                    terms.append((uv[v][x], -1.0))
        b.derive(ux[x], [b.row("eq10", [("x", x)], terms, "=", 0.0)], "equal")

    rd_vars = [rd for (_, rd, _, _) in per_chain]
    link_terms = _link_terms(ctx, rd_vars)
    for e, link in enumerate(ctx.links):
        terms = [(ul[e], 1.0)] + [(j, -load / link.capacity) for j, load in link_terms[link.id]]
        b.derive(ul[e], [b.row("eq13", [("e", e)], terms, "=", 0.0)], "equal")

    objective: Dict[int, float] = {}
    if ctx.is_initial:
        z = [b.var("z", (x,), "x", binary=True) for x in range(len(ctx.servers))]
        used_rows: List[List[int]] = [[] for _ in ctx.servers]
        for s, (_, _, f, _) in enumerate(per_chain):
            for v in range(len(f)):
                for x in range(len(ctx.servers)):
                    used_rows[x].append(b.row("used", [("s", s), ("v", v), ("x", x)], [(z[x], 1.0), (f[v][x], -1.0)], ">=", 0.0))
        for x in range(len(ctx.servers)):
            b.derive(z[x], used_rows[x], "epigraph")
            objective[z[x]] = 1.0
    else:
        objective = _add_costs(b, ctx, per_chain, ux, ul)

    return ModelInstance(
        variables=b.variables,
        constraints=b.constraints,
        objective=objective,
        derivations=b.derivations,
        context=ctx,
        metadata={
            "kind": "initial" if ctx.is_initial else "main",
            "method": ctx.method.value if ctx.method else None,
            "routing": ctx.routing.value,
            **(ctx.params.model_dump() if ctx.params else {}),
        },
    )


def _add_costs(b: _Builder, ctx: ModelContext, per_chain, ux: List[int], ul: List[int]) -> Dict[int, float]:
    """Cost epigraphs, replication pinning and the weighted three-term objective."""
    params, segments = ctx.params, ctx.costs.segments
    kx = [b.var("kx", (x,), "x", upper=None) for x in range(len(ctx.servers))]
    kl = [b.var("kl", (e,), "e", upper=None) for e in range(len(ctx.links))]
    for x in range(len(ctx.servers)):
        rows = [
            b.row("eq8", [("x", x), ("y", y)], [(kx[x], 1.0), (ux[x], -seg.slope)], ">=", -seg.intercept)
            for y, seg in enumerate(segments)
        ]
        b.derive(kx[x], rows, "epigraph")
    for e in range(len(ctx.links)):
        rows = [
            b.row("eq9", [("e", e), ("y", y)], [(kl[e], 1.0), (ul[e], -seg.slope)], ">=", -seg.intercept)
            for y, seg in enumerate(segments)
        ]
        b.derive(kl[e], rows, "epigraph")

    kv = []
    for s, chain in enumerate(ctx.workload.chains):
        f = per_chain[s][2]
        for v in range(len(chain.vnfs)):
            k = b.var("kv", (s, v), "sv", upper=None)
            kv.append(k)
            x0 = ctx.initial.server(s, v)
            penalty = ctx.initial.initial_utilization(ctx, s, v) * params.e_m
            # k_v >= a*u0*E_m*(1 - f_x0) - b with F_x0 = 1
            rows = [
                b.row("eq2", [("s", s), ("v", v), ("y", y)], [(k, 1.0), (f[v][x0], seg.slope * penalty)], ">=", seg.slope * penalty - seg.intercept)
                for y, seg in enumerate(segments)
            ]
            b.derive(k, rows, "epigraph")
            if ctx.method == Method.REPLICATION:
                b.row("pin", [("s", s), ("v", v), ("x", x0)], [(f[v][x0], 1.0)], ">=", 1.0)

    objective: Dict[int, float] = {}
    weights = (
        (kv, params.alpha),
        (kx, 1.0 - params.alpha),
        (kl, params.beta),
    )
    for variables, weight in weights:
        if variables and weight:
            for j in variables:
                objective[j] = weight / len(variables)
    return objective


def _context(topology: Topology, workload: Workload, choices, routing: Routing, **kwargs) -> ModelContext:
    return ModelContext(
        topology=topology,
        workload=workload,
        servers=topology.servers(),
        links=list(topology.links),
        choices=choices,
        routing=routing,
        **kwargs,
    )


def build_initial_placement_model(
    topology: Topology,
    workload: Workload,
    catalog: RouteCatalog,
    routing: Union[str, Routing] = Routing.SDN,
) -> ModelInstance:
    """Minimise used servers with single-path routing and no replication overhead."""
    routing = Routing.parse(routing)
    ctx = _context(topology, workload, _single_path_choices(catalog, workload), routing)
    model = _build(ctx)
    logger.info(
        f"Initial placement model: {len(model.variables)} variables, {len(model.constraints)} rows"
    )
    return model


def build_main_model(
    topology: Topology,
    workload: Workload,
    catalog: Union[RouteCatalog, EcmpCatalog],
    initial: InitialPlacement,
    method: Union[str, Method],
    routing: Union[str, Routing],
    params: MethodParams,
    costs: CostFunctionSet,
) -> ModelInstance:
    method = Method.parse(method)
    routing = Routing.parse(routing)
    for s, chain in enumerate(workload.chains):
        for v in range(len(chain.vnfs)):
            if (s, v) not in initial.placement:
                raise ParameterError(f"initial placement misses VNF {v} of chain {chain.id}")
    ctx = _context(
        topology, workload, _route_choices(catalog, workload, routing), routing,
        method=method, params=params.for_method(method), costs=costs, initial=initial,
    )
    model = _build(ctx)
    logger.info(
        f"Main model {method.value}/{routing.value} alpha={params.alpha}: "
        f"{len(model.variables)} variables, {len(model.constraints)} rows"
    )
    return model


def complete_assignment(model: ModelInstance, values: np.ndarray) -> np.ndarray:
    """Fill every derived variable from the decision binaries.

    Utilizations come from their defining equalities and costs take the
    smallest value satisfying their epigraph rows, which is the optimum for
    fixed binaries.
    """
    out = np.array(values, dtype=float, copy=True)
    for d in model.derivations:
        var = model.variables[d.var]
        if d.mode == "equal":
            con = model.constraints[d.rows[0]]
            rest = sum(a * out[j] for j, a in con.coefs.items() if j != d.var)
            out[d.var] = (con.rhs - rest) / con.coefs[d.var]
        else:
            best = var.lower
            for r in d.rows:
                con = model.constraints[r]
                rest = sum(a * out[j] for j, a in con.coefs.items() if j != d.var)
                best = max(best, (con.rhs - rest) / con.coefs[d.var])
            out[d.var] = best
    return out


def _values_of(solution: Solution, kind: str):
    model = solution.model
    for i, var in enumerate(model.variables):
        if var.key.kind == kind:
            yield var.key.index, float(solution.values[i])


def count_migrations(initial: InitialPlacement, solution: Solution) -> int:
    """Sum of F_x * (1 - f_x) over all chains and VNFs."""
    if solution.values is None:
        return 0
    placed = {idx for idx, val in _values_of(solution, "f") if val > BINARY_THRESHOLD}
    return sum(1 for (s, v), x in initial.placement.items() if (s, v, x) not in placed)


def count_replicas(solution: Solution) -> int:
    if solution.values is None:
        return 0
    instances: Counter = Counter()
    for (s, v, _), val in _values_of(solution, "f"):
        if val > BINARY_THRESHOLD:
            instances[(s, v)] += 1
    return sum(max(0, n - 1) for n in instances.values())


def cost_terms(model: ModelInstance, values: np.ndarray) -> Dict[str, float]:
    """Weighted migration, server and link contributions to the objective."""
    terms = {"migration": 0.0, "server": 0.0, "link": 0.0}
    names = {"kv": "migration", "kx": "server", "kl": "link"}
    for j, coef in model.objective.items():
        kind = model.variables[j].key.kind
        if kind in names:
            terms[names[kind]] += coef * float(values[j])
    return terms
