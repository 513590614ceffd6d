"""Seeded local search (optionally simulated annealing) over routes and VNF instances.

The search state keeps, per chain, the route choice of every demand and the
server hosting each VNF for every demand. Every move touches one chain;
structural rules are enforced exactly while capacity overload is penalised,
so the search can walk out of an overloaded start.
"""
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple
import logging
import math
import time

import numpy as np

from ..exceptions import SolverError
from ..network.paths import Path
from ..utils import derive_seed
from .costs import envelope
from .model import Method, ModelInstance, complete_assignment, var_key
from .solution import Solution, SolveBudget, SolverStats, SolveStatus, with_solver_error_handling
from .verify import verify

logger = logging.getLogger(__name__)

OVERLOAD_PENALTY = 1000.0
CAPACITY_TOLERANCE = 1e-9


@dataclass
class _ChainState:
    route: List[int]
    inst: List[List[int]]

    def copy(self) -> "_ChainState":
        return _ChainState(route=list(self.route), inst=[list(row) for row in self.inst])


@dataclass
class _Loads:
    server: np.ndarray
    link: np.ndarray
    hosted: np.ndarray
    migration: float


class _Search:
    def __init__(self, model: ModelInstance):
        ctx = model.context
        if ctx is None:
            raise SolverError("the heuristic needs a model built with its context")
        self.model = model
        self.ctx = ctx
        self.chains = ctx.workload.chains
        self.node_of = ctx.server_nodes
        self.capacity = np.array([srv.capacity for _, srv in ctx.servers])
        self.link_index = {link.id: e for e, link in enumerate(ctx.links)}
        self.link_capacity = np.array([link.capacity for link in ctx.links])
        self.servers_at: Dict[str, List[int]] = {}
        for x, node in enumerate(self.node_of):
            self.servers_at.setdefault(node, []).append(x)
        self._positions: Dict[Tuple[str, ...], Dict[str, int]] = {}
        self._link_terms: Dict[Tuple[str, ...], List[Tuple[int, float]]] = {}

        self.single = ctx.is_initial or ctx.method == Method.MIGRATION
        self.pinned = ctx.method == Method.REPLICATION
        self.overhead = ctx.overhead
        self.e_r = ctx.params.e_r if ctx.params is not None else 0.0
        if ctx.is_initial:
            self.r_max = 0
        else:
            self.r_max = ctx.params.r_max if ctx.params.r_max is not None else len(ctx.servers)

        n_vnfs = sum(len(c.vnfs) for c in self.chains)
        if ctx.is_initial:
            self.weights = (0.0, 0.0, 0.0)
            self.migration_cost: List[List[float]] = [[0.0] * len(c.vnfs) for c in self.chains]
        else:
            p = ctx.params
            self.weights = (
                p.alpha / n_vnfs if n_vnfs else 0.0,
                (1.0 - p.alpha) / len(ctx.servers) if ctx.servers else 0.0,
                p.beta / len(ctx.links) if ctx.links else 0.0,
            )
            self.migration_cost = [
                [
                    float(envelope(ctx.costs, [ctx.initial.initial_utilization(ctx, s, v) * p.e_m])[0])
                    for v in range(len(chain.vnfs))
                ]
                for s, chain in enumerate(self.chains)
            ]

    def positions(self, path: Path) -> Dict[str, int]:
        if path.nodes not in self._positions:
            pos: Dict[str, int] = {}
            for k, node in enumerate(path.service_nodes):
                pos.setdefault(node, k)
            self._positions[path.nodes] = pos
        return self._positions[path.nodes]

    def link_terms(self, path: Path) -> List[Tuple[int, float]]:
        if path.nodes not in self._link_terms:
            terms: Dict[int, float] = {}
            for link in path.links:
                e = self.link_index[link]
                terms[e] = terms.get(e, 0.0) + 1.0 / self.link_capacity[e]
            self._link_terms[path.nodes] = sorted(terms.items())
        return self._link_terms[path.nodes]

    def path(self, s: int, c: int, l: int) -> Path:
        return self.ctx.choices[s][c].paths[l]

    def loads(self, s: int, st: _ChainState) -> _Loads:
        chain = self.chains[s]
        server = np.zeros(len(self.capacity))
        link = np.zeros(len(self.link_capacity))
        hosted = np.zeros(len(self.capacity))
        migration = 0.0
        for v, vnf in enumerate(chain.vnfs):
            factor = (1.0 + self.e_r) if self.overhead else 1.0
            for l, x in enumerate(st.inst[v]):
                server[x] += factor * vnf.load_ratio * chain.demands[l].bandwidth / self.capacity[x]
            instances = set(st.inst[v])
            for x in instances:
                hosted[x] += 1
                if self.overhead:
                    server[x] += 1.0 / (self.capacity[x] * self.e_r)
            if not self.ctx.is_initial and self.ctx.initial.server(s, v) not in instances:
                migration += self.migration_cost[s][v]
        for l, c in enumerate(st.route):
            bandwidth = chain.demands[l].bandwidth
            for e, coef in self.link_terms(self.path(s, c, l)):
                link[e] += bandwidth * coef
        return _Loads(server, link, hosted, migration)

    def score(self, server: np.ndarray, link: np.ndarray, hosted: np.ndarray, migration: float) -> Tuple[float, float]:
        """(objective, overload) for aggregate loads."""
        overload = float(
            np.clip(server - 1.0, 0.0, None).sum() + np.clip(link - 1.0, 0.0, None).sum()
        )
        if self.ctx.is_initial:
            return float(np.count_nonzero(hosted)), overload
        w_v, w_x, w_l = self.weights
        objective = w_v * migration
        if w_x:
            objective += w_x * float(envelope(self.ctx.costs, server).sum())
        if w_l:
            objective += w_l * float(envelope(self.ctx.costs, link).sum())
        return objective, overload

    def structurally_ok(self, s: int, st: _ChainState) -> bool:
        chain = self.chains[s]
        for l, c in enumerate(st.route):
            pos = self.positions(self.path(s, c, l))
            previous = -1
            for v in range(len(chain.vnfs)):
                k = pos.get(self.node_of[st.inst[v][l]])
                if k is None or k < previous:
                    return False
                previous = k
        routes = len(set(st.route))
        if self.single:
            return routes == 1 and all(len(set(row)) == 1 for row in st.inst)
        if routes > self.r_max + 1:
            return False
        for v, vnf in enumerate(chain.vnfs):
            instances = set(st.inst[v])
            if len(instances) > (routes if vnf.replicable else 1):
                return False
            if self.pinned and self.ctx.initial.server(s, v) not in instances:
                return False
        return True

    def valid_servers(self, s: int, st: _ChainState, v: int, demands: Sequence[int]) -> List[int]:
        """Servers that keep the chain order for every demand in ``demands``."""
        chain = self.chains[s]
        allowed: Optional[set] = None
        for l in demands:
            pos = self.positions(self.path(s, st.route[l], l))
            low = pos.get(self.node_of[st.inst[v - 1][l]], -1) if v > 0 else -1
            high = pos.get(self.node_of[st.inst[v + 1][l]], math.inf) if v + 1 < len(chain.vnfs) else math.inf
            ok = {x for node, k in pos.items() if low <= k <= high for x in self.servers_at.get(node, [])}
            allowed = ok if allowed is None else allowed & ok
        return sorted(allowed or ())

    def repair(self, s: int, st: _ChainState, demands: Sequence[int], rng: np.random.Generator) -> bool:
        """Re-seat every VNF of ``demands`` on their (new) paths, one shared server per VNF."""
        chain = self.chains[s]
        for v in range(len(chain.vnfs)):
            lows = []
            for l in demands:
                pos = self.positions(self.path(s, st.route[l], l))
                lows.append((pos, pos.get(self.node_of[st.inst[v - 1][l]], -1) if v > 0 else -1))
            ok = None
            for pos, low in lows:
                here = {x for node, k in pos.items() if k >= low for x in self.servers_at.get(node, [])}
                ok = here if ok is None else ok & here
            ok = sorted(ok or ())
            if not ok:
                return False
            current = {st.inst[v][l] for l in demands}
            if len(current) == 1 and next(iter(current)) in ok:
                continue
            existing = sorted(set(st.inst[v]) & set(ok))
            pool = existing if existing else ok
            target = pool[int(rng.integers(len(pool)))]
            for l in demands:
                st.inst[v][l] = target
        return True

    def propose(self, s: int, st: _ChainState, rng: np.random.Generator) -> Optional[_ChainState]:
        chain = self.chains[s]
        new = st.copy()
        n_demands = len(chain.demands)
        n_choices = len(self.ctx.choices[s])
        if rng.random() < 0.6 or n_choices == 1:
            v = int(rng.integers(len(chain.vnfs)))
            instances = sorted(set(new.inst[v]))
            source = instances[int(rng.integers(len(instances)))]
            group = [l for l in range(n_demands) if new.inst[v][l] == source]
            if not self.single and len(group) > 1 and rng.random() < 0.5:
                group = [group[int(rng.integers(len(group)))]]
            candidates = [x for x in self.valid_servers(s, new, v, group) if x != source]
            if not candidates:
                return None
            existing = [x for x in candidates if x in instances]
            if existing and rng.random() < 0.5:
                candidates = existing
            target = candidates[int(rng.integers(len(candidates)))]
            for l in group:
                new.inst[v][l] = target
            return new
        if self.single or rng.random() < 0.5:
            group = list(range(n_demands))
        else:
            group = [int(rng.integers(n_demands))]
        current = new.route[group[0]]
        options = [c for c in range(n_choices) if c != current]
        choice = options[int(rng.integers(len(options)))]
        for l in group:
            new.route[l] = choice
        if not self.repair(s, new, group, rng):
            return None
        return new

    def greedy(self) -> Optional[List[_ChainState]]:
        if self.ctx.is_initial:
            return self._first_fit()
        states = []
        initial = self.ctx.initial
        for s, chain in enumerate(self.chains):
            inst = [
                [initial.usage.get((s, v, l), initial.server(s, v)) for l in range(len(chain.demands))]
                for v in range(len(chain.vnfs))
            ]
            state = None
            for c in self._preferred_choices(s):
                candidate = _ChainState(route=[c] * len(chain.demands), inst=[list(r) for r in inst])
                if self.structurally_ok(s, candidate):
                    state = candidate
                    break
            if state is None:
                logger.debug(f"Initial placement of chain {chain.id} fits no route; repairing")
                state = _ChainState(route=[0] * len(chain.demands), inst=inst)
                if not self.repair(s, state, list(range(len(chain.demands))), np.random.default_rng(s)):
                    return None
                if not self.structurally_ok(s, state):
                    return None
            states.append(state)
        return states

    def _preferred_choices(self, s: int) -> List[int]:
        choices = self.ctx.choices[s]
        route = self.ctx.initial.routes.get(s)
        order = list(range(len(choices)))
        if route is not None:
            match = [c for c, ch in enumerate(choices) if ch.paths[0].nodes == route.nodes]
            order = match + [c for c in order if c not in match]
        return order

    def _first_fit(self) -> Optional[List[_ChainState]]:
        """Pack chains onto as few servers as possible, first route that fits wins."""
        server = np.zeros(len(self.capacity))
        link = np.zeros(len(self.link_capacity))
        hosted = np.zeros(len(self.capacity))
        states: List[_ChainState] = []
        for s, chain in enumerate(self.chains):
            demands = list(range(len(chain.demands)))
            total = sum(d.bandwidth for d in chain.demands)
            chosen = None
            fallback = None
            for c in range(len(self.ctx.choices[s])):
                st = _ChainState(route=[c] * len(demands), inst=[[0] * len(demands) for _ in chain.vnfs])
                trial = server.copy()
                placed = True
                for v, vnf in enumerate(chain.vnfs):
                    lows = []
                    for l in demands:
                        pos = self.positions(self.path(s, c, l))
                        lows.append((pos, pos.get(self.node_of[st.inst[v - 1][l]], -1) if v > 0 else -1))
                    ok = None
                    for pos, low in lows:
                        here = {x for node, k in pos.items() if k >= low for x in self.servers_at.get(node, [])}
                        ok = here if ok is None else ok & here
                    if not ok:
                        placed = False
                        break
                    need = vnf.load_ratio * total / self.capacity
                    ranked = sorted(ok, key=lambda x: (hosted[x] == 0 and trial[x] == 0, x))
                    fits = [x for x in ranked if trial[x] + need[x] <= 1.0 + CAPACITY_TOLERANCE]
                    target = fits[0] if fits else ranked[0]
                    if not fits:
                        placed = False
                    trial[target] += need[target]
                    for l in demands:
                        st.inst[v][l] = target
                if fallback is None and all(len(set(r)) == 1 for r in st.inst) and self.structurally_ok(s, st):
                    fallback = st
                if not placed:
                    continue
                chain_loads = self.loads(s, st)
                if np.all(link + chain_loads.link <= 1.0 + CAPACITY_TOLERANCE):
                    chosen = st
                    break
            chosen = chosen or fallback
            if chosen is None:
                logger.debug(f"No route can host chain {chain.id}")
                return None
            chain_loads = self.loads(s, chosen)
            server += chain_loads.server
            link += chain_loads.link
            hosted += chain_loads.hosted
            states.append(chosen)
        return states

    def to_values(self, states: List[_ChainState]) -> np.ndarray:
        model, routing = self.model, self.ctx.routing
        values = np.zeros(len(model.variables))
        for s, st in enumerate(states):
            chain = self.chains[s]
            for c in set(st.route):
                values[model.position(var_key("rs", (s, c), routing))] = 1.0
            for l, c in enumerate(st.route):
                values[model.position(var_key("rd", (s, l, c), routing))] = 1.0
            for v in range(len(chain.vnfs)):
                for l, x in enumerate(st.inst[v]):
                    values[model.position(var_key("fd", (s, v, x, l), routing))] = 1.0
                    values[model.position(var_key("f", (s, v, x), routing))] = 1.0
        return complete_assignment(model, values)


def _local_search(
    search: _Search,
    start: List[_ChainState],
    rng: np.random.Generator,
    budget: SolveBudget,
    annealing: bool,
    temperature: float,
    cooling: float,
    started: float,
) -> Tuple[Optional[List[_ChainState]], float, int]:
    states = [st.copy() for st in start]
    parts = [search.loads(s, st) for s, st in enumerate(states)]
    server = sum((p.server for p in parts), np.zeros(len(search.capacity)))
    link = sum((p.link for p in parts), np.zeros(len(search.link_capacity)))
    hosted = sum((p.hosted for p in parts), np.zeros(len(search.capacity)))
    migration = sum(p.migration for p in parts)
    objective, overload = search.score(server, link, hosted, migration)
    current = objective + OVERLOAD_PENALTY * overload
    best_states = [st.copy() for st in states] if overload <= CAPACITY_TOLERANCE else None
    best = objective if best_states is not None else math.inf

    iterations = 0
    if not states:
        return best_states, best, iterations
    for _ in range(budget.max_iterations):
        if budget.max_wall_time is not None and time.perf_counter() - started > budget.max_wall_time:
            break
        iterations += 1
        s = int(rng.integers(len(states)))
        proposal = search.propose(s, states[s], rng)
        if proposal is None or not search.structurally_ok(s, proposal):
            temperature *= cooling
            continue
        new_part = search.loads(s, proposal)
        old_part = parts[s]
        n_server = server - old_part.server + new_part.server
        n_link = link - old_part.link + new_part.link
        n_hosted = hosted - old_part.hosted + new_part.hosted
        n_migration = migration - old_part.migration + new_part.migration
        n_objective, n_overload = search.score(n_server, n_link, n_hosted, n_migration)
        candidate = n_objective + OVERLOAD_PENALTY * n_overload
        delta = candidate - current
        accept = delta <= 0
        if not accept and annealing and temperature > 0:
            accept = rng.random() < math.exp(-delta / temperature)
        temperature *= cooling
        if not accept:
            continue
        states[s], parts[s] = proposal, new_part
        server, link, hosted, migration = n_server, n_link, n_hosted, n_migration
        current = candidate
        if n_overload <= CAPACITY_TOLERANCE and n_objective < best - 1e-12:
            best, best_states = n_objective, [st.copy() for st in states]
    return best_states, best, iterations


@with_solver_error_handling
def solve_heuristic(
    model: ModelInstance,
    rng_seed: int = 0,
    budget: Optional[SolveBudget] = None,
    restarts: int = 1,
    annealing: bool = False,
    initial_temperature: float = 0.05,
    cooling: float = 0.995,
) -> Solution:
    """Greedy construction followed by seeded local search; best of ``restarts`` runs."""
    budget = budget or SolveBudget()
    started = time.perf_counter()
    stats = SolverStats()
    search = _Search(model)

    start = search.greedy()
    if start is None:
        stats.wall_time = time.perf_counter() - started
        logger.info("Greedy construction found no structurally feasible start")
        return Solution.infeasible(model, stats, "no feasible greedy construction")

    best_states: Optional[List[_ChainState]] = None
    best = math.inf
    for r in range(max(1, restarts)):
        rng = np.random.default_rng(derive_seed(rng_seed, "restart", r))
        states, objective, iterations = _local_search(
            search, start, rng, budget, annealing, initial_temperature, cooling, started,
        )
        stats.iterations += iterations
        stats.restarts += 1
        if states is not None and objective < best - 1e-12:
            best, best_states = objective, states
        logger.debug(f"Restart {r}: objective {objective:.9g} after {iterations} moves")

    stats.wall_time = time.perf_counter() - started
    if best_states is None:
        logger.info("Local search never reached a capacity-feasible state")
        return Solution.infeasible(model, stats, "capacity overload could not be repaired")

    values = search.to_values(best_states)
    report = verify(model, values)
    if not report.ok:
        logger.error(f"Heuristic produced an invalid assignment: {report.summary()}")
        return Solution.infeasible(model, stats, report.summary())
    logger.info(f"Local search feasible: objective {report.objective:.9g}, {stats.iterations} moves")
    return Solution(
        model=model, values=values, objective_value=report.objective,
        status=SolveStatus.FEASIBLE, stats=stats,
    )
