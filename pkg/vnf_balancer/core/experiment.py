"""Experiment pipeline: topology, workload, initial placement, then every (method, alpha) cell."""
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, List, Optional, Union
import logging

import yaml

from ..config.settings import Backend, ExperimentConfig, Scenario
from ..exceptions import InfeasibleError, ParameterError, ReportError, SolverError, VerificationError
from ..network.paths import (
    EcmpCatalog,
    RouteCatalog,
    build_ecmp_catalogs,
    build_ecmp_route_catalogs,
    build_sdn_catalogs,
)
from ..network.topology import Topology, build_fat_tree, build_leaf_spine
from ..optim.costs import CostFunctionSet
from ..optim.exact import solve_exact
from ..optim.heuristic import solve_heuristic
from ..optim.lpformat import export_lp
from ..optim.model import (
    InitialPlacement,
    Method,
    ModelInstance,
    Routing,
    build_initial_placement_model,
    build_main_model,
)
from ..optim.solution import Solution, SolveStatus
from ..optim.verify import verify
from ..reporting.metrics import (
    COMPARISON_FILE,
    COST_FUNCTION_FILE,
    UtilizationReport,
    compute_report,
    write_comparison,
    write_cost_function,
    write_report,
)
from ..utils import derive_seed
from ..workload.chains import (
    Workload,
    generate_fat_tree_workload,
    generate_leaf_spine_workload,
    store_workload,
)

logger = logging.getLogger(__name__)

INPUTS_DIR = "inputs"

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_INVALID_CONFIG = 2


@dataclass(frozen=True)
class Cell:
    method: Method
    alpha: float

    @property
    def label(self) -> str:
        return f"{self.method.value}_a{self.alpha:g}"

    @classmethod
    def parse(cls, text: str) -> "Cell":
        """``"mgr,0.5"`` → Cell(mgr, 0.5)."""
        try:
            method, alpha = (part.strip() for part in text.split(","))
            value = float(alpha)
        except ValueError:
            raise ParameterError(f"Cell must read '<method>,<alpha>', got '{text}'")
        if not 0.0 <= value <= 1.0:
            raise ParameterError(f"alpha {value} outside [0, 1]")
        return cls(method=Method.parse(method), alpha=value)


@dataclass
class CellResult:
    cell: Cell
    status: str
    report: Optional[UtilizationReport] = None
    error: Optional[str] = None
    files: List[Path] = field(default_factory=list)

    @property
    def failed(self) -> bool:
        return self.report is None


@dataclass
class Prepared:
    """Everything shared by the cells of one run."""
    topology: Topology
    workload: Workload
    costs: CostFunctionSet
    initial_solution: Solution
    initial: InitialPlacement
    catalog: Union[RouteCatalog, EcmpCatalog]


@dataclass
class RunResult:
    results: List[CellResult]
    out_dir: Path

    @property
    def reports(self) -> List[UtilizationReport]:
        return [r.report for r in self.results if r.report is not None]

    @property
    def exit_code(self) -> int:
        return EXIT_FAILURE if any(r.failed for r in self.results) else EXIT_OK


class ExperimentRunner:
    def __init__(self, config: ExperimentConfig):
        self.config = config
        self._prepared: Optional[Prepared] = None

    @property
    def out_dir(self) -> Path:
        return Path(self.config.output.directory)

    def build_topology(self) -> Topology:
        topo = self.config.topology
        if self.config.scenario == Scenario.ECMP_FAT_TREE:
            return build_fat_tree(topo.pods, topo.servers_per_tor, topo.server_capacity, topo.link_capacity)
        return build_leaf_spine(
            topo.leaves, topo.spines, topo.servers_per_leaf, topo.server_capacity, topo.link_capacity,
        )

    def build_workload(self, topology: Topology) -> Workload:
        cfg, scenario = self.config.workload, self.config.scenario
        seed = derive_seed(self.config.seed, "workload")
        if scenario == Scenario.ECMP_FAT_TREE:
            return generate_fat_tree_workload(
                topology,
                pairs=cfg.pairs,
                demands_per_pair=cfg.demands_for(scenario),
                bandwidth=cfg.bandwidth_for(scenario),
                sfc=cfg.sfc_for(scenario),
                rng_seed=seed,
                num_sampled_pairs=cfg.num_sampled_pairs,
            )
        return generate_leaf_spine_workload(
            topology,
            chains_per_direction=cfg.chains_per_direction,
            demands_per_chain=cfg.demands_for(scenario),
            bandwidth=cfg.bandwidth_for(scenario),
            sfc=cfg.sfc_for(scenario),
            rng_seed=seed,
        )

    def solve(self, model: ModelInstance, seed: int, backend: Optional[Backend] = None) -> Solution:
        cfg = self.config.solver
        backend = backend or cfg.backend
        budget = cfg.budget()

        def heuristic() -> Solution:
            return solve_heuristic(
                model,
                rng_seed=seed,
                budget=budget,
                restarts=cfg.restarts,
                annealing=cfg.annealing,
                initial_temperature=cfg.initial_temperature,
                cooling=cfg.cooling,
            )

        if backend == Backend.HEURISTIC:
            return heuristic()
        warm = heuristic() if cfg.warm_start else None
        if warm is not None and not warm.status.has_solution:
            warm = None
        return solve_exact(model, budget, warm_start=warm)

    def prepare(self) -> Prepared:
        """Build the shared inputs and solve the initial placement once."""
        if self._prepared is not None:
            return self._prepared
        config = self.config
        routing = config.routing
        topology = self.build_topology()
        workload = self.build_workload(topology)

        if routing == Routing.ECMP:
            route_catalog = build_ecmp_route_catalogs(
                topology, workload, config.model.max_intermediate, derive_seed(config.seed, "routes"),
            )
        else:
            route_catalog = build_sdn_catalogs(
                topology, workload, config.model.max_intermediate, config.model.max_paths_per_chain,
            )
        initial_model = build_initial_placement_model(topology, workload, route_catalog, routing)
        initial_solution = self.solve(
            initial_model,
            derive_seed(config.seed, "initial"),
            config.solver.initial_backend or config.solver.backend,
        )
        if initial_solution.values is None:
            reason = initial_solution.certificate or initial_solution.status.value
            logger.error(f"Initial placement has no solution: {reason}")
            raise InfeasibleError(f"Initial placement failed: {reason}")
        initial = InitialPlacement.from_solution(initial_solution)
        logger.info(f"Initial placement uses {int(round(initial_solution.objective_value))} servers")

        if routing == Routing.ECMP:
            server_nodes = initial_model.context.server_nodes
            initial_nodes = {
                chain.id: initial.vnf_nodes(s, len(chain.vnfs), server_nodes)
                for s, chain in enumerate(workload.chains)
            }
            catalog = build_ecmp_catalogs(
                topology, workload, initial_nodes, config.model.max_intermediate,
                rng_seed=derive_seed(config.seed, "subsets"),
            )
        else:
            catalog = route_catalog

        self._prepared = Prepared(
            topology=topology,
            workload=workload,
            costs=config.cost.build(),
            initial_solution=initial_solution,
            initial=initial,
            catalog=catalog,
        )
        return self._prepared

    def build_cell_model(self, cell: Cell) -> ModelInstance:
        prepared = self.prepare()
        return build_main_model(
            prepared.topology,
            prepared.workload,
            prepared.catalog,
            prepared.initial,
            cell.method,
            self.config.routing,
            self.config.model.method_params(cell.alpha),
            prepared.costs,
        )

    def run_cell(self, cell: Cell) -> CellResult:
        """Build, solve, verify and summarise one (method, alpha) cell."""
        prepared = self.prepare()
        try:
            model = self.build_cell_model(cell)
            solution = self.solve(model, derive_seed(self.config.seed, "cell", cell.method.value, cell.alpha))
            if solution.values is None:
                detail = solution.certificate or "no incumbent"
                logger.warning(f"Cell {cell.label}: {solution.status.value} ({detail})")
                return CellResult(cell=cell, status=solution.status.value, error=detail)
            check = verify(model, solution.values, claimed_objective=solution.objective_value)
            if not check.ok:
                raise VerificationError(check.summary())
            report = compute_report(model, solution, prepared.initial, seed=self.config.seed)
        except (VerificationError, ReportError) as e:
            logger.error(f"Cell {cell.label} failed verification: {str(e)}")
            return CellResult(cell=cell, status="verification_failed", error=str(e))
        except SolverError as e:
            logger.error(f"Cell {cell.label} solver error: {str(e)}")
            return CellResult(cell=cell, status="error", error=str(e))
        if solution.status == SolveStatus.BUDGET_EXHAUSTED:
            logger.warning(f"Cell {cell.label}: budget exhausted, reporting the incumbent")
        logger.info(
            f"Cell {cell.label}: {solution.status.value}, objective {solution.objective_value:.6f}, "
            f"{report.count_pair} migrations-replicas"
        )
        return CellResult(cell=cell, status=solution.status.value, report=report)

    def write_inputs(self, out_dir: Path):
        prepared = self.prepare()
        inputs = out_dir / INPUTS_DIR
        try:
            inputs.mkdir(parents=True, exist_ok=True)
            store_workload(prepared.workload, inputs / "workload.yaml")
            documents = {
                "topology.yaml": prepared.topology.to_document(),
                "initial_placement.yaml": prepared.initial.to_document(prepared.initial_solution.model.context),
                "catalog.yaml": prepared.catalog.to_document(),
            }
            for name, document in documents.items():
                with open(inputs / name, "w") as f:
                    yaml.safe_dump(document, f, sort_keys=False)
        except OSError as e:
            logger.error(f"Error writing inputs into {inputs}: {str(e)}")
            raise ReportError(f"Failed to write inputs into {inputs}: {str(e)}")

    def run(self, on_cell: Optional[Callable[[CellResult], None]] = None) -> RunResult:
        """Run every cell; reports are written in configuration order whatever the worker count."""
        self.prepare()
        cells = [Cell(method=m, alpha=a) for m, a in self.config.cells]
        workers = min(self.config.solver.workers, len(cells))
        results: List[CellResult] = []
        if workers > 1:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                for result in pool.map(self.run_cell, cells):
                    results.append(result)
                    if on_cell:
                        on_cell(result)
        else:
            for cell in cells:
                result = self.run_cell(cell)
                results.append(result)
                if on_cell:
                    on_cell(result)

        out_dir = self.out_dir
        if self.config.output.store_inputs:
            self.write_inputs(out_dir)
        for result in results:
            if result.report is not None:
                result.files = write_report(result.report, out_dir / result.cell.label)
        write_comparison([r.report for r in results if r.report is not None], out_dir / COMPARISON_FILE)
        write_cost_function(self.prepare().costs, out_dir / COST_FUNCTION_FILE)
        run = RunResult(results=results, out_dir=out_dir)
        logger.info(f"Run finished: {len(run.reports)}/{len(results)} cells reported into {out_dir}")
        return run

    def export_lp(self, cell: Cell, path: Optional[Path] = None) -> str:
        """LP text of one cell's model, also written to ``path`` when given."""
        text = export_lp(self.build_cell_model(cell))
        if path is not None:
            try:
                path.parent.mkdir(parents=True, exist_ok=True)
                path.write_text(text)
            except OSError as e:
                logger.error(f"Error writing LP file {path}: {str(e)}")
                raise ReportError(f"Failed to write {path}: {str(e)}")
        return text
