"""Utilization reports, CDF series and the cross-method comparison table."""
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple
import logging

import numpy as np
import pandas as pd
import yaml
from pydantic import BaseModel, Field

from ..exceptions import ReportError
from ..optim.costs import CostFunctionSet, sample_curve
from ..optim.model import (
    BINARY_THRESHOLD,
    InitialPlacement,
    Method,
    ModelInstance,
    cost_terms,
    count_migrations,
    count_replicas,
    var_key,
)
from ..optim.solution import Solution

logger = logging.getLogger(__name__)

DECIMALS = 6
UTILIZATION_TOLERANCE = 1e-9
HIGH_LOAD_THRESHOLDS = (0.8, 0.9)

SUMMARY_FILE = "summary.yaml"
SERVER_CDF_FILE = "server_cdf.dat"
LINK_CDF_FILE = "link_cdf.dat"
COMPARISON_FILE = "comparison.csv"
COST_FUNCTION_FILE = "cost_function.dat"

METHOD_ORDER = [m.value for m in Method]


class UtilizationReport(BaseModel):
    method: Optional[str] = None
    routing: str
    alpha: Optional[float] = None
    seed: int = 0
    status: str
    objective: Optional[float] = None
    cost_terms: Dict[str, float] = Field(default_factory=dict)
    nodes: int = 0
    iterations: int = 0
    per_server: List[Tuple[str, float]] = Field(default_factory=list)
    per_link: List[Tuple[str, float]] = Field(default_factory=list)
    server_mean: float = 0.0
    server_max: float = 0.0
    link_mean: float = 0.0
    link_max: float = 0.0
    servers_above: Dict[str, float] = Field(default_factory=dict, description="Fraction of servers above each threshold")
    links_above: Dict[str, float] = Field(default_factory=dict, description="Fraction of links above each threshold")
    migrations: int = Field(default=0, ge=0)
    replicas: int = Field(default=0, ge=0)

    @property
    def count_pair(self) -> str:
        return f"{self.migrations}-{self.replicas}"


def cdf(values: Sequence[float]) -> List[Tuple[float, float]]:
    """Empirical CDF: (distinct value, fraction of values <= it)."""
    if len(values) == 0:
        return []
    distinct, counts = np.unique(np.asarray(values, dtype=float), return_counts=True)
    fractions = np.cumsum(counts) / len(values)
    return list(zip(distinct.tolist(), fractions.tolist()))


def recompute_utilizations(model: ModelInstance, solution: Solution) -> Tuple[np.ndarray, np.ndarray]:
    """Server and link utilizations rebuilt from the binary decisions alone."""
    ctx = model.context
    routing = ctx.routing
    server = np.zeros(len(ctx.servers))
    link = np.zeros(len(ctx.links))
    link_index = {l.id: e for e, l in enumerate(ctx.links)}
    e_r = ctx.params.e_r if ctx.params is not None else 0.0
    for s, chain in enumerate(ctx.workload.chains):
        for v, vnf in enumerate(chain.vnfs):
            for x, (_, srv) in enumerate(ctx.servers):
                used = sum(
                    d.bandwidth
                    for l, d in enumerate(chain.demands)
                    if solution.value(var_key("fd", (s, v, x, l), routing)) > BINARY_THRESHOLD
                )
                u_v = vnf.load_ratio * used / srv.capacity
                if ctx.overhead:
                    placed = solution.value(var_key("f", (s, v, x), routing)) > BINARY_THRESHOLD
                    server[x] += (1.0 + e_r) * u_v + (1.0 / (srv.capacity * e_r) if placed else 0.0)
                else:
                    server[x] += u_v
        for l, demand in enumerate(chain.demands):
            for c, choice in enumerate(ctx.choices[s]):
                if solution.value(var_key("rd", (s, l, c), routing)) > BINARY_THRESHOLD:
                    for link_id in choice.paths[l].links:
                        e = link_index[link_id]
                        link[e] += demand.bandwidth / ctx.links[e].capacity
    return server, link


def _above(values: np.ndarray) -> Dict[str, float]:
    if values.size == 0:
        return {str(t): 0.0 for t in HIGH_LOAD_THRESHOLDS}
    return {str(t): float(np.mean(values > t)) for t in HIGH_LOAD_THRESHOLDS}


def compute_report(
    model: ModelInstance,
    solution: Solution,
    initial: Optional[InitialPlacement] = None,
    seed: int = 0,
) -> UtilizationReport:
    if solution.values is None:
        raise ReportError(f"Cannot report a solution with status {solution.status.value}")
    ctx = model.context
    server, link = recompute_utilizations(model, solution)
    if server.size and server.max() > 1.0 + UTILIZATION_TOLERANCE:
        raise ReportError(f"server utilization {server.max():.9g} exceeds capacity")
    if link.size and link.max() > 1.0 + UTILIZATION_TOLERANCE:
        raise ReportError(f"link utilization {link.max():.9g} exceeds capacity")
    server = np.clip(server, 0.0, 1.0)
    link = np.clip(link, 0.0, 1.0)
    return UtilizationReport(
        method=ctx.method.value if ctx.method else None,
        routing=ctx.routing.value,
        alpha=ctx.params.alpha if ctx.params else None,
        seed=seed,
        status=solution.status.value,
        objective=solution.objective_value,
        cost_terms=cost_terms(model, solution.values),
        nodes=solution.stats.nodes,
        iterations=solution.stats.iterations,
        per_server=[(srv.id, float(u)) for (_, srv), u in zip(ctx.servers, server)],
        per_link=[(l.id, float(u)) for l, u in zip(ctx.links, link)],
        server_mean=float(server.mean()) if server.size else 0.0,
        server_max=float(server.max()) if server.size else 0.0,
        link_mean=float(link.mean()) if link.size else 0.0,
        link_max=float(link.max()) if link.size else 0.0,
        servers_above=_above(server),
        links_above=_above(link),
        migrations=count_migrations(initial, solution) if initial is not None else 0,
        replicas=count_replicas(solution),
    )


def _r(value: Optional[float]) -> Optional[float]:
    return None if value is None else round(float(value), DECIMALS)


def summary_document(report: UtilizationReport) -> Dict:
    return {
        "method": report.method,
        "routing": report.routing,
        "alpha": report.alpha,
        "seed": report.seed,
        "status": report.status,
        "objective": _r(report.objective),
        "cost_terms": {k: _r(v) for k, v in report.cost_terms.items()},
        "solver": {"nodes": report.nodes, "iterations": report.iterations},
        "migrations": report.migrations,
        "replicas": report.replicas,
        "servers": {
            "mean": _r(report.server_mean),
            "max": _r(report.server_max),
            "above": {k: _r(v) for k, v in report.servers_above.items()},
            "utilization": {name: _r(u) for name, u in report.per_server},
        },
        "links": {
            "mean": _r(report.link_mean),
            "max": _r(report.link_max),
            "above": {k: _r(v) for k, v in report.links_above.items()},
            "utilization": {name: _r(u) for name, u in report.per_link},
        },
    }


def _write_series(path: Path, series: Sequence[Tuple[float, float]], header: str):
    lines = [f"# {header}"] + [f"{x:.{DECIMALS}f} {y:.{DECIMALS}f}" for x, y in series]
    path.write_text("\n".join(lines) + "\n")


def comparison_table(reports: Sequence[UtilizationReport]) -> pd.DataFrame:
    """Methods as rows, alpha values as columns, "migrations-replicas" cells."""
    if not reports:
        return pd.DataFrame()
    frame = pd.DataFrame(
        [
            {"method": r.method, "alpha": f"{r.alpha:g}", "counts": r.count_pair}
            for r in reports
        ]
    )
    table = frame.pivot(index="method", columns="alpha", values="counts")
    methods = [m for m in METHOD_ORDER if m in table.index]
    alphas = sorted(table.columns, key=float)
    return table.loc[methods, alphas].rename_axis(columns=None)


def write_comparison(reports: Sequence[UtilizationReport], path: Path):
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        comparison_table(reports).to_csv(path, lineterminator="\n")
    except OSError as e:
        logger.error(f"Error writing comparison table {path}: {str(e)}")
        raise ReportError(f"Failed to write {path}: {str(e)}")


def write_report(report: UtilizationReport, out_dir: Path) -> List[Path]:
    """Write summary, server/link CDFs and a one-cell comparison table into ``out_dir``."""
    out_dir = Path(out_dir)
    files = [out_dir / SUMMARY_FILE, out_dir / SERVER_CDF_FILE, out_dir / LINK_CDF_FILE, out_dir / COMPARISON_FILE]
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        with open(files[0], "w") as f:
            yaml.safe_dump(summary_document(report), f, sort_keys=False)
        _write_series(files[1], cdf([round(u, DECIMALS) for _, u in report.per_server]), "server_utilization fraction")
        _write_series(files[2], cdf([round(u, DECIMALS) for _, u in report.per_link]), "link_utilization fraction")
    except OSError as e:
        logger.error(f"Error writing report into {out_dir}: {str(e)}")
        raise ReportError(f"Failed to write report into {out_dir}: {str(e)}")
    if report.method is not None and report.alpha is not None:
        write_comparison([report], files[3])
    else:
        files = files[:3]
    logger.debug(f"Report written to {out_dir}")
    return files


def write_cost_function(cfs: CostFunctionSet, path: Path, points: int = 101):
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        _write_series(path, sample_curve(cfs, points), "utilization cost")
    except OSError as e:
        logger.error(f"Error writing cost curve {path}: {str(e)}")
        raise ReportError(f"Failed to write {path}: {str(e)}")
