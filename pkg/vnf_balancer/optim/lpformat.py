"""CPLEX LP text export and import of model instances."""
from typing import Dict, List, Optional, Tuple
import logging
import math
import re

from ..exceptions import LPFormatError
from .model import Constraint, ModelInstance, VarKey, Variable

logger = logging.getLogger(__name__)

LINE_WIDTH = 200

_SECTIONS = {
    "minimize": "objective", "minimum": "objective", "min": "objective",
    "subject to": "rows", "such that": "rows", "st": "rows", "s.t.": "rows",
    "bounds": "bounds", "bound": "bounds",
    "binaries": "binaries", "binary": "binaries", "bin": "binaries",
    "end": "end",
}
_TOKEN = re.compile(
    r"\s*(?:(?P<label>[A-Za-z_][\w.]*)\s*:"
    r"|(?P<sense><=|>=|=<|=>|=)"
    r"|(?P<sign>[+-])"
    r"|(?P<number>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?|(?i:inf(?:inity)?))"
    r"|(?P<name>[A-Za-z_][\w.]*))"
)


def _num(value: float) -> str:
    return format(value, ".17g")


def _expression(terms: List[Tuple[float, str]]) -> List[str]:
    parts = []
    for coef, name in terms:
        sign = "-" if coef < 0 else "+"
        magnitude = abs(coef)
        parts.append(f"{sign} {name}" if magnitude == 1.0 else f"{sign} {_num(magnitude)} {name}")
    return parts


def _wrap(head: str, parts: List[str]) -> List[str]:
    lines, line = [], head
    for part in parts:
        if len(line) + len(part) + 1 > LINE_WIDTH and line.strip():
            lines.append(line)
            line = "  "
        line = f"{line} {part}" if line.strip() else f"{line}{part}"
    lines.append(line)
    return lines


def export_lp(model: ModelInstance) -> str:
    """Render ``model`` in the CPLEX LP format; identical input gives identical text."""
    names = [v.name for v in model.variables]
    out: List[str] = []
    meta = " ".join(f"{k}={model.metadata[k]}" for k in sorted(model.metadata))
    out.append(f"\\ vnf_balancer model {meta}".rstrip())
    out.append("Minimize")
    objective = [(model.objective[j], names[j]) for j in sorted(model.objective)]
    if not objective and names:
        objective = [(0.0, names[0])]
    parts = _expression(objective) if any(c for c, _ in objective) else [f"0 {n}" for _, n in objective[:1]]
    out.extend(_wrap(" obj:", parts))
    out.append("Subject To")
    for con in model.constraints:
        terms = [(con.coefs[j], names[j]) for j in sorted(con.coefs)]
        parts = _expression(terms) if terms else [f"0 {names[0]}"]
        parts += [con.sense, _num(con.rhs)]
        out.extend(_wrap(f" {con.name}:", parts))
    out.append("Bounds")
    for var in model.variables:
        if var.binary:
            continue
        if var.upper is None or math.isinf(var.upper):
            out.append(f" {var.name} >= {_num(var.lower)}")
        else:
            out.append(f" {_num(var.lower)} <= {var.name} <= {_num(var.upper)}")
    binaries = [v.name for v in model.variables if v.binary]
    if binaries:
        out.append("Binaries")
        out.extend(_wrap("", binaries))
    out.append("End")
    return "\n".join(out) + "\n"


def _tokens(text: str, where: str) -> List[Tuple[str, str]]:
    tokens, pos = [], 0
    text = text.rstrip()
    while pos < len(text):
        match = _TOKEN.match(text, pos)
        if not match or match.end() == pos:
            raise LPFormatError(f"Unexpected input in {where} near '{text[pos:pos + 20]}'")
        kind = match.lastgroup
        tokens.append((kind, match.group(kind)))
        pos = match.end()
        while pos < len(text) and text[pos].isspace():
            pos += 1
    return tokens


def _split_sections(text: str) -> Dict[str, List[str]]:
    sections: Dict[str, List[str]] = {"objective": [], "rows": [], "bounds": [], "binaries": []}
    current: Optional[str] = None
    for raw in text.splitlines():
        line = raw.split("\\", 1)[0].rstrip()
        if not line.strip():
            continue
        keyword = line.strip().lower()
        if keyword in _SECTIONS:
            current = _SECTIONS[keyword]
            if current == "end":
                break
            continue
        if current is None:
            raise LPFormatError(f"Content before the objective section: '{line.strip()}'")
        sections[current].append(line)
    else:
        raise LPFormatError("Missing End section")
    return sections


def _number(tok: Tuple[str, str]) -> float:
    value = tok[1].lower()
    return math.inf if value.startswith("inf") else float(value)


def _parse_linear(tokens: List[Tuple[str, str]], i: int) -> Tuple[List[Tuple[float, str]], int]:
    terms: List[Tuple[float, str]] = []
    while i < len(tokens) and tokens[i][0] in ("sign", "number", "name"):
        sign = 1.0
        while tokens[i][0] == "sign":
            sign *= -1.0 if tokens[i][1] == "-" else 1.0
            i += 1
        coef = 1.0
        if tokens[i][0] == "number":
            coef = _number(tokens[i])
            i += 1
        if i >= len(tokens) or tokens[i][0] != "name":
            raise LPFormatError("Coefficient without a variable")
        terms.append((sign * coef, tokens[i][1]))
        i += 1
    return terms, i


def read_lp(text: str) -> ModelInstance:
    """Parse LP text produced by ``export_lp`` (or hand-written in the same dialect)."""
    sections = _split_sections(text)
    order: List[str] = []
    seen = set()

    def declare(name: str):
        if name not in seen:
            seen.add(name)
            order.append(name)

    bounds: Dict[str, Tuple[float, Optional[float]]] = {}
    for line in sections["bounds"]:
        toks = _tokens(line, "bounds")
        kinds = [k for k, _ in toks]
        if kinds == ["number", "sense", "name", "sense", "number"]:
            bounds[toks[2][1]] = (_number(toks[0]), _number(toks[4]))
            declare(toks[2][1])
        elif kinds == ["sign", "number", "sense", "name", "sense", "number"]:
            bounds[toks[3][1]] = (-_number(toks[1]), _number(toks[5]))
            declare(toks[3][1])
        elif kinds[:2] == ["name", "sense"]:
            value = _number(toks[-1]) * (-1.0 if kinds[2] == "sign" and toks[2][1] == "-" else 1.0)
            name, sense = toks[0][1], toks[1][1]
            lower, upper = bounds.get(name, (0.0, None))
            if sense in (">=", "=>"):
                lower = value
            elif sense in ("<=", "=<"):
                upper = value
            else:
                lower = upper = value
            bounds[name] = (lower, upper)
            declare(name)
        elif kinds == ["name", "name"] and toks[1][1].lower() == "free":
            bounds[toks[0][1]] = (-math.inf, None)
            declare(toks[0][1])
        else:
            raise LPFormatError(f"Unsupported bound line '{line.strip()}'")

    binaries = set()
    for line in sections["binaries"]:
        for kind, value in _tokens(line, "binaries"):
            if kind != "name":
                raise LPFormatError(f"Unexpected token '{value}' in binaries")
            binaries.add(value)
            declare(value)

    objective_tokens = _tokens(" ".join(sections["objective"]), "objective")
    i = 1 if objective_tokens and objective_tokens[0][0] == "label" else 0
    objective_terms, i = _parse_linear(objective_tokens, i)
    if i != len(objective_tokens):
        raise LPFormatError("Trailing tokens in objective")
    for _, name in objective_terms:
        declare(name)

    raw_rows: List[Tuple[str, List[Tuple[float, str]], str, float]] = []
    tokens = _tokens(" ".join(sections["rows"]), "constraints")
    i = 0
    while i < len(tokens):
        if tokens[i][0] == "label":
            name = tokens[i][1]
            i += 1
        else:
            name = f"r{len(raw_rows)}"
        terms, i = _parse_linear(tokens, i)
        if i + 1 >= len(tokens) or tokens[i][0] != "sense":
            raise LPFormatError(f"Row {name} lacks a comparison")
        sense = {"=<": "<=", "=>": ">="}.get(tokens[i][1], tokens[i][1])
        i += 1
        sign = 1.0
        if tokens[i][0] == "sign":
            sign = -1.0 if tokens[i][1] == "-" else 1.0
            i += 1
        rhs = sign * _number(tokens[i])
        i += 1
        for _, var in terms:
            declare(var)
        raw_rows.append((name, terms, sense, rhs))

    position = {name: j for j, name in enumerate(order)}
    variables = []
    for name in order:
        key = VarKey.parse(name)
        if name in binaries:
            variables.append(Variable(key=key, lower=0.0, upper=1.0, binary=True))
        else:
            lower, upper = bounds.get(name, (0.0, None))
            variables.append(Variable(key=key, lower=lower, upper=None if upper is None or math.isinf(upper) else upper))
    constraints = []
    for name, terms, sense, rhs in raw_rows:
        coefs: Dict[int, float] = {}
        for coef, var in terms:
            if coef != 0.0:
                coefs[position[var]] = coefs.get(position[var], 0.0) + coef
        constraints.append(Constraint(name=name, coefs=coefs, sense=sense, rhs=rhs))
    objective = {}
    for coef, var in objective_terms:
        if coef != 0.0:
            objective[position[var]] = objective.get(position[var], 0.0) + coef
    logger.debug(f"Read LP model: {len(variables)} variables, {len(constraints)} rows")
    return ModelInstance(variables=variables, constraints=constraints, objective=objective)


def canonical(model: ModelInstance):
    """Order-free description used to compare models (rows keyed by name)."""
    names = [v.name for v in model.variables]
    variables = {
        v.name: (v.lower, None if v.upper is None or math.isinf(v.upper) else v.upper, v.binary)
        for v in model.variables
    }
    rows = {
        c.name: (tuple(sorted((names[j], a) for j, a in c.coefs.items() if a != 0.0)), c.sense, c.rhs)
        for c in model.constraints
    }
    objective = tuple(sorted((names[j], a) for j, a in model.objective.items() if a != 0.0))
    return variables, rows, objective
