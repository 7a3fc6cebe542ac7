"""In-memory mixed-integer program model.

Everything downstream (LP relaxation, branch and bound, destroy operators)
works on :class:`MipInstance`, a normalized minimization MIP with explicit
variable bounds, sparse linear rows, and index sets for the binary, integer,
and discrete variables. Instances are immutable after construction; destroy
operators describe their sub-MIPs as :class:`SubMipDelta` objects that
:func:`apply_delta` materializes into a fresh instance without mutating the
base model.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Optional

import numpy as np

INTEGRALITY_TOL = 1e-6
FEASIBILITY_TOL = 1e-6


class VarKind(Enum):
    CONTINUOUS = "continuous"
    INTEGER = "integer"
    BINARY = "binary"


class Relation(Enum):
    LE = "<="
    GE = ">="
    EQ = "=="


class ModelError(ValueError):
    """Raised for structurally invalid instances or deltas."""


@dataclass(frozen=True)
class Variable:
    name: str
    lower: float = 0.0
    upper: float = math.inf
    kind: VarKind = VarKind.CONTINUOUS

    def __post_init__(self):
        if self.lower > self.upper:
            raise ModelError(f"variable {self.name}: lower {self.lower} > upper {self.upper}")
        if self.kind is VarKind.BINARY and not (self.lower >= 0.0 and self.upper <= 1.0):
            raise ModelError(f"binary variable {self.name} has bounds outside [0, 1]")

    @property
    def is_discrete(self) -> bool:
        return self.kind is not VarKind.CONTINUOUS


@dataclass(frozen=True)
class LinearConstraint:
    name: str
    coeffs: dict[int, float]
    relation: Relation
    rhs: float

    def __post_init__(self):
        if not self.coeffs:
            raise ModelError(f"constraint {self.name} has no coefficients")


class MipInstance:
    """A minimization MIP over an ordered variable list.

    Maximization problems are normalized at ingest by negating the objective,
    so the objective here is always minimized. Dense views (bounds, objective
    vector, constraint matrix) are built lazily and cached; the instance
    itself is treated as immutable.
    """

    def __init__(self, name, variables, constraints, objective_coeffs,
                 objective_constant=0.0):
        self.name = str(name)
        self.variables: tuple[Variable, ...] = tuple(variables)
        self.constraints: tuple[LinearConstraint, ...] = tuple(constraints)
        self.objective_coeffs: dict[int, float] = dict(objective_coeffs)
        self.objective_constant = float(objective_constant)
        self._validate()
        self._dense: Optional[dict] = None

    def _validate(self):
        n = len(self.variables)
        for idx in self.objective_coeffs:
            if not 0 <= idx < n:
                raise ModelError(f"objective references invalid variable index {idx}")
        for con in self.constraints:
            for idx in con.coeffs:
                if not 0 <= idx < n:
                    raise ModelError(f"constraint {con.name} references invalid index {idx}")

    # -- index sets ---------------------------------------------------------

    @property
    def num_vars(self) -> int:
        return len(self.variables)

    @property
    def binary_indices(self) -> np.ndarray:
        return self._cache()["binary"]

    @property
    def integer_indices(self) -> np.ndarray:
        return self._cache()["integer"]

    @property
    def discrete_indices(self) -> np.ndarray:
        """Binary and general-integer indices, ascending."""
        return self._cache()["discrete"]

    @property
    def continuous_indices(self) -> np.ndarray:
        return self._cache()["continuous"]

    # -- dense views --------------------------------------------------------

    def _cache(self) -> dict:
        if self._dense is None:
            n = self.num_vars
            kinds = np.array([v.kind for v in self.variables], dtype=object)
            binary = np.array([i for i, v in enumerate(self.variables)
                               if v.kind is VarKind.BINARY], dtype=np.int64)
            integer = np.array([i for i, v in enumerate(self.variables)
                                if v.kind is VarKind.INTEGER], dtype=np.int64)
            discrete = np.array(sorted(set(binary.tolist()) | set(integer.tolist())),
                                dtype=np.int64)
            continuous = np.array([i for i in range(n) if i not in set(discrete.tolist())],
                                  dtype=np.int64)
            lower = np.array([v.lower for v in self.variables], dtype=np.float64)
            upper = np.array([v.upper for v in self.variables], dtype=np.float64)
            c = np.zeros(n, dtype=np.float64)
            for idx, coef in self.objective_coeffs.items():
                c[idx] = coef
            m = len(self.constraints)
            a = np.zeros((m, n), dtype=np.float64)
            rhs = np.zeros(m, dtype=np.float64)
            rel = np.zeros(m, dtype=np.int8)  # 0 LE, 1 GE, 2 EQ
            rel_code = {Relation.LE: 0, Relation.GE: 1, Relation.EQ: 2}
            for i, con in enumerate(self.constraints):
                for idx, coef in con.coeffs.items():
                    a[i, idx] = coef
                rhs[i] = con.rhs
                rel[i] = rel_code[con.relation]
            self._dense = {
                "kinds": kinds, "binary": binary, "integer": integer,
                "discrete": discrete, "continuous": continuous,
                "lower": lower, "upper": upper, "c": c,
                "a": a, "rhs": rhs, "rel": rel,
            }
        return self._dense

    @property
    def lower_bounds(self) -> np.ndarray:
        return self._cache()["lower"]

    @property
    def upper_bounds(self) -> np.ndarray:
        return self._cache()["upper"]

    @property
    def objective_vector(self) -> np.ndarray:
        return self._cache()["c"]

    @property
    def constraint_matrix(self) -> np.ndarray:
        return self._cache()["a"]

    @property
    def constraint_rhs(self) -> np.ndarray:
        return self._cache()["rhs"]

    @property
    def constraint_relations(self) -> np.ndarray:
        return self._cache()["rel"]

    def structurally_equal(self, other: "MipInstance") -> bool:
        return (self.name == other.name
                and self.variables == other.variables
                and self.constraints == other.constraints
                and self.objective_coeffs == other.objective_coeffs
                and self.objective_constant == other.objective_constant)

    def __repr__(self):
        return (f"MipInstance({self.name!r}, vars={self.num_vars}, "
                f"cons={len(self.constraints)})")


@dataclass(frozen=True)
class SolutionState:
    """A complete assignment with its cached objective value."""

    values: np.ndarray
    objective: float

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=np.float64)
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @classmethod
    def of(cls, instance: MipInstance, values) -> "SolutionState":
        return cls(np.asarray(values, dtype=np.float64),
                   evaluate_objective(instance, values))


@dataclass
class SubMipDelta:
    """A destroy operator's output over the single maintained base model.

    ``added_constraints`` may reference slack indices ``num_vars + j`` for the
    j-th entry of ``slack_vars``; slacks are appended as fresh continuous
    variables whose objective penalty only applies when the objective is
    replaced.
    """

    fixings: dict[int, float] = field(default_factory=dict)
    bound_changes: dict[int, tuple[float, float]] = field(default_factory=dict)
    added_constraints: list[LinearConstraint] = field(default_factory=list)
    objective_replacement: Optional[tuple[dict[int, float], float]] = None
    slack_vars: list[tuple[tuple[float, float], float]] = field(default_factory=list)

    def __post_init__(self):
        overlap = set(self.fixings) & set(self.bound_changes)
        if overlap:
            raise ModelError(f"delta fixes and re-bounds the same indices: {sorted(overlap)}")


@dataclass(frozen=True)
class FeasibilityReport:
    """Violations found by :func:`check_feasibility`; empty means feasible."""

    bound_violations: tuple[tuple[int, float], ...]
    integrality_violations: tuple[tuple[int, float], ...]
    constraint_violations: tuple[tuple[str, float], ...]

    @property
    def feasible(self) -> bool:
        return not (self.bound_violations or self.integrality_violations
                    or self.constraint_violations)


def evaluate_objective(instance: MipInstance, values) -> float:
    """Objective value of an assignment: coefficient dot product plus constant."""
    vals = np.asarray(values, dtype=np.float64)
    if vals.shape != (instance.num_vars,):
        raise ModelError(f"expected {instance.num_vars} values, got {vals.shape}")
    return float(instance.objective_vector @ vals + instance.objective_constant)


def check_feasibility(instance: MipInstance, values,
                      tol: float = FEASIBILITY_TOL) -> FeasibilityReport:
    """Report every bound, integrality, and constraint violation beyond tol."""
    vals = np.asarray(values, dtype=np.float64)
    if vals.shape != (instance.num_vars,):
        raise ModelError(f"expected {instance.num_vars} values, got {vals.shape}")
    if tol <= 0:
        raise ModelError("tolerance must be positive")
    cache = instance._cache()
    bounds = []
    below = cache["lower"] - vals
    above = vals - cache["upper"]
    for idx in np.nonzero(below > tol)[0]:
        bounds.append((int(idx), float(below[idx])))
    for idx in np.nonzero(above > tol)[0]:
        bounds.append((int(idx), float(above[idx])))
    integrality = []
    disc = cache["discrete"]
    if disc.size:
        frac = np.abs(vals[disc] - np.round(vals[disc]))
        for pos in np.nonzero(frac > tol)[0]:
            integrality.append((int(disc[pos]), float(frac[pos])))
    constraints = []
    if instance.constraints:
        lhs = cache["a"] @ vals
        rel, rhs = cache["rel"], cache["rhs"]
        for i, con in enumerate(instance.constraints):
            if rel[i] == 0:
                viol = lhs[i] - rhs[i]
            elif rel[i] == 1:
                viol = rhs[i] - lhs[i]
            else:
                viol = abs(lhs[i] - rhs[i])
            if viol > tol:
                constraints.append((con.name, float(viol)))
    return FeasibilityReport(tuple(sorted(bounds)), tuple(integrality), tuple(constraints))


def apply_delta(instance: MipInstance, delta: SubMipDelta) -> MipInstance:
    """Materialize the sub-MIP described by a delta over a base instance.

    The base is never mutated: untouched variable and constraint objects are
    shared with the result, so building the sub-MIP costs on the order of the
    delta size.
    """
    n = instance.num_vars
    variables = list(instance.variables)
    for idx, value in delta.fixings.items():
        if not 0 <= idx < n:
            raise ModelError(f"fixing references invalid index {idx}")
        var = variables[idx]
        value = float(value)
        if value < var.lower - FEASIBILITY_TOL or value > var.upper + FEASIBILITY_TOL:
            raise ModelError(
                f"fixing {var.name} to {value} outside bounds [{var.lower}, {var.upper}]")
        if var.is_discrete and abs(value - round(value)) > INTEGRALITY_TOL:
            raise ModelError(f"fixing discrete {var.name} to non-integral {value}")
        variables[idx] = replace(var, lower=value, upper=value)
    for idx, (new_lo, new_hi) in delta.bound_changes.items():
        if not 0 <= idx < n:
            raise ModelError(f"bound change references invalid index {idx}")
        var = variables[idx]
        lo = max(var.lower, float(new_lo))
        hi = min(var.upper, float(new_hi))
        if lo > hi:
            raise ModelError(f"bound change empties {var.name}: [{lo}, {hi}]")
        variables[idx] = replace(var, lower=lo, upper=hi)
    for j, ((lo, hi), _penalty) in enumerate(delta.slack_vars):
        variables.append(Variable(f"_slack_{j}", float(lo), float(hi), VarKind.CONTINUOUS))
    total = len(variables)
    constraints = list(instance.constraints)
    for con in delta.added_constraints:
        for idx in con.coeffs:
            if not 0 <= idx < total:
                raise ModelError(f"added constraint {con.name} references invalid index {idx}")
        constraints.append(con)
    if delta.objective_replacement is not None:
        coeffs, constant = delta.objective_replacement
        objective = dict(coeffs)
        for j, (_bounds, penalty) in enumerate(delta.slack_vars):
            if penalty:
                objective[n + j] = objective.get(n + j, 0.0) + penalty
        obj_constant = float(constant)
    else:
        objective = dict(instance.objective_coeffs)
        obj_constant = instance.objective_constant
    return MipInstance(instance.name, variables, constraints, objective, obj_constant)


def extend_with_slacks(instance: MipInstance, delta: SubMipDelta, values) -> np.ndarray:
    """Extend a base-space assignment with minimal feasible slack values.

    Each appended slack is set to the smallest value in its bound range that
    satisfies every added constraint it appears in, assuming each slack
    appears in added constraints only (true for all built-in operators).
    """
    vals = np.asarray(values, dtype=np.float64)
    n = instance.num_vars
    if vals.shape != (n,):
        raise ModelError(f"expected {n} values, got {vals.shape}")
    k = len(delta.slack_vars)
    if k == 0:
        return vals.copy()
    out = np.concatenate([vals, np.array([lo for (lo, _hi), _p in delta.slack_vars])])
    for con in delta.added_constraints:
        slack_terms = {idx: coef for idx, coef in con.coeffs.items() if idx >= n}
        if len(slack_terms) != 1:
            continue
        (sidx, scoef), = slack_terms.items()
        base_part = sum(coef * out[idx] for idx, coef in con.coeffs.items() if idx < n)
        residual = con.rhs - base_part  # need scoef * s (rel) residual
        (lo, hi), _ = delta.slack_vars[sidx - n]
        if con.relation is Relation.EQ:
            s = residual / scoef
        elif (con.relation is Relation.LE) == (scoef < 0.0):
            # scoef*s <= residual with scoef<0, or >= with scoef>0: a lower limit on s
            s = max(lo, residual / scoef)
        else:
            s = lo
        out[sidx] = min(max(s, lo), hi)
    return out
