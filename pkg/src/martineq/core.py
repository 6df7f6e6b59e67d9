"""Problem data model: extended reals, increment grids, transitions, validation.

A problem is the tuple (states, increment grid, transition, payoff, initial
state).  Payoffs are extended-real valued: -inf marks forbidden states, +inf is
reserved for solver verdicts and rejected in inputs.  Scaled-state ties
(state, base, factor) declare that a state's value tracks ``factor * value(base)``
during iteration; ray-reduced builders use them to encode positively
homogeneous tails on a finite state set.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np

from .errors import (
    BadCap,
    IndexOutOfRange,
    LengthMismatch,
    MissingZeroIncrement,
    NotIdentityAtZero,
    ParseError,
    PlusInfinityPayoff,
    ProblemValidationError,
)

NEG_INF = float("-inf")
POS_INF = float("inf")

#: A grid function is a 1-D float array indexed by state id; -inf and +inf
#: follow the extended-real conventions below.
GridFn = np.ndarray


def ext_add(*terms: float) -> float:
    """Extended-real sum with the convention  inf + (-inf) = -inf.

    Any -inf term absorbs everything, including +inf.
    """
    if any(t == NEG_INF for t in terms):
        return NEG_INF
    return math.fsum(terms) if len(terms) > 2 else sum(terms)


def ext_sum(terms) -> float:
    """`ext_add` over an iterable."""
    total = 0.0
    for t in terms:
        if t == NEG_INF:
            return NEG_INF
        total += t
    return total


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class IncrementGrid:
    """Strictly increasing finite grid of martingale increments containing 0."""

    increments: np.ndarray
    zero_index: int = field(init=False)

    def __post_init__(self):
        d = np.asarray(self.increments, dtype=float)
        if d.ndim != 1 or d.size < 1:
            raise ProblemValidationError("increment grid must be a nonempty 1-D array")
        if np.any(~np.isfinite(d)):
            raise ProblemValidationError("increments must be finite")
        if d.size > 1 and np.any(np.diff(d) <= 0):
            raise ProblemValidationError("increments must be strictly increasing")
        zeros = np.flatnonzero(d == 0.0)
        if zeros.size != 1:
            raise MissingZeroIncrement("increment grid must contain 0 exactly once")
        object.__setattr__(self, "increments", _readonly(d))
        object.__setattr__(self, "zero_index", int(zeros[0]))

    def __len__(self) -> int:
        return int(self.increments.size)


class LatticeTransition:
    """Implicit transition on a reflection-symmetric 1-D lattice.

    States with a lattice coordinate ``u`` (an integer multiple of ``unit``)
    move to the state registered at ``|u + k|`` when the increment is
    ``k * unit``; coordinates past the registered range fall into
    ``fallback_state``.  States without a coordinate are fixed by every
    increment (absorbing rows).  Rows are materialized on demand, which keeps
    wide ray-reduced problems far below explicit-table memory.
    """

    def __init__(self, unit, coord_units, inc_units, state_by_unit, fallback_state, n_states):
        self.unit = float(unit)
        self.coord_units = _readonly(np.asarray(coord_units, dtype=np.int64))
        self.inc_units = _readonly(np.asarray(inc_units, dtype=np.int64))
        self.state_by_unit = _readonly(np.asarray(state_by_unit, dtype=np.int64))
        self.fallback_state = int(fallback_state)
        self.n_states = int(n_states)
        self.is_self_row = _readonly(self.coord_units < 0)
        # every lattice row reaches the whole registered range iff the
        # increment span covers it from the extreme coordinates
        top = self.state_by_unit.size - 1
        cmax = int(self.coord_units.max(initial=-1))
        self.full_coverage = bool(
            cmax >= 0
            and self.inc_units.min() <= -(top + cmax)
            and self.inc_units.max() >= top
        )

    @property
    def shape(self):
        return (self.n_states, self.inc_units.size)

    def row(self, state: int) -> np.ndarray:
        """Successor state ids of `state` under every increment."""
        u = self.coord_units[state]
        if u < 0:
            return np.full(self.inc_units.size, state, dtype=np.int64)
        dest = np.abs(u + self.inc_units)
        out = np.full(self.inc_units.size, self.fallback_state, dtype=np.int64)
        inside = dest < self.state_by_unit.size
        out[inside] = self.state_by_unit[dest[inside]]
        return out

    def materialize(self) -> np.ndarray:
        return np.vstack([self.row(z) for z in range(self.n_states)])


TransitionLike = Union[np.ndarray, LatticeTransition]


@dataclass(frozen=True)
class ProblemSpec:
    """Unvalidated problem data; `validate_problem` turns it into a `Problem`.

    ties: sequence of (state, base, factor) declaring value ties
    ``value[state] = factor * value[base]`` maintained by the solver.
    """

    state_labels: tuple
    increments: IncrementGrid
    transition: TransitionLike
    payoff: np.ndarray
    initial_state: int
    ties: tuple = ()


class Problem:
    """A validated problem; the handle required by every solver operation.

    All arrays are read-only after validation, so instances are safe to share
    across workers.
    """

    def __init__(self, spec: ProblemSpec):
        self.labels = tuple(spec.state_labels)
        self.n_states = len(self.labels)
        self.increments = spec.increments.increments
        self.zero_index = spec.increments.zero_index
        self.transition = spec.transition
        self.payoff = _readonly(np.asarray(spec.payoff, dtype=float))
        self.z0 = int(spec.initial_state)
        ties = tuple((int(s), int(b), float(f)) for s, b, f in spec.ties)
        self.tie_states = _readonly(np.array([t[0] for t in ties], dtype=np.int64))
        self.tie_bases = _readonly(np.array([t[1] for t in ties], dtype=np.int64))
        self.tie_factors = _readonly(np.array([t[2] for t in ties], dtype=float))
        if isinstance(self.transition, np.ndarray):
            self.transition = _readonly(self.transition.astype(np.int64, copy=True))

    @property
    def n_increments(self) -> int:
        return int(self.increments.size)

    @property
    def has_lattice(self) -> bool:
        return isinstance(self.transition, LatticeTransition)

    def successor_row(self, state: int) -> np.ndarray:
        if self.has_lattice:
            return self.transition.row(state)
        return self.transition[state]

    def transition_table(self) -> np.ndarray:
        """Explicit (n_states, n_increments) table; materialized if implicit."""
        if self.has_lattice:
            return self.transition.materialize()
        return self.transition

    def default_cap(self, f: Optional[GridFn] = None) -> float:
        vals = self.payoff if f is None else np.asarray(f, dtype=float)
        finite = vals[np.isfinite(vals)]
        top = float(np.max(np.abs(finite))) if finite.size else 0.0
        return 1e6 * (1.0 + top)

    def check_cap(self, cap: float, f: GridFn) -> float:
        finite = f[np.isfinite(f)]
        floor = float(np.max(finite)) if finite.size else 0.0
        if not cap > floor:
            raise BadCap(f"cap {cap} must exceed the largest finite payoff {floor}")
        return float(cap)

    def grid_fn(self, values) -> GridFn:
        v = np.asarray(values, dtype=float)
        if v.shape != (self.n_states,):
            raise LengthMismatch(f"expected {self.n_states} values, got {v.shape}")
        return v


def validate_problem(spec: ProblemSpec) -> Problem:
    """Check every structural invariant and return the validated handle.

    Raises MissingZeroIncrement, NotIdentityAtZero, PlusInfinityPayoff or
    IndexOutOfRange on the first violated invariant.
    """
    n_states = len(spec.state_labels)
    if n_states < 1:
        raise ProblemValidationError("at least one state is required")
    n_inc = len(spec.increments)

    trans = spec.transition
    if isinstance(trans, LatticeTransition):
        if trans.shape != (n_states, n_inc):
            raise ProblemValidationError(
                f"transition shape {trans.shape} does not match ({n_states}, {n_inc})")
        if trans.state_by_unit.size and (
                trans.state_by_unit.min() < 0 or trans.state_by_unit.max() >= n_states):
            raise IndexOutOfRange("lattice registers an invalid state id")
        if not (0 <= trans.fallback_state < n_states):
            raise IndexOutOfRange("lattice fallback state out of range")
        zero_units = spec.increments.zero_index
        if trans.inc_units[zero_units] != 0:
            raise ProblemValidationError("lattice increment units disagree with the zero increment")
        coords = trans.coord_units
        live = coords >= 0
        if np.any(coords[live] >= trans.state_by_unit.size):
            raise IndexOutOfRange("lattice coordinate outside the registered range")
        back = trans.state_by_unit[coords[live]]
        bad = np.flatnonzero(back != np.flatnonzero(live))
        if bad.size:
            raise NotIdentityAtZero(int(np.flatnonzero(live)[bad[0]]))
    else:
        trans = np.asarray(trans)
        if trans.shape != (n_states, n_inc):
            raise ProblemValidationError(
                f"transition shape {trans.shape} does not match ({n_states}, {n_inc})")
        if not np.issubdtype(trans.dtype, np.integer):
            raise ProblemValidationError("transition entries must be integers")
        if trans.size and (trans.min() < 0 or trans.max() >= n_states):
            raise IndexOutOfRange("transition entry outside the state set")
        zero_col = trans[:, spec.increments.zero_index]
        bad = np.flatnonzero(zero_col != np.arange(n_states))
        if bad.size:
            raise NotIdentityAtZero(int(bad[0]))

    payoff = np.asarray(spec.payoff, dtype=float)
    if payoff.shape != (n_states,):
        raise LengthMismatch(f"payoff length {payoff.shape} does not match {n_states} states")
    if np.any(np.isnan(payoff)):
        raise ProblemValidationError("payoff contains NaN")
    if np.any(payoff == POS_INF):
        raise PlusInfinityPayoff("payoff contains +inf")

    if not (0 <= spec.initial_state < n_states):
        raise IndexOutOfRange(f"initial state {spec.initial_state} out of range")

    seen = set()
    for s, b, f in spec.ties:
        if not (0 <= s < n_states and 0 <= b < n_states):
            raise IndexOutOfRange("tie references an invalid state")
        if s == b or s in seen:
            raise ProblemValidationError("tied states must be distinct and tied at most once")
        if not (np.isfinite(f) and f > 0):
            raise ProblemValidationError("tie factors must be finite and positive")
        seen.add(s)
    for _, b, _ in spec.ties:
        if b in seen:
            raise ProblemValidationError("tie bases may not themselves be tied")

    return Problem(spec)


# ---------------------------------------------------------------------------
# problem files


def _payoff_entry(x: float):
    if x == NEG_INF:
        return "-inf"
    return float(x)


def problem_to_dict(problem: Union[Problem, ProblemSpec]) -> dict:
    if isinstance(problem, ProblemSpec):
        problem = validate_problem(problem)
    doc = {
        "states": [str(l) for l in problem.labels],
        "increments": [float(d) for d in problem.increments],
        "transition": problem.transition_table().tolist(),
        "payoff": [_payoff_entry(v) for v in problem.payoff],
        "z0": problem.z0,
    }
    if problem.tie_states.size:
        doc["ties"] = [[int(s), int(b), float(f)] for s, b, f in
                       zip(problem.tie_states, problem.tie_bases, problem.tie_factors)]
    return doc


def problem_from_dict(doc: dict) -> ProblemSpec:
    try:
        states = doc["states"]
        increments = doc["increments"]
        transition = doc["transition"]
        payoff_raw = doc["payoff"]
        z0 = doc["z0"]
    except KeyError as e:
        raise ParseError(f"problem file is missing the field {e.args[0]!r}") from None
    except TypeError:
        raise ParseError("problem file must be a JSON object") from None

    payoff = []
    for i, entry in enumerate(payoff_raw):
        if isinstance(entry, str):
            if entry.strip().lower() in ("-inf", "-infinity"):
                payoff.append(NEG_INF)
            else:
                raise ParseError(f"payoff[{i}]: the only string form allowed is \"-inf\"")
        elif isinstance(entry, (int, float)) and not isinstance(entry, bool):
            if math.isnan(entry):
                raise ParseError(f"payoff[{i}] is NaN")
            if entry == POS_INF:
                raise ParseError(f"payoff[{i}] is +inf; payoffs must stay below +inf")
            payoff.append(float(entry))
        else:
            raise ParseError(f"payoff[{i}] must be a number or \"-inf\"")

    try:
        trans = np.asarray(transition, dtype=np.int64)
    except (ValueError, TypeError):
        raise ParseError("transition must be a rectangular array of state indices") from None
    ties = tuple((int(s), int(b), float(f)) for s, b, f in doc.get("ties", ()))
    try:
        grid = IncrementGrid(np.asarray(increments, dtype=float))
    except ProblemValidationError as e:
        raise ParseError(f"increments: {e}") from None
    return ProblemSpec(
        state_labels=tuple(states),
        increments=grid,
        transition=trans,
        payoff=np.asarray(payoff, dtype=float),
        initial_state=int(z0),
        ties=ties,
    )


def _reject_json_constant(name: str):
    raise ParseError(f"non-finite JSON constant {name!r} is not permitted")


def load_problem(path) -> Problem:
    """Read a problem file and return the validated problem."""
    with open(path) as fh:
        try:
            doc = json.load(fh, parse_constant=_reject_json_constant)
        except json.JSONDecodeError as e:
            raise ParseError(f"{path}: {e}") from None
    try:
        return validate_problem(problem_from_dict(doc))
    except ProblemValidationError as e:
        raise ParseError(f"{path}: {e}") from None


def save_problem(problem: Union[Problem, ProblemSpec], path) -> None:
    doc = problem_to_dict(problem)
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=1)
        fh.write("\n")
